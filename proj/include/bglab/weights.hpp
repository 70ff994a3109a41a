#pragma once
// Weights on the upper half-plane and their class diagnostics.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bglab/geometry.hpp"

namespace bglab {

class Weight {
public:
    virtual ~Weight() = default;
    virtual std::string name() const = 0;
    virtual double value(cx z) const = 0;
    // ∫_r w^p dA_alpha; +inf when the integral diverges.
    // Default: 16x16 tensor Gauss-Legendre.
    virtual double integral(const Rect& r, double alpha, double p) const;
    // exact (inf, sup) over the closed rectangle, when known
    virtual std::optional<std::pair<double, double>> extremes(const Rect&) const { return std::nullopt; }
    // (c, s) when w = c * (Im z)^s
    virtual std::optional<std::pair<double, double>> power_form() const { return std::nullopt; }
    virtual nlohmann::json spec() const = 0;
};

using WeightPtr = std::shared_ptr<const Weight>;

WeightPtr constant_weight(double c = 1.0);
WeightPtr power_weight(double s, double c = 1.0);
// |Im z - 1/2|^{-1/2}
WeightPtr counterexample_weight();
// |h'(z)|^eta for the Cayley map h(z) = (z - i)/(z + i)
WeightPtr conformal_weight(double eta);
// node values in mesh order; constant on each cell
WeightPtr grid_weight(std::vector<double> node_values, const Mesh& mesh);
WeightPtr reciprocal(WeightPtr w);
WeightPtr scaled(WeightPtr w, double c);
// w * (Im z)^t
WeightPtr times_y_power(WeightPtr w, double t);
// ν = μ^{1/2} λ^{-1/2}
WeightPtr bloom_nu(WeightPtr mu, WeightPtr lambda);

// {"kind":"power","s":..} | {"kind":"constant","c":..} | {"kind":"apr_counterexample"}
// | {"kind":"conformal","eta":..} | {"kind":"grid","file":..}; grid needs a mesh.
WeightPtr weight_from_json(const nlohmann::json& j, const Mesh* mesh = nullptr);

Eigen::VectorXd node_values(const Weight& w, const Mesh& mesh);
Eigen::VectorXd cell_integrals(const Weight& w, const Mesh& mesh, double p, double alpha);
Eigen::VectorXd cell_measures(const Mesh& mesh, double alpha);

// The part of Q_I below the mesh: (I ∩ [x_lo, x_hi]) x (0, y_bottom).
Rect bottom_strip(const Mesh& mesh, const Box& box);

// Box integral of w^p: member cells plus the exact bottom strip.
struct BoxIntegrator {
    const Mesh* mesh = nullptr;
    const Weight* w = nullptr;
    double p = 1.0, alpha = 0.0;
    Eigen::VectorXd cells;
    BoxIntegrator(const Weight& w, const Mesh& mesh, double p, double alpha);
    double operator()(const Box& box, bool closure = true) const;
};
double box_measure(const Mesh& mesh, const Box& box, double alpha, bool closure = true);

// Divergence flag threshold
inline constexpr double kInfinityFlag = 1e6;

struct Characteristic {
    double value = 0.0;
    bool infinite = false;
    int argmax = -1;  // box id (or sampled box index for APR)
};

Characteristic b2_characteristic(const Weight& w, const Mesh& mesh, const BoxFamily& fam);
// Upper boxes of both systems plus 8 shifted boxes per level; exact extremes
// when the weight provides them, else an n x n sample grid.
Characteristic apr_constant(const Weight& w, const GlobalConfig& cfg, int grid = 16,
                            bool exact_extremes = true);
Characteristic reverse_holder_constant(const Weight& w, const Mesh& mesh, const BoxFamily& fam, double r);
Characteristic binfty_characteristic(const Weight& w, const Mesh& mesh, const BoxFamily& fam, System s);

// min and max over boxes of μ(Q)^{1/2} λ^{-1}(Q)^{1/2} / ν(Q)
struct BloomBalance {
    double min_ratio = 0.0, max_ratio = 0.0;
};
BloomBalance bloom_balance(const WeightPtr& mu, const WeightPtr& lambda, const Mesh& mesh,
                           const BoxFamily& fam);

// sup ⟨ρ_ε σ⟩^{dA_{α-ε}} ⟨ρ_ε^{-1} σ^{-1}⟩^{dA_{α-3ε}} with ρ_ε = (Im z)^{-ε}
Characteristic further_weighted_b2(const WeightPtr& sigma, double eps, const Mesh& mesh,
                                   const BoxFamily& fam);

struct WeightReport {
    std::string name;
    Characteristic b2, apr, binfty;
    std::vector<std::pair<double, Characteristic>> rh;
    // (k_min, b2) while widening the scale range
    std::vector<std::pair<int, double>> convergence;
    bool b2_stable = true;
    nlohmann::json to_json() const;
};
WeightReport weight_report(const WeightPtr& w, const GlobalConfig& cfg,
                           const std::vector<double>& rh_exponents = {1.1, 1.25, 1.5, 2.0});

}  // namespace bglab
