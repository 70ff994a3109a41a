#pragma once
// Symbols b and their oscillation norms over Carleson boxes and Bergman disks.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bglab/geometry.hpp"
#include "bglab/weights.hpp"

namespace bglab {

enum class SymbolClass { Holomorphic, General };

class Symbol {
public:
    virtual ~Symbol() = default;
    virtual std::string name() const = 0;
    virtual cx value(cx z) const = 0;
    virtual SymbolClass cls() const { return SymbolClass::General; }
    virtual std::optional<cx> derivative(cx) const { return std::nullopt; }
    virtual nlohmann::json spec() const { return {{"kind", name()}}; }
};

using SymbolPtr = std::shared_ptr<const Symbol>;
using SymbolFn = std::function<cx(cx)>;

// generic closed-form symbol
SymbolPtr make_symbol(std::string name, SymbolFn f, SymbolClass cls = SymbolClass::General,
                      SymbolFn derivative = nullptr, nlohmann::json spec = nullptr);

SymbolPtr constant_symbol(cx c);
SymbolPtr identity_symbol();
SymbolPtr square_symbol();
SymbolPtr holo_log_symbol();        // log(z+i)
SymbolPtr inverse_symbol();         // 1/(z+i)
SymbolPtr exp_symbol();             // e^{iz/2}
SymbolPtr sqrt_symbol();            // √(z+i)
// Σ_{k=k0}^{k1} e^{i 2^k z}; oscillation persists at every small scale
SymbolPtr lacunary_symbol(int k0 = -3, int k1 = 39);
SymbolPtr polynomial_symbol(std::vector<cx> coeffs);  // Σ c_k z^k
SymbolPtr log_im_symbol();          // log(Im z)
SymbolPtr bump_symbol();            // e^{-|z-i|²}
SymbolPtr disk_indicator_symbol(cx center, double radius);
// |Im z - 1/2|^{-1/4} on D(i/2, 1/4), zero elsewhere
SymbolPtr counterexample_symbol();
// Σ_{m=1}^{4} (a_m cos mx + b_m sin mx) e^{-my}, seeded normal coefficients
SymbolPtr trig_symbol(std::uint64_t seed);
SymbolPtr abs_inverse_symbol();     // 1/|z+i|
SymbolPtr conj_symbol(SymbolPtr b);
// c·b + d
SymbolPtr affine_symbol(SymbolPtr b, cx c, cx d);
SymbolPtr grid_symbol(std::vector<cx> node_values, const Mesh& mesh);

// {"kind":"holo_log"} | {"kind":"identity"} | {"kind":"counterexample_b"} | {"kind":"trig","seed":..}
// | {"kind":"grid","file":..} and the other library names
SymbolPtr symbol_from_json(const nlohmann::json& j, const Mesh* mesh = nullptr);

Eigen::VectorXcd symbol_values(const Symbol& b, const Mesh& mesh);

struct OscillationReport {
    double value = 0.0;
    int argmax = -1;                 // box id
    std::vector<double> per_box;     // indexed by box id
    // (level, sup over boxes of that level), levels descending
    std::vector<std::pair<int, double>> scale_trace;
    // (R, sup over boxes with |c_I| >= R)
    std::vector<std::pair<double, double>> far_trace;
    bool vmo_consistent = false;
};

// sup_I (1/ν(Q_I)) ∫_{Q_I} |b - b_Q| dA_α with node quadrature
OscillationReport bmo_nu_norm(const Eigen::VectorXcd& b, const Eigen::VectorXd& nu, const Mesh& mesh,
                              const BoxFamily& fam);
OscillationReport bmo_nu_norm(const Symbol& b, const Weight& nu, const Mesh& mesh, const BoxFamily& fam);

// both limit traces; verdict true when each trace ends below rel_threshold times the
// norm and its last step decreases
OscillationReport vmo_nu_trace(const Symbol& b, const Weight& nu, const Mesh& mesh, const BoxFamily& fam,
                               double rel_threshold = 0.25);

// L² oscillation with planar area; per_box holds L², l1_per_box the L¹ counterpart
struct Bmo2Report : OscillationReport {
    std::vector<double> l1_per_box;
};
Bmo2Report bmo2_norm(const Eigen::VectorXcd& b, const Mesh& mesh, const BoxFamily& fam);
Bmo2Report bmo2_norm(const Symbol& b, const Mesh& mesh, const BoxFamily& fam);

// node lists of the Bergman disks β(node_i, r)
struct DiskTable {
    double r = 0.0;
    std::vector<std::vector<int>> members;
    static DiskTable build(const Mesh& mesh, double r);
};

double bo_norm(const Eigen::VectorXcd& b, const DiskTable& disks);
double bo_norm(const Symbol& b, const Mesh& mesh, double r);
double ba_norm(const Eigen::VectorXcd& b, const Mesh& mesh, const DiskTable& disks);
double ba_norm(const Symbol& b, const Mesh& mesh, double r);

struct SplitResult {
    Eigen::VectorXcd b1, b2;  // node values
    double bo_b1 = 0.0, ba_b2 = 0.0, bmo2 = 0.0;
    double ratio = 0.0;       // (‖b1‖_BO + ‖b2‖_BA) / ‖b‖_BMO²
};
SplitResult split_bo_ba(const Symbol& b, const Mesh& mesh, const BoxFamily& fam, double r);

struct BdaResult {
    double value = 0.0;
    // (degree, sup residual)
    std::vector<std::pair<int, double>> by_degree;
};
// throws std::runtime_error when a disk holds too few nodes for the fit
BdaResult bda_norm(const Symbol& b, const Mesh& mesh, double r, int degree = 6);

struct ChainBound {
    double lhs = 0.0, rhs = 0.0;
    int length = 0;
};
// |b(z) - b_{Q_I}| against the chain sum of inflated-box oscillations
ChainBound oscillation_chain_bound(const Symbol& b, const DyadicInterval& I, cx z, const Mesh& mesh);

}  // namespace bglab
