#pragma once
// Complex median construction and the commutator lower-bound machinery built on
// the test boxes S_I above Q_I.

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bglab/geometry.hpp"
#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

namespace bglab {

struct ComplexMedian {
    cx center = 0.0;
    cx rotated = 0.0;                     // e^{iθ}·center, exact search coordinates
    double theta = 0.0;
    int grid_index = -1;                  // θ = grid_index·π/360
    std::array<double, 4> masses{};       // closed quadrants
    double total = 0.0;
    double min_fraction = 0.0;            // min mass / total
};

class MedianSearchError : public std::runtime_error {
public:
    MedianSearchError(const std::string& what, ComplexMedian best)
        : std::runtime_error(what), best(best) {}
    ComplexMedian best;
};

// rotated coordinate u = e^{iθ}(v - center)
// half-open quadrant index: arg u ∈ [jπ/2, (j+1)π/2), u = 0 goes to 0
int quadrant_of(cx v, cx center, double theta);
bool in_closed_quadrant(cx v, cx center, double theta, int j);
std::array<double, 4> quadrant_masses(const std::vector<std::pair<cx, double>>& values, cx center, double theta,
                                      bool closed);
// same, in the frame stored by the median
int quadrant_of(cx v, const ComplexMedian& m);
bool in_closed_quadrant(cx v, const ComplexMedian& m, int j);

// smallest value whose cumulative mass reaches half the total
double weighted_median(std::vector<std::pair<double, double>> values);

// θ over kπ/360, 0 <= k < 180; first candidate whose closed quadrants all hold
// 1/16 of the mass. Throws MedianSearchError carrying the best candidate.
ComplexMedian complex_median(const std::vector<std::pair<cx, double>>& values);

struct TestConfiguration {
    double a = 0.0, b = 0.0;     // I = [a, b)
    int frak_A = 8;
    double alpha = 0.0;
    Rect S;                      // S_I
    Mesh aux;                    // 16x16 grid on S_I
    std::vector<int> q_cells;    // main-mesh cells with node in Q_I
    Eigen::VectorXcd b_q, b_s;   // symbol at Q_I nodes (q_cells order) and S_I nodes
    ComplexMedian median;
    std::array<std::vector<int>, 4> F;  // positions in aux
    std::array<std::vector<int>, 4> B;  // positions in q_cells; B_j uses quadrant j+2
    double theta1 = 0.0;
    double c1 = 0.0, c2 = 0.0;   // range of A_α(Q_I)/|z-w̄|^{2+α}
    double angle_dev = 0.0;      // max |arg(z-w̄) - π/2|
    double step2_ratio = 0.0;    // max |Im e^{iθ₁}K| / Re e^{iθ₁}K over Q_I x S_I
    double step2_ratio_b1f1 = 0.0;
    double step2_const = 0.0;    // max |K| / Re e^{iθ₁}K
    double max_dist_pow = 0.0;   // max |z-w̄|^{2+α}
    double min_F_fraction = 0.0; // min_j A_α(F_j)/A_α(S_I)
    nlohmann::json to_json() const;
};

// throws std::domain_error when Q_I, S_I or Q_Ĩ leave the mesh coverage
TestConfiguration build_test_configuration(double a, double b, const Symbol& sym, const Mesh& mesh,
                                           const GlobalConfig& cfg);

struct LowerBound {
    double lhs = 0.0;           // (1/ν(Q_I)) ∫_{Q_I} |b - b_Q| dA_α
    double lhs_cm = 0.0;        // (2/ν(Q_I)) ∫_{Q_I} |b - b^cm| dA_α
    std::array<double, 4> middle{}, middle_plus{};  // (1/ν)∫_{B_j}|[b,P]χ_{F_j}|, same with P⁺
    std::array<double, 4> K{}, K_plus{};
    std::array<double, 4> cs_factor{};              // μ(F_j)^{1/2} λ^{-1}(B_j)^{1/2} / ν(Q_I)
    std::array<double, 4> image_norm{};             // ‖[b,P]χ_{F_j}‖_{L²(λ)} over B_j
    double chain_rhs = 0.0, chain_rhs_plus = 0.0;   // 2 Σ_j K_j middle_j
    bool chain_holds = false, chain_plus_holds = false;
    double step1_worst = 0.0;   // min over pairs of Re(e^{iφ_j}Δ) - |Δ|/√2
    double rhs_functional = 0.0;  // Σ_j middle_j
    nlohmann::json to_json() const;
};

LowerBound oscillation_lower_bound(const TestConfiguration& tc, const Weight& mu, const Weight& lambda,
                                   const Mesh& mesh);

struct Step2Report {
    double ratio = 0.0, ratio_b1f1 = 0.0, target = 0.0;
    double const_ratio = 0.0;   // max |K|/Re
    bool pass = false;
    int minimal_A = -1;         // first 𝔄 in 4..32 meeting the bound
    std::vector<std::pair<int, double>> sweep;   // (𝔄, ratio)
    std::vector<std::pair<int, double>> bracket; // (𝔄, c₂/c₁)
};
Step2Report step2_kernel_real_part_check(const TestConfiguration& tc, const Mesh& mesh);

// Removes from every F_j the cells lying in a later S_{I_ℓ}; returns the
// smallest surviving fraction A_α(F̃_j)/A_α(S_I).
double disjointify(std::vector<TestConfiguration>& seq);

}  // namespace bglab
