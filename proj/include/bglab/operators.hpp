#pragma once
// Dense discretizations of the Bergman projection and its relatives, plus
// weighted norm functionals.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bglab/geometry.hpp"

namespace bglab {

// entry (i,j) = K(node_i, node_j) * quad_weight_j
struct DiscretizedOperator {
    Eigen::MatrixXcd matrix;
    std::string kernel;
    double alpha = 0.0;
    nlohmann::json params = nlohmann::json::object();
    Eigen::Index size() const { return matrix.rows(); }
};

using KernelFn = std::function<cx(cx z, cx w)>;

// i^{2+α}/(z - w̄)^{2+α}
cx bergman_kernel(cx z, cx w, double alpha);
double berezin_kernel(cx z, cx w, double alpha);
double q_eps_kernel(cx z, cx w, double alpha, double eps);

// Default cap on the cell count for dense assembly
inline constexpr std::size_t kMaxCells = 8192;

DiscretizedOperator assemble(const Mesh& mesh, const std::string& name, const KernelFn& k, double alpha);
DiscretizedOperator assemble_bergman(const Mesh& mesh, double alpha);
DiscretizedOperator assemble_berezin_plus(const Mesh& mesh, double alpha);
DiscretizedOperator assemble_q_eps(const Mesh& mesh, double alpha, double eps);

// W^{-1} Mᴴ W, the adjoint in the dA_α quadrature inner product
Eigen::MatrixXcd quadrature_adjoint(const Eigen::MatrixXcd& m, const Eigen::VectorXd& w);

// entry (i,k) = Σ_{Q ∋ node_i, node_k} w_k / mass(Q); apply to |f|
Eigen::MatrixXd sparse_averaging(const Mesh& mesh, const BoxFamily& fam, System s);

struct SparseBForms {
    Eigen::MatrixXd a_b, a_b_star;
};
// (1/|Q|)∫|b - b_Q||f| 1_Q and |b - b_Q| (1/|Q|)∫|f| 1_Q
SparseBForms sparse_b_forms(const Mesh& mesh, const BoxFamily& fam, System s, const Eigen::VectorXcd& b);

Eigen::VectorXd dyadic_maximal(const Mesh& mesh, const BoxFamily& fam, System s, const Eigen::VectorXd& f);

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& P, const Eigen::VectorXcd& b);
// (I - P) diag(b) P
Eigen::MatrixXcd hankel(const Eigen::MatrixXcd& P, const Eigen::VectorXcd& b);

// φ = 1 on [0, η/2], 0 on [η, ∞), smooth exp transition in between
double bump(double t, double eta);
// K⁰..K³ in the order of the split; their sum is the Bergman matrix
std::array<DiscretizedOperator, 4> kernel_split(const Mesh& mesh, double alpha, double eta);

struct WeightedNormResult {
    double value = 0.0;
    int iterations = 0;       // Gram applications
    double residual = 0.0;    // ‖Gv - θv‖/θ
    bool converged = false;
    Eigen::VectorXcd vector;  // extremal function in L²(μ), node values
};

struct NormOptions {
    double tol = 1e-8;
    int max_iter = 5000;
    std::uint64_t seed = 1;
};

// matrix-free operator on node values; apply_adjoint is the plain conjugate transpose
struct LinearOperator {
    Eigen::Index n = 0;
    std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)> apply, apply_adjoint;
    // borrows M, which must outlive the result
    static LinearOperator of(const Eigen::MatrixXcd& M);
};

// ‖T‖_{L²(μ)→L²(λ)}: top singular value of Λ^{1/2} W^{1/2} T W^{-1/2} M^{-1/2}
WeightedNormResult weighted_operator_norm(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& lambda, const Mesh& mesh,
                                          const NormOptions& opt = {});
WeightedNormResult weighted_operator_norm(const LinearOperator& T, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& lambda, const Mesh& mesh,
                                          const NormOptions& opt = {});
double hilbert_schmidt_norm(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                            const Mesh& mesh);

struct SingularValues {
    std::vector<double> values;  // decreasing
    int iterations = 0;
    double residual = 0.0;       // worst relative Ritz residual of the returned set
    bool converged = false;
};
SingularValues singular_values(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                               const Mesh& mesh, int k, const NormOptions& opt = {});

// row-major complex128 little-endian plus a JSON sidecar (path + ".json")
void write_matrix_dump(const DiscretizedOperator& op, const std::string& path, const std::string& mesh_hash);

}  // namespace bglab
