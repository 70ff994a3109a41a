#include "bglab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "bglab/parallel.hpp"

namespace bglab {

cx bergman_kernel(cx z, cx w, double alpha) {
    cx d = z - std::conj(w);
    if (alpha == 0.0) return -1.0 / (d * d);
    // principal branches: Im d > 0 keeps arg d in (0, π)
    cx num = std::exp(cx(0.0, 0.5 * std::numbers::pi * (2.0 + alpha)));
    return num * std::exp(-(2.0 + alpha) * std::log(d));
}

double berezin_kernel(cx z, cx w, double alpha) {
    double d = std::abs(z - std::conj(w));
    return alpha == 0.0 ? 1.0 / (d * d) : std::pow(d, -(2.0 + alpha));
}

double q_eps_kernel(cx z, cx w, double alpha, double eps) {
    double d = std::abs(z - std::conj(w));
    return std::pow(z.imag(), -eps) * std::pow(w.imag(), -eps) * std::pow(d, -(2.0 + alpha - 2.0 * eps));
}

DiscretizedOperator assemble(const Mesh& mesh, const std::string& name, const KernelFn& k, double alpha) {
    const std::size_t n = mesh.size();
    if (n == 0) throw std::invalid_argument("empty mesh");
    if (n > kMaxCells) throw std::invalid_argument("mesh exceeds the dense cell cap");
    DiscretizedOperator op;
    op.kernel = name;
    op.alpha = alpha;
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // column-major storage: fill by columns for locality
    parallel_rows(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            const double wj = mesh.weights[static_cast<Eigen::Index>(j)];
            const cx zj = mesh.nodes[j];
            for (std::size_t i = 0; i < n; ++i)
                op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k(mesh.nodes[i], zj) * wj;
        }
    });
    return op;
}

DiscretizedOperator assemble_bergman(const Mesh& mesh, double alpha) {
    if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
    return assemble(mesh, "bergman", [alpha](cx z, cx w) { return bergman_kernel(z, w, alpha); }, alpha);
}

DiscretizedOperator assemble_berezin_plus(const Mesh& mesh, double alpha) {
    if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
    return assemble(mesh, "berezin_plus", [alpha](cx z, cx w) { return cx(berezin_kernel(z, w, alpha)); }, alpha);
}

DiscretizedOperator assemble_q_eps(const Mesh& mesh, double alpha, double eps) {
    if (!(eps > 0.0 && eps < 0.5 * (alpha + 1.0))) throw std::invalid_argument("eps must lie in (0, (alpha+1)/2)");
    auto op = assemble(mesh, "q_eps", [alpha, eps](cx z, cx w) { return cx(q_eps_kernel(z, w, alpha, eps)); }, alpha);
    op.params["eps"] = eps;
    return op;
}

Eigen::MatrixXcd quadrature_adjoint(const Eigen::MatrixXcd& m, const Eigen::VectorXd& w) {
    return w.cwiseInverse().asDiagonal() * m.adjoint() * w.asDiagonal();
}

Eigen::MatrixXd sparse_averaging(const Mesh& mesh, const BoxFamily& fam, System s) {
    const auto n = static_cast<Eigen::Index>(mesh.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int id : fam.ids_of(s)) {
        const Box& q = fam.boxes[static_cast<std::size_t>(id)];
        for (int k : q.cells) {
            double v = mesh.weights[k] / q.mass;
            for (int i : q.cells) A(i, k) += v;
        }
    }
    return A;
}

SparseBForms sparse_b_forms(const Mesh& mesh, const BoxFamily& fam, System s, const Eigen::VectorXcd& b) {
    const auto n = static_cast<Eigen::Index>(mesh.size());
    SparseBForms out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    std::vector<double> dev;
    for (int id : fam.ids_of(s)) {
        const Box& q = fam.boxes[static_cast<std::size_t>(id)];
        cx bq = 0.0;
        for (int c : q.cells) bq += b[c] * mesh.weights[c];
        bq /= q.mass;
        dev.resize(q.cells.size());
        for (std::size_t a = 0; a < q.cells.size(); ++a) dev[a] = std::abs(b[q.cells[a]] - bq);
        for (std::size_t ka = 0; ka < q.cells.size(); ++ka) {
            int k = q.cells[ka];
            double v = mesh.weights[k] / q.mass;
            for (std::size_t ia = 0; ia < q.cells.size(); ++ia) {
                int i = q.cells[ia];
                out.a_b(i, k) += dev[ka] * v;
                out.a_b_star(i, k) += dev[ia] * v;
            }
        }
    }
    return out;
}

Eigen::VectorXd dyadic_maximal(const Mesh& mesh, const BoxFamily& fam, System s, const Eigen::VectorXd& f) {
    std::vector<double> avg(fam.boxes.size(), 0.0);
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const Box& q = fam.boxes[i];
        if (q.system != s || q.cells.empty()) continue;
        double t = 0.0;
        for (int c : q.cells) t += std::abs(f[c]) * mesh.weights[c];
        avg[i] = t / q.mass;
    }
    const int si = static_cast<int>(s);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.size()));
    for (std::size_t c = 0; c < mesh.size(); ++c)
        for (int id : fam.chains[si][c]) out[static_cast<Eigen::Index>(c)] = std::max(out[static_cast<Eigen::Index>(c)], avg[static_cast<std::size_t>(id)]);
    return out;
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& P, const Eigen::VectorXcd& b) {
    return b.asDiagonal() * P - P * b.asDiagonal();
}

Eigen::MatrixXcd hankel(const Eigen::MatrixXcd& P, const Eigen::VectorXcd& b) {
    Eigen::MatrixXcd bP = b.asDiagonal() * P;
    return bP - P * bP;
}

double bump(double t, double eta) {
    if (t <= 0.5 * eta) return 1.0;
    if (t >= eta) return 0.0;
    double u = (eta - t) / (0.5 * eta);
    double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

std::array<DiscretizedOperator, 4> kernel_split(const Mesh& mesh, double alpha, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    auto near = [eta](cx z, cx w) { return bump(std::abs(z - std::conj(w)), eta); };
    auto small = [eta](cx z, cx w) { return bump(1.0 / (std::abs(z) + std::abs(w)), eta); };
    std::array<KernelFn, 4> k{
        [=](cx z, cx w) { return near(z, w) * (1.0 - small(z, w)) * bergman_kernel(z, w, alpha); },
        [=](cx z, cx w) { return near(z, w) * small(z, w) * bergman_kernel(z, w, alpha); },
        [=](cx z, cx w) { return (1.0 - near(z, w)) * small(z, w) * bergman_kernel(z, w, alpha); },
        [=](cx z, cx w) { return (1.0 - near(z, w)) * (1.0 - small(z, w)) * bergman_kernel(z, w, alpha); }};
    std::array<DiscretizedOperator, 4> out;
    for (int t = 0; t < 4; ++t) {
        out[static_cast<std::size_t>(t)] = assemble(mesh, "bergman_split_" + std::to_string(t), k[static_cast<std::size_t>(t)], alpha);
        out[static_cast<std::size_t>(t)].params["eta"] = eta;
    }
    return out;
}

namespace {

struct Conjugated {
    LinearOperator T;
    Eigen::VectorXd left, right;  // S = diag(left) T diag(right)
    Eigen::VectorXcd gram(const Eigen::VectorXcd& v) const {
        Eigen::VectorXcd u = left.asDiagonal() * T.apply(right.asDiagonal() * v);
        return right.asDiagonal() * T.apply_adjoint(left.asDiagonal() * u);
    }
};

Conjugated conjugate(const LinearOperator& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                     const Mesh& mesh) {
    if (T.n != static_cast<Eigen::Index>(mesh.size())) throw std::invalid_argument("operator size does not match the mesh");
    if (mu.size() != T.n || lambda.size() != T.n) throw std::invalid_argument("weight size mismatch");
    if ((mu.array() <= 0.0).any() || (lambda.array() <= 0.0).any())
        throw std::invalid_argument("weights must be positive at the nodes");
    return {T, (lambda.array() * mesh.weights.array()).sqrt().matrix(),
            (mesh.weights.array() * mu.array()).rsqrt().matrix()};
}

Eigen::VectorXcd random_unit(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cx(nd(rng), nd(rng));
    return v.normalized();
}

struct LanczosResult {
    std::vector<double> theta;  // top eigenvalues of G, decreasing
    Eigen::VectorXcd top_vector;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// Lanczos with full reorthogonalization on the Hermitian PSD operator G.
// Breakdowns restart from a fresh random direction orthogonal to the basis.
LanczosResult lanczos_top(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& G, Eigen::Index n, int k,
                          const NormOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    const int cap = static_cast<int>(std::min<Eigen::Index>(n, 800));
    std::vector<Eigen::VectorXcd> V;
    std::vector<double> a, b;  // diagonal, off-diagonal
    V.push_back(random_unit(n, rng));
    LanczosResult out;
    auto orth = [&](Eigen::VectorXcd& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& v : V) w -= v * v.dot(w);
    };
    for (int j = 0;; ++j) {
        Eigen::VectorXcd w = G(V[static_cast<std::size_t>(j)]);
        ++out.iterations;
        a.push_back(V[static_cast<std::size_t>(j)].dot(w).real());
        orth(w);
        double beta = w.norm();
        const int m = j + 1;
        bool full = m >= n || m >= cap || out.iterations >= opt.max_iter;
        bool check = m >= k && (m % 4 == 0 || full || beta < 1e-300);
        double scale = 0.0;
        for (double x : a) scale = std::max(scale, std::abs(x));
        bool breakdown = beta <= 1e-13 * std::max(scale, 1e-300);
        if (check || breakdown) {
            Eigen::MatrixXd Tm = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                Tm(i, i) = a[static_cast<std::size_t>(i)];
                if (i + 1 < m) Tm(i, i + 1) = Tm(i + 1, i) = b[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tm);
            const auto& ev = es.eigenvalues();
            const auto& S = es.eigenvectors();
            int kk = std::min(k, m);
            double top = std::max(ev[m - 1], 1e-300);
            double worst = 0.0;
            for (int t = 0; t < kk; ++t) {
                double r = breakdown ? 0.0 : beta * std::abs(S(m - 1, m - 1 - t));
                worst = std::max(worst, r / top);
            }
            bool done = (kk == k && worst <= opt.tol) || (breakdown && m >= n) || full;
            if (done) {
                out.residual = worst;
                out.converged = kk == k && worst <= opt.tol;
                for (int t = 0; t < kk; ++t) out.theta.push_back(std::max(ev[m - 1 - t], 0.0));
                out.top_vector = Eigen::VectorXcd::Zero(n);
                for (int i = 0; i < m; ++i) out.top_vector += V[static_cast<std::size_t>(i)] * S(i, m - 1);
                return out;
            }
        }
        if (breakdown) {
            // invariant subspace reached: continue in a new direction
            Eigen::VectorXcd r = random_unit(n, rng);
            orth(r);
            b.push_back(0.0);
            V.push_back(r.normalized());
        } else {
            b.push_back(beta);
            V.push_back(w / beta);
        }
    }
}

}  // namespace

LinearOperator LinearOperator::of(const Eigen::MatrixXcd& M) {
    if (M.rows() != M.cols()) throw std::invalid_argument("operator must be square");
    return {M.rows(), [&M](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return M * v; },
            [&M](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return M.adjoint() * v; }};
}

WeightedNormResult weighted_operator_norm(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& lambda, const Mesh& mesh, const NormOptions& opt) {
    return weighted_operator_norm(LinearOperator::of(T), mu, lambda, mesh, opt);
}

WeightedNormResult weighted_operator_norm(const LinearOperator& T, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& lambda, const Mesh& mesh, const NormOptions& opt) {
    auto C = conjugate(T, mu, lambda, mesh);
    auto r = lanczos_top([&](const Eigen::VectorXcd& v) { return C.gram(v); }, T.n, 1, opt);
    WeightedNormResult out;
    out.iterations = r.iterations;
    out.value = std::sqrt(r.theta.front());
    // explicit Rayleigh residual of the returned vector
    Eigen::VectorXcd v = r.top_vector.normalized();
    Eigen::VectorXcd g = C.gram(v);
    double theta = v.dot(g).real();
    out.residual = theta > 0.0 ? (g - theta * v).norm() / theta : 0.0;
    out.converged = out.residual <= std::max(opt.tol, 1e-12) || r.converged;
    out.value = std::sqrt(std::max(theta, 0.0));
    out.vector = C.right.asDiagonal() * v;
    return out;
}

double hilbert_schmidt_norm(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                            const Mesh& mesh) {
    auto C = conjugate(LinearOperator::of(T), mu, lambda, mesh);
    return (C.left.asDiagonal() * T * C.right.asDiagonal()).norm();
}

SingularValues singular_values(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                               const Mesh& mesh, int k, const NormOptions& opt) {
    if (k < 1 || k > T.rows()) throw std::invalid_argument("k must lie in [1, N]");
    auto C = conjugate(LinearOperator::of(T), mu, lambda, mesh);
    auto r = lanczos_top([&](const Eigen::VectorXcd& v) { return C.gram(v); }, T.rows(), k, opt);
    SingularValues out;
    for (double t : r.theta) out.values.push_back(std::sqrt(t));
    while (static_cast<int>(out.values.size()) < k) out.values.push_back(0.0);
    out.iterations = r.iterations;
    out.residual = r.residual;
    out.converged = r.converged;
    return out;
}

void write_matrix_dump(const DiscretizedOperator& op, const std::string& path, const std::string& mesh_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto n = op.matrix.rows();
    // row-major; the host is little-endian on every supported target
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double re = op.matrix(i, j).real(), im = op.matrix(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof re);
            out.write(reinterpret_cast<const char*>(&im), sizeof im);
        }
    std::ofstream side(path + ".json");
    side << nlohmann::json{{"N", n}, {"kernel", op.kernel}, {"alpha", op.alpha}, {"mesh_hash", mesh_hash},
                           {"params", op.params}}
                .dump(1)
         << "\n";
}

}  // namespace bglab
