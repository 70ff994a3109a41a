#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "bglab/operators.hpp"
#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

using namespace bglab;

namespace {
struct Fixture {
    GlobalConfig g;
    Mesh mesh;
    BoxFamily fam;
    Eigen::MatrixXcd P;
    explicit Fixture(int k_min = -2, double alpha = 0.0) {
        g.k_min = k_min;
        g.alpha = alpha;
        mesh = build_mesh(g);
        fam = BoxFamily::build(mesh, build_systems(g));
        P = assemble_bergman(mesh, alpha).matrix;
    }
};

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// dense version of the conjugated operator used by the weighted norms
Eigen::MatrixXcd conjugated(const Eigen::MatrixXcd& T, const Eigen::VectorXd& mu, const Eigen::VectorXd& lambda,
                            const Mesh& m) {
    Eigen::VectorXd l = (lambda.array() * m.weights.array()).sqrt();
    Eigen::VectorXd r = (mu.array() * m.weights.array()).rsqrt();
    return l.asDiagonal() * T * r.asDiagonal();
}
}  // namespace

TEST_CASE("Bergman kernel on the diagonal at i") {
    CHECK(std::abs(bergman_kernel({0, 1}, {0, 1}, 0.0) - 0.25) < 1e-15);
    // |K| = berezin
    cx z{0.3, 0.4}, w{-1.0, 2.0};
    for (double a : {0.0, 0.5, 2.0})
        CHECK(std::abs(bergman_kernel(z, w, a)) == doctest::Approx(berezin_kernel(z, w, a)).epsilon(1e-14));
}

TEST_CASE("commutator equals H_b minus the adjoint of H_conj(b)") {
    for (double alpha : {0.0, 1.0}) {
        Fixture f(-2, alpha);
        for (auto sym : {holo_log_symbol(), log_im_symbol(), trig_symbol(1)}) {
            Eigen::VectorXcd b = symbol_values(*sym, f.mesh);
            Eigen::MatrixXcd lhs = commutator(f.P, b);
            Eigen::MatrixXcd rhs = hankel(f.P, b) - quadrature_adjoint(hankel(f.P, b.conjugate()), f.mesh.weights);
            CHECK(max_abs(lhs - rhs) <= 1e-12 * std::max(1.0, max_abs(lhs)));
        }
    }
}

TEST_CASE("the discrete Bergman matrix is self-adjoint in the quadrature inner product") {
    Fixture f(-3);
    CHECK(max_abs(quadrature_adjoint(f.P, f.mesh.weights) - f.P) <= 1e-12 * max_abs(f.P));
}

TEST_CASE("kernel split pieces sum to the Bergman matrix") {
    Fixture f(-3, 0.5);
    for (double eta : {1.0, 0.25}) {
        auto parts = kernel_split(f.mesh, 0.5, eta);
        Eigen::MatrixXcd s = parts[0].matrix + parts[1].matrix + parts[2].matrix + parts[3].matrix;
        CHECK(max_abs(s - f.P) <= 1e-12 * max_abs(f.P));
    }
    CHECK(bump(0.0, 1.0) == 1.0);
    CHECK(bump(0.5, 1.0) == 1.0);
    CHECK(bump(1.0, 1.0) == 0.0);
    CHECK(bump(0.75, 1.0) > 0.0);
    CHECK(bump(0.75, 1.0) < 1.0);
}

TEST_CASE("entrywise modulus of P is P+") {
    Fixture f(-3, 0.5);
    Eigen::MatrixXcd Pp = assemble_berezin_plus(f.mesh, 0.5).matrix;
    CHECK((f.P.cwiseAbs() - Pp.real()).cwiseAbs().maxCoeff() <= 1e-12 * Pp.real().maxCoeff());
    CHECK(Pp.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sparse forms are adjoint to each other in the quadrature pairing") {
    Fixture f(-3);
    Eigen::VectorXcd b = symbol_values(*log_im_symbol(), f.mesh);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (System s : {System::D1, System::D2}) {
        auto forms = sparse_b_forms(f.mesh, f.fam, s, b);
        const auto& w = f.mesh.weights;
        for (int t = 0; t < 5; ++t) {
            Eigen::VectorXd x(w.size()), y(w.size());
            for (Eigen::Index i = 0; i < w.size(); ++i) x[i] = u(rng), y[i] = u(rng);
            double lhs = (w.array() * (forms.a_b * x).array() * y.array()).sum();
            double rhs = (w.array() * x.array() * (forms.a_b_star * y).array()).sum();
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
        }
        // A is the b = 1 shape of the same sums
        Eigen::MatrixXd A = sparse_averaging(f.mesh, f.fam, s);
        CHECK((A.array() >= 0.0).all());
    }
}

TEST_CASE("commutator with a constant symbol vanishes") {
    Fixture f(-2);
    Eigen::VectorXcd b = Eigen::VectorXcd::Constant(f.P.rows(), cx(2.0, -1.0));
    CHECK(max_abs(commutator(f.P, b)) <= 1e-13 * max_abs(f.P));
}

TEST_CASE("dyadic maximal function fixes constants and sits between averages and sup") {
    Fixture f(-3);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(f.mesh.size());
    for (auto& v : x) v = u(rng);
    Eigen::VectorXd ax = x.cwiseAbs();
    for (System s : {System::D1, System::D2}) {
        Eigen::VectorXd c = dyadic_maximal(f.mesh, f.fam, s, Eigen::VectorXd::Constant(x.size(), 2.5));
        Eigen::VectorXd M = dyadic_maximal(f.mesh, f.fam, s, ax);
        const auto& chains = f.fam.chains[static_cast<int>(s)];
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (chains[static_cast<std::size_t>(i)].empty()) continue;
            CHECK(c[i] == doctest::Approx(2.5).epsilon(1e-14));
            CHECK(M[i] <= ax.maxCoeff() + 1e-15);
            for (int id : chains[static_cast<std::size_t>(i)]) {
                const Box& q = f.fam.boxes[static_cast<std::size_t>(id)];
                double avg = 0.0;
                for (int k : q.cells) avg += ax[k] * f.mesh.weights[k];
                CHECK(M[i] >= avg / q.mass - 1e-14);
            }
        }
    }
}

TEST_CASE("q_eps refuses eps outside (0, (alpha+1)/2)") {
    Fixture f(-1);
    CHECK_THROWS_AS(assemble_q_eps(f.mesh, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(assemble_q_eps(f.mesh, 0.0, 0.5), std::invalid_argument);
    CHECK_NOTHROW(assemble_q_eps(f.mesh, 0.0, 0.25));
    CHECK_THROWS_AS(assemble_bergman(f.mesh, -1.0), std::invalid_argument);
}

TEST_CASE("weighted norm and singular values agree with a dense SVD") {
    Fixture f(-2);
    auto mu = node_values(*power_weight(0.3), f.mesh);
    auto lam = node_values(*power_weight(-0.2), f.mesh);
    Eigen::MatrixXcd T = commutator(f.P, symbol_values(*holo_log_symbol(), f.mesh));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(conjugated(T, mu, lam, f.mesh));
    auto sv = svd.singularValues();

    auto r = weighted_operator_norm(T, mu, lam, f.mesh);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(sv[0]).epsilon(1e-7));

    auto rl = weighted_operator_norm(LinearOperator::of(T), mu, lam, f.mesh);
    CHECK(rl.value == doctest::Approx(r.value).epsilon(1e-10));

    auto s = singular_values(T, mu, lam, f.mesh, 6);
    REQUIRE(s.values.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(s.values[static_cast<std::size_t>(k)] == doctest::Approx(sv[k]).epsilon(1e-6));

    CHECK(hilbert_schmidt_norm(T, mu, lam, f.mesh) == doctest::Approx(sv.norm()).epsilon(1e-12));
}

TEST_CASE("the unweighted norm of the discrete projection is close to one") {
    Fixture f(-3);
    auto one = Eigen::VectorXd::Ones(f.P.rows()).eval();
    auto r = weighted_operator_norm(f.P, one, one, f.mesh);
    CHECK(r.converged);
    CHECK(r.value > 0.85);
    CHECK(r.value < 1.2);
}

TEST_CASE("weighted norm rejects non-positive weights") {
    Fixture f(-1);
    Eigen::VectorXd mu = Eigen::VectorXd::Ones(f.P.rows());
    mu[0] = 0.0;
    CHECK_THROWS_AS(weighted_operator_norm(f.P, mu, mu, f.mesh), std::invalid_argument);
}
