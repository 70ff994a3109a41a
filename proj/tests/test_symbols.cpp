#include <doctest.h>

#include <cmath>
#include <random>

#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

using namespace bglab;

namespace {
struct Fixture {
    GlobalConfig g;
    Mesh mesh;
    BoxFamily fam;
    explicit Fixture(int k_min = -4) {
        g.k_min = k_min;
        mesh = build_mesh(g);
        fam = BoxFamily::build(mesh, build_systems(g));
    }
};
}  // namespace

TEST_CASE("closed-form symbol values") {
    const cx i{0, 1};
    CHECK(std::abs(holo_log_symbol()->value(i) - std::log(2.0 * i)) < 1e-15);
    CHECK(std::abs(inverse_symbol()->value(0.0) - 1.0 / i) < 1e-15);
    CHECK(std::abs(exp_symbol()->value(i) - std::exp(-0.5)) < 1e-15);
    CHECK(std::abs(sqrt_symbol()->value(i) - std::sqrt(2.0 * i)) < 1e-15);
    CHECK(log_im_symbol()->value({3.0, 2.0}).real() == doctest::Approx(std::log(2.0)));
    CHECK(counterexample_symbol()->value({0.0, 0.5 + 1.0 / 16}).real() == doctest::Approx(2.0));
    CHECK(counterexample_symbol()->value({0.0, 1.0}) == cx(0.0));
    CHECK(std::abs(conj_symbol(holo_log_symbol())->value(i) - std::conj(std::log(2.0 * i))) < 1e-15);
    CHECK(std::abs(polynomial_symbol({1.0, 2.0, 3.0})->value(2.0) - cx(17.0)) < 1e-14);
}

TEST_CASE("holomorphic derivatives agree with finite differences") {
    for (auto b : {holo_log_symbol(), inverse_symbol(), exp_symbol(), sqrt_symbol(), lacunary_symbol(-3, 6)}) {
        REQUIRE(b->cls() == SymbolClass::Holomorphic);
        cx z{0.3, 0.8}, h{1e-6, 0};
        cx fd = (b->value(z + h) - b->value(z - h)) / (2.0 * h);
        auto d = b->derivative(z);
        REQUIRE(d);
        CHECK(std::abs(*d - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("BMO norms vanish on constants and ignore additive constants") {
    Fixture f;
    auto nu = power_weight(0.25);
    CHECK(bmo_nu_norm(*constant_symbol({2.0, -1.0}), *nu, f.mesh, f.fam).value < 1e-12);
    CHECK(bmo2_norm(*constant_symbol(3.0), f.mesh, f.fam).value < 1e-12);
    for (auto b : {holo_log_symbol(), inverse_symbol(), log_im_symbol()}) {
        double n0 = bmo_nu_norm(*b, *nu, f.mesh, f.fam).value;
        double n1 = bmo_nu_norm(*affine_symbol(b, 1.0, {5.0, 2.0}), *nu, f.mesh, f.fam).value;
        double n2 = bmo_nu_norm(*affine_symbol(b, {0.0, -3.0}, 0.0), *nu, f.mesh, f.fam).value;
        CHECK(n1 == doctest::Approx(n0).epsilon(1e-9));
        CHECK(n2 == doctest::Approx(3.0 * n0).epsilon(1e-9));
        CHECK(bmo2_norm(*affine_symbol(b, 2.0, 1.0), f.mesh, f.fam).value ==
              doctest::Approx(2.0 * bmo2_norm(*b, f.mesh, f.fam).value).epsilon(1e-9));
    }
}

TEST_CASE("L1 oscillation is dominated by the L2 oscillation box by box") {
    Fixture f;
    auto r = bmo2_norm(*trig_symbol(4), f.mesh, f.fam);
    REQUIRE(r.per_box.size() == r.l1_per_box.size());
    for (std::size_t i = 0; i < r.per_box.size(); ++i) CHECK(r.l1_per_box[i] <= r.per_box[i] + 1e-12);
}

TEST_CASE("BO and BA of constants vanish and BO scales") {
    Fixture f;
    CHECK(bo_norm(*constant_symbol(2.0), f.mesh, 1.0) == 0.0);
    CHECK(ba_norm(*constant_symbol(2.0), f.mesh, 1.0) == doctest::Approx(2.0));
    double b = bo_norm(*holo_log_symbol(), f.mesh, 1.0);
    CHECK(b > 0.0);
    CHECK(bo_norm(*affine_symbol(holo_log_symbol(), 2.0, 7.0), f.mesh, 1.0) == doctest::Approx(2.0 * b).epsilon(1e-12));
}

TEST_CASE("BO/BA split reassembles the symbol") {
    Fixture f;
    auto b = log_im_symbol();
    auto s = split_bo_ba(*b, f.mesh, f.fam, 1.0);
    Eigen::VectorXcd v = symbol_values(*b, f.mesh);
    CHECK((s.b1 + s.b2 - v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.ratio > 0.0);
    CHECK(std::isfinite(s.ratio));
}

TEST_CASE("BDA distance of a low-degree polynomial is at round-off") {
    Fixture f(-3);
    auto r = bda_norm(*polynomial_symbol({1.0, {0, 2.0}, 0.5}), f.mesh, 1.0, 3);
    CHECK(r.value < 1e-8);
    auto r2 = bda_norm(*log_im_symbol(), f.mesh, 1.0, 3);
    CHECK(r2.value > r.value);
    // residuals do not grow with the degree
    for (std::size_t i = 1; i < r2.by_degree.size(); ++i) CHECK(r2.by_degree[i].second <= r2.by_degree[i - 1].second + 1e-12);
}

TEST_CASE("oscillation chain bound holds along random chains") {
    Fixture f(-4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DyadicInterval I{System::D1, 1, 0};  // [0,2)
    for (auto b : {holo_log_symbol(), inverse_symbol(), log_im_symbol(), trig_symbol(2)}) {
        for (int t = 0; t < 10; ++t) {
            cx z{2.0 * u(rng), 0.05 + 1.9 * u(rng)};
            auto c = oscillation_chain_bound(*b, I, z, f.mesh);
            CHECK(c.length >= 1);
            CHECK(c.lhs <= 4.0 * c.rhs + 1e-12);
        }
    }
}

TEST_CASE("VMO traces separate 1/(z+i) from the lacunary series at small scales") {
    Fixture f(-6);
    auto one = constant_weight();
    auto v = vmo_nu_trace(*inverse_symbol(), *one, f.mesh, f.fam);
    auto l = vmo_nu_trace(*lacunary_symbol(), *one, f.mesh, f.fam);
    REQUIRE(!v.scale_trace.empty());
    CHECK(v.scale_trace.back().second < 0.25 * v.value);
    CHECK(l.scale_trace.back().second > 0.5 * l.value);
    // below unit scale the trace of 1/(z+i) falls level by level
    for (std::size_t i = 1; i < v.scale_trace.size(); ++i)
        if (v.scale_trace[i].first < 0) CHECK(v.scale_trace[i].second < v.scale_trace[i - 1].second);
}

TEST_CASE("symbol specs parse and reject unknown kinds") {
    auto b = symbol_from_json(nlohmann::json::parse(R"({"kind":"conj","of":{"kind":"holo_log"}})"));
    CHECK(b->cls() == SymbolClass::General);
    CHECK(symbol_from_json(nlohmann::json::parse(R"({"kind":"trig","seed":9})"))->value({0.1, 0.2}) ==
          trig_symbol(9)->value({0.1, 0.2}));
    CHECK_THROWS_AS(symbol_from_json(nlohmann::json::parse(R"({"kind":"bogus"})")), std::invalid_argument);
}
