#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bglab/median.hpp"

using namespace bglab;

namespace {
Mesh necessity_mesh(GlobalConfig& g) {
    g.k_min = -5;
    return build_mesh(g);
}
}  // namespace

TEST_CASE("weighted median of reals") {
    CHECK(weighted_median({{3.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}}) == 2.0);
    CHECK(weighted_median({{0.0, 1.0}, {10.0, 3.0}}) == 10.0);
    CHECK(weighted_median({{0.0, 1.0}, {10.0, 1.0}}) == 0.0);
    CHECK_THROWS_AS(weighted_median({}), std::invalid_argument);
}

TEST_CASE("four points on the axes give a centered median at the first angle") {
    std::vector<std::pair<cx, double>> v{{{1, 0}, 1.0}, {{-1, 0}, 1.0}, {{0, 1}, 1.0}, {{0, -1}, 1.0}};
    auto m = complex_median(v);
    CHECK(std::abs(m.center) < 1e-15);
    CHECK(m.grid_index == 0);
    CHECK(m.theta == 0.0);
    for (double x : m.masses) CHECK(x >= 1.0 / 16 * m.total);
    CHECK(m.min_fraction >= 1.0 / 16);
}

TEST_CASE("quadrant bookkeeping: half-open quadrants partition, closed ones cover") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        cx v{n(rng), n(rng)}, c{n(rng), n(rng)};
        double th = 0.3 * t;
        int q = quadrant_of(v, c, th);
        CHECK(q >= 0);
        CHECK(q < 4);
        CHECK(in_closed_quadrant(v, c, th, q));
    }
    CHECK(in_closed_quadrant({1.0, 0.0}, 0.0, 0.0, 0));
    CHECK(in_closed_quadrant({1.0, 0.0}, 0.0, 0.0, 3));
    CHECK(quadrant_of(0.0, 0.0, 0.0) == 0);
}

TEST_CASE("random weighted clouds always admit a 1/16 median") {
    std::mt19937_64 rng(9);
    std::lognormal_distribution<double> w(0.0, 1.0);
    std::cauchy_distribution<double> heavy(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 300);
    for (int t = 0; t < 100; ++t) {
        std::vector<std::pair<cx, double>> v;
        int n = size(rng);
        for (int i = 0; i < n; ++i) {
            cx z{heavy(rng), heavy(rng)};
            if (t % 3 == 0) z = {z.real(), 0.0};  // degenerate: all on a line
            if (t % 5 == 0) z = std::round(z.real());  // atoms
            v.emplace_back(z, w(rng));
        }
        auto m = complex_median(v);
        auto masses = quadrant_masses(v, m.center, m.theta, true);
        for (int j = 0; j < 4; ++j) {
            CHECK(masses[static_cast<std::size_t>(j)] == doctest::Approx(m.masses[static_cast<std::size_t>(j)]));
            CHECK(masses[static_cast<std::size_t>(j)] >= m.total / 16 * (1 - 1e-12));
        }
    }
}

TEST_CASE("test configuration over [0, 1/2)") {
    GlobalConfig g;
    Mesh mesh = necessity_mesh(g);
    auto sym = holo_log_symbol();
    auto tc = build_test_configuration(0.0, 0.5, *sym, mesh, g);
    CHECK(tc.frak_A == 8);
    CHECK(!tc.q_cells.empty());

    SUBCASE("B_j cover Q_I and sit in the opposite closed quadrant") {
        std::vector<int> seen(tc.q_cells.size(), 0);
        for (int j = 0; j < 4; ++j)
            for (int p : tc.B[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(p)]++;
                CHECK(in_closed_quadrant(tc.b_q[p], tc.median, (j + 2) % 4));
            }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s >= 1; }));
    }
    SUBCASE("F_j carry at least 1/16 of S_I up to quadrature") {
        CHECK(tc.min_F_fraction >= 1.0 / 16 - 0.005);
    }
    SUBCASE("Step II real part at frak_A = 8") {
        auto s2 = step2_kernel_real_part_check(tc, mesh);
        CHECK(tc.step2_ratio <= 2.0 / 8);
        CHECK(s2.pass);
        CHECK(s2.minimal_A >= 4);
        CHECK(s2.minimal_A <= 8);
        CHECK(tc.c1 > 0.0);
        CHECK(tc.c2 >= tc.c1);
        // the ratio shrinks with frak_A
        for (std::size_t i = 1; i < s2.sweep.size(); ++i) CHECK(s2.sweep[i].second <= s2.sweep[i - 1].second + 1e-12);
    }
    SUBCASE("chain inequality and the lhs comparison") {
        for (auto [mu, lam] : {std::pair{constant_weight(), constant_weight()},
                               std::pair{power_weight(0.5), power_weight(0.5)},
                               std::pair{power_weight(0.25), power_weight(-0.25)}}) {
            auto lb = oscillation_lower_bound(tc, *mu, *lam, mesh);
            CHECK(lb.chain_holds);
            CHECK(lb.chain_plus_holds);
            CHECK(lb.lhs <= lb.chain_rhs * (1 + 1e-12));
            CHECK(lb.lhs <= lb.lhs_cm * (1 + 1e-12));
            CHECK(lb.step1_worst >= -1e-12);
            for (int j = 0; j < 4; ++j) CHECK(lb.middle[static_cast<std::size_t>(j)] <= lb.middle_plus[static_cast<std::size_t>(j)] * (1 + 1e-12) + 1e-15);
        }
    }
}

TEST_CASE("test configuration refuses intervals outside the mesh") {
    GlobalConfig g;
    Mesh mesh = necessity_mesh(g);
    CHECK_THROWS_AS(build_test_configuration(7.5, 8.5, *holo_log_symbol(), mesh, g), std::domain_error);
    CHECK_THROWS_AS(build_test_configuration(0.0, 1e-4, *holo_log_symbol(), mesh, g), std::domain_error);
}

TEST_CASE("disjointified sequences keep a fixed share of each S_I") {
    GlobalConfig g;
    Mesh mesh = necessity_mesh(g);
    auto sym = log_im_symbol();
    std::vector<TestConfiguration> seq;
    for (double a : {0.0, 0.5, 0.25, 1.0}) seq.push_back(build_test_configuration(a, a + 0.25, *sym, mesh, g));
    CHECK(disjointify(seq) >= 1.0 / 24);
}
