#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bglab/geometry.hpp"

using namespace bglab;

namespace {
GlobalConfig small(int k_min = -4) {
    GlobalConfig g;
    g.k_min = k_min;
    return g;
}
}  // namespace

TEST_CASE("dA_alpha of rectangles has the closed form") {
    CHECK(measure_A_alpha(Rect{0, 1, 0, 1}, 0.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
    CHECK(measure_A_alpha(Rect{0, 2, 0, 1}, 1.0) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-15));
    // (1/π)(α+1)∫(2y)^α dy dx on [0,1]x[1,2], α = ½
    const double a = 0.5, expect = std::pow(2.0, a) * (std::pow(2.0, a + 1) - 1.0) / std::numbers::pi;
    CHECK(measure_A_alpha(Rect{0, 1, 1, 2}, a) == doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(measure_A_alpha(Rect{0, 1, 0, 1}, -1.0), std::invalid_argument);
}

TEST_CASE("Bergman distance between i and 2i is half of log 2") {
    CHECK(bergman_distance({0, 1}, {0, 2}) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
    CHECK(bergman_distance({0.3, 0.7}, {0.3, 0.7}) == 0.0);
}

TEST_CASE("Bergman distance is invariant under z -> az + b") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0), x(-4, 4);
    for (int t = 0; t < 50; ++t) {
        cx z{x(rng), u(rng)}, w{x(rng), u(rng)};
        double a = u(rng), b = x(rng);
        CHECK(bergman_distance(a * z + b, a * w + b) == doctest::Approx(bergman_distance(z, w)).epsilon(1e-12));
        CHECK(bergman_distance(z, w) == doctest::Approx(bergman_distance(w, z)).epsilon(1e-14));
    }
}

TEST_CASE("mesh sizes follow 16(2^{1-k_min} - 1/8) for X = 8, k_max = 5") {
    for (int k : {-4, -5, -6, -7}) {
        Mesh m = build_mesh(small(k));
        CHECK(m.size() == static_cast<std::size_t>(16.0 * (std::ldexp(1.0, 1 - k) - 0.125)));
        CHECK(m.y_bottom == std::ldexp(1.0, k - 1));
    }
}

TEST_CASE("mesh weights sum to the measure of the covered strip") {
    Mesh m = build_mesh(small());
    // levels -4..3 cover y in [2^-5, 8) over [-8, 8)
    double expect = measure_A_alpha(Rect{-8, 8, std::ldexp(1.0, -5), 8}, 0.0);
    CHECK(m.weights.sum() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("Whitney radius matches the upper-box corner distance") {
    // center (1/2, 3/4) of the upper box of [0,1) to the corner (0, 1/2)
    cx c{0.5, 0.75}, corner{0.0, 0.5};
    double expect = bergman_distance(c, corner);
    auto wr = whitney_radius(build_mesh(small()));
    CHECK(wr.R == doctest::Approx(expect).epsilon(1e-12));
    CHECK(wr.R == doctest::Approx(0.441905).epsilon(1e-5));
}

TEST_CASE("adjacent system offsets") {
    CHECK(system_offset(System::D1, 3) == 0.0);
    CHECK(system_offset(System::D2, 2) == doctest::Approx(4.0 / 3.0));
    CHECK(system_offset(System::D2, -1) == doctest::Approx(-1.0 / 6.0));
    CHECK(system_offset(System::D2, -3) == doctest::Approx(-1.0 / 24.0));
}

TEST_CASE("parents contain their children in both systems") {
    for (System s : {System::D1, System::D2})
        for (int k = -6; k < 4; ++k)
            for (std::int64_t j = -7; j <= 7; ++j) {
                DyadicInterval I{s, k, j};
                auto P = I.parent();
                CHECK(P.level == k + 1);
                CHECK(P.x0() <= I.x0() + 1e-12);
                CHECK(P.x1() >= I.x1() - 1e-12);
                auto ch = I.children();
                CHECK(ch[0].parent() == I);
                CHECK(ch[1].parent() == I);
                CHECK(ch[0].x0() == doctest::Approx(I.x0()));
                CHECK(ch[1].x1() == doctest::Approx(I.x1()));
            }
}

TEST_CASE("chain_to_top descends to the upper box holding z") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DyadicInterval I{System::D1, 2, 0};  // [0,4)
    for (int t = 0; t < 100; ++t) {
        cx z{4.0 * u(rng), 4.0 * u(rng) + 1e-3};
        auto chain = chain_to_top(z, I);
        REQUIRE(!chain.empty());
        CHECK(chain.front() == I);
        for (std::size_t i = 1; i < chain.size(); ++i) CHECK(chain[i].parent() == chain[i - 1]);
        const auto& J = chain.back();
        CHECK(J.contains(z.real()));
        CHECK(z.imag() >= J.length() / 2);
        CHECK(z.imag() < J.length());
    }
}

TEST_CASE("box members are exactly the nodes inside the box") {
    auto g = small();
    Mesh m = build_mesh(g);
    BoxFamily fam = BoxFamily::build(m, build_systems(g));
    REQUIRE(!fam.boxes.empty());
    for (const auto& q : fam.boxes) {
        double mass = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            cx z = m.nodes[i];
            if (z.real() >= q.x0 && z.real() < q.x1 && z.imag() < q.h) {
                mass += m.weights[static_cast<Eigen::Index>(i)];
                ++count;
            }
        }
        CHECK(q.cells.size() == count);
        CHECK(q.mass == doctest::Approx(mass).epsilon(1e-12));
    }
}

TEST_CASE("every node is contained in at most log-many boxes per system") {
    auto g = small();
    Mesh m = build_mesh(g);
    BoxFamily fam = BoxFamily::build(m, build_systems(g));
    for (int s = 0; s < 2; ++s)
        for (std::size_t c = 0; c < m.size(); ++c) {
            const auto& ids = fam.chains[static_cast<std::size_t>(s)][c];
            CHECK(ids.size() <= static_cast<std::size_t>(g.k_max - g.k_min + 1));
            for (std::size_t i = 1; i < ids.size(); ++i)
                CHECK(fam.boxes[static_cast<std::size_t>(ids[i])].level > fam.boxes[static_cast<std::size_t>(ids[i - 1])].level);
        }
}

TEST_CASE("locate finds the cell of each node and rejects points outside") {
    Mesh m = build_mesh(small());
    for (std::size_t i = 0; i < m.size(); i += 7) CHECK(m.locate(m.nodes[i]) == static_cast<int>(i));
    CHECK(m.locate({0.0, 100.0}) == -1);
    CHECK(m.locate({20.0, 1.0}) == -1);
}

TEST_CASE("invalid global configurations are rejected") {
    GlobalConfig g;
    g.alpha = -1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = {};
    g.k_min = 5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = {};
    g.inflation_factor = 2.5;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
