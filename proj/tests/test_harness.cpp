#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include <unistd.h>

#include "bglab/config.hpp"
#include "bglab/counterexample.hpp"
#include "bglab/experiments.hpp"
#include "bglab/report.hpp"

using namespace bglab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
std::string write_temp(const json& j) {
    static std::atomic<int> counter{0};
    auto p = fs::temp_directory_path() / ("bglab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".json");
    std::ofstream(p) << j.dump();
    return p.string();
}

ExperimentConfig small(const std::string& id, json patch) {
    return load_experiment_config(id, write_temp(patch));
}

double cell_number(const Table::Cell& c) {
    if (auto d = std::get_if<double>(&c)) return *d;
    if (auto l = std::get_if<long long>(&c)) return static_cast<double>(*l);
    return NAN;
}
std::string cell_text(const Table::Cell& c) {
    if (auto s = std::get_if<std::string>(&c)) return *s;
    return {};
}
std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.header().size(); ++i)
        if (t.header()[i] == name) return i;
    FAIL("missing column " << name);
    return 0;
}
}  // namespace

TEST_CASE("numbers are printed shortest round-trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(NAN) == "nan");
    double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("CSV quoting") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    Table t({"name", "x", "n"});
    t.add({std::string("y^0.5|y^0.5"), 1.5, 3LL});
    t.add({std::string("a,b"), INFINITY, -1LL});
    CHECK(t.to_csv() == "name,x,n\r\ny^0.5|y^0.5,1.5,3\r\n\"a,b\",inf,-1\r\n");
    CHECK_THROWS(t.add({1.0}));
}

TEST_CASE("shipped configs load with calibrated thresholds") {
    for (const auto& id : experiment_ids()) {
        auto c = load_experiment_config(id);
        CHECK(c.id == id);
        CHECK(!c.resolutions.empty());
    }
    auto b = load_experiment_config("bloom");
    CHECK(b.threshold("spread_bound") == 50.0);
    CHECK(b.threshold("stability_tol") == 0.10);
    CHECK_THROWS_AS(b.threshold("nope"), ConfigError);
}

TEST_CASE("user documents merge over the defaults") {
    auto c = small("bloom", {{"resolutions", {-3}}, {"seed", 42}, {"thresholds", {{"spread_bound", 7.0}}}});
    CHECK(c.resolutions == std::vector<int>{-3});
    CHECK(c.seed == 42);
    CHECK(c.threshold("spread_bound") == 7.0);
    CHECK(c.threshold("stability_tol") == 0.10);
    CHECK(c.symbols.size() == 4);
}

TEST_CASE("malformed or mismatched configs are configuration errors") {
    CHECK_THROWS_AS(load_experiment_config("nosuch"), ConfigError);
    CHECK_THROWS_AS(load_experiment_config("bloom", "/nonexistent/bglab.json"), ConfigError);
    auto bad = fs::temp_directory_path() / "bglab_bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK_THROWS_AS(load_experiment_config("bloom", bad.string()), ConfigError);
    CHECK_THROWS_AS(small("bloom", {{"experiment", "sparse"}}), ConfigError);
    CHECK_THROWS_AS(small("bloom", {{"resolutions", json::array()}}), ConfigError);
    CHECK_THROWS_AS(small("bloom", {{"global", {{"alpha", -2.0}}}}), ConfigError);
    CHECK_THROWS_AS(small("bloom", {{"resolutions", {-4, 9}}}), ConfigError);
}

TEST_CASE("runs are deterministic under a fixed seed") {
    auto c = small("sparse", {{"resolutions", {-3, -4}}, {"params", {{"suite_size", 6}}}});
    auto a = run_experiment(c), b = run_experiment(c);
    REQUIRE(a.tables.size() == b.tables.size());
    for (const auto& [name, t] : a.tables) CHECK(t.to_csv() == b.tables.at(name).to_csv());
    auto s1 = sparse_suite(build_mesh(c.global), 7, 20), s2 = sparse_suite(build_mesh(c.global), 7, 20);
    REQUIRE(s1.size() == 20);
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1[i] == s2[i]);
        CHECK((s1[i].array() >= 0.0).all());
        CHECK(s1[i].maxCoeff() > 0.0);
    }
    CHECK(sparse_suite(build_mesh(c.global), 8, 20)[0] != s1[0]);
}

TEST_CASE("report directory layout") {
    auto c = small("weights-report", {{"resolutions", {-3}}});
    auto r = run_experiment(c);
    auto dir = fs::temp_directory_path() / ("bglab_out_" + std::to_string(::getpid()));
    r.write(dir.string());
    CHECK(fs::exists(dir / "summary.json"));
    auto j = read_json_file((dir / "summary.json").string());
    CHECK(j.at("experiment") == "weights-report");
    CHECK(j.at("verdicts").is_array());
    for (const auto& [name, t] : r.tables) CHECK(fs::exists(dir / ("table_" + name + ".csv")));
    fs::remove_all(dir);
}

TEST_CASE("bloom refuses non-holomorphic symbols and non-B2 pairs") {
    CHECK_THROWS_AS(run_experiment(small("bloom", {{"resolutions", {-3}}, {"symbols", {{{"kind", "log_im"}}}}})),
                    ConfigError);
    json bad_pair = {{{"mu", {{"kind", "power"}, {"s", 1.5}}}, {"lambda", {{"kind", "constant"}}}}};
    CHECK_THROWS_AS(run_experiment(small("bloom", {{"resolutions", {-3}}, {"weights", bad_pair}, {"params", {{"diagnostic_pairs", json::array()}}}})),
                    ConfigError);
    // a refused pair next to a good one is listed, not fatal
    json mixed = bad_pair;
    mixed.push_back({{"mu", {{"kind", "constant"}}}, {"lambda", {{"kind", "constant"}}}});
    auto r = run_experiment(small("bloom", {{"resolutions", {-3, -4}}, {"weights", mixed}, {"params", {{"diagnostic_pairs", json::array()}}}}));
    CHECK(r.measured.at("refused").size() == 1);
}

TEST_CASE("nonanalytic refuses the APR counterexample weight") {
    auto c = small("nonanalytic", {{"resolutions", {-3}}, {"weights", {{{"kind", "apr_counterexample"}}}}});
    try {
        run_experiment(c);
        FAIL("expected a refusal");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("APR") != std::string::npos);
        CHECK(std::string(e.what()).find("counterexample") != std::string::npos);
    }
}

TEST_CASE("counterexample refuses to run without the refinement band") {
    CHECK_THROWS_AS(run_experiment(small("counterexample", {{"params", {{"band", false}}}})), ConfigError);
    CHECK_THROWS_AS(band_cells(0), std::invalid_argument);
    CHECK_THROWS_AS(counterexample_study({3, 2}, {}, GlobalConfig{}), std::invalid_argument);
}

TEST_CASE("band cells tile the square around the singular line") {
    for (int layers : {1, 4, 9}) {
        double area = 0.0;
        for (const auto& r : band_cells(layers)) {
            area += r.width() * r.height();
            CHECK(r.width() == doctest::Approx(r.height()).epsilon(0.5));
        }
        CHECK(area == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("disk projection of the normalized indicator matches the closed form") {
    auto src = disk_source(64, 128);
    double total = 0.0;
    for (double a : src.area) total += a;
    CHECK(total == doctest::Approx(std::numbers::pi / 16).epsilon(1e-12));
    std::vector<cx> z{{0.0, 0.5}, {0.1, 0.6}, {-0.2, 0.4}, {0.5, 2.0}};
    auto pf = project_on_disk(z, src, [](cx) { return cx(16.0); });
    for (std::size_t i = 0; i < z.size(); ++i) {
        cx exact = -1.0 / ((z[i] + kDiskCenter) * (z[i] + kDiskCenter));
        CHECK(std::abs(pf[i] - exact) < 1e-3 * std::abs(exact));
    }
}

TEST_CASE("bloom and nonanalytic agree on the shared one-weight quantity") {
    auto b = run_experiment(small("bloom", {{"resolutions", {-3}},
                                            {"symbols", {{{"kind", "holo_log"}}}},
                                            {"weights", {{{"mu", {{"kind", "constant"}}}, {"lambda", {{"kind", "constant"}}}}}},
                                            {"params", {{"diagnostic_pairs", json::array()}}}}));
    auto n = run_experiment(small("nonanalytic", {{"resolutions", {-3}},
                                                  {"symbols", {{{"kind", "holo_log"}}}},
                                                  {"weights", {{{"kind", "constant"}}}}}));
    const auto& tb = b.tables.at("ratios");
    const auto& tn = n.tables.at("ratios");
    REQUIRE(tb.rows().size() == 1);
    REQUIRE(tn.rows().size() == 1);
    double cb = cell_number(tb.rows()[0][column(tb, "comm_norm")]);
    double cn = cell_number(tn.rows()[0][column(tn, "comm_norm")]);
    CHECK(cell_text(tn.rows()[0][column(tn, "symbol")]) == "log(z+i)");
    CHECK(cn == doctest::Approx(cb).epsilon(0.01));
}

TEST_CASE("zero-over-zero ratios are excluded, not counted") {
    auto r = run_experiment(small("bloom", {{"resolutions", {-3, -4}},
                                            {"symbols", {{{"kind", "constant"}, {"re", 2.0}}, {{"kind", "holo_log"}}}},
                                            {"weights", {{{"mu", {{"kind", "constant"}}}, {"lambda", {{"kind", "constant"}}}}}},
                                            {"params", {{"diagnostic_pairs", json::array()}}}}));
    CHECK(r.measured.at("excluded_0_over_0").size() >= 1);
    auto v = r.verdict("spread");
    REQUIRE(v != nullptr);
    CHECK(std::isfinite(v->measured));
}
