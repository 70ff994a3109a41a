// bglab: command-line front end. Exit codes: 0 all verdicts pass, 1 a verdict
// failed, 2 configuration or usage error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bglab/config.hpp"
#include "bglab/experiments.hpp"
#include "bglab/geometry.hpp"
#include "bglab/operators.hpp"
#include "bglab/report.hpp"
#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

using namespace bglab;
using nlohmann::json;

namespace {

struct GlobalFlags {
    double alpha = 0.0;
    int k_min = -6, k_max = 5;
    double x_extent = 8.0;
    void add(CLI::App* app) {
        app->add_option("--alpha", alpha, "weight exponent of dA_alpha");
        app->add_option("--k-min", k_min, "finest dyadic level");
        app->add_option("--k-max", k_max, "coarsest dyadic level");
        app->add_option("--x-extent", x_extent, "horizontal truncation X");
    }
    GlobalConfig get() const {
        GlobalConfig g;
        g.alpha = alpha;
        g.k_min = k_min;
        g.k_max = k_max;
        g.x_extent = x_extent;
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        return g;
    }
};

struct WeightFlags {
    std::string kind = "constant";
    double s = 0.0, c = 1.0, eta = 0.5;
    std::string file;
    void add(CLI::App* app, const std::string& prefix = "") {
        app->add_option("--" + prefix + "kind", kind, "constant | power | apr_counterexample | conformal | grid");
        app->add_option("--" + prefix + "s", s, "exponent of a power weight");
        app->add_option("--" + prefix + "c", c, "constant factor");
        app->add_option("--" + prefix + "eta", eta, "exponent of a conformal weight");
        app->add_option("--" + prefix + "file", file, "CSV of node values for a grid weight");
    }
    WeightPtr get(const Mesh* mesh = nullptr) const {
        json j{{"kind", kind}, {"c", c}, {"eta", eta}, {"s", s}};
        if (!file.empty()) j["file"] = file;
        try {
            return weight_from_json(j, mesh);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
};

SymbolPtr parse_symbol(const std::string& spec, const Mesh* mesh) {
    json j;
    if (!spec.empty() && spec.front() == '{') {
        try {
            j = json::parse(spec);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("bad symbol JSON: ") + e.what());
        }
    } else {
        j = {{"kind", spec}};
    }
    try {
        return symbol_from_json(j, mesh);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void print_char(const char* label, const Characteristic& c) {
    if (c.infinite)
        std::printf("%-10s inf (flagged at %.6g)\n", label, c.value);
    else
        std::printf("%-10s %.6f\n", label, c.value);
}

int print_verdicts(const json& summary) {
    bool all = true;
    for (const auto& v : summary.at("verdicts")) {
        bool pass = v.at("pass").get<bool>();
        all = all && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << summary.value("experiment", "?") << "." << v.at("name").get<std::string>()
                  << "  measured=" << v.at("measured").dump() << " threshold=" << v.at("threshold").dump();
        if (!v.value("detail", std::string()).empty()) std::cout << "  (" << v.at("detail").get<std::string>() << ")";
        std::cout << "\n";
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bglab: weighted Bergman-space numerics on the upper half-plane"};
    app.require_subcommand(1);

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "build a Whitney mesh and print its statistics");
    GlobalFlags mesh_g;
    mesh_g.add(mesh_cmd);
    bool mesh_json = false;
    mesh_cmd->add_flag("--json", mesh_json, "print the dyadic systems as JSON");

    // weights
    auto* w_cmd = app.add_subcommand("weights", "weight-class characteristics");
    GlobalFlags w_g;
    w_g.add(w_cmd);
    WeightFlags w_w;
    w_w.add(w_cmd);
    bool w_full = false;
    w_cmd->add_flag("--full", w_full, "full report (APR, reverse Hölder, B-infinity, convergence) as JSON");

    // norms
    auto* n_cmd = app.add_subcommand("norms", "BMO-type norms of a symbol");
    GlobalFlags n_g;
    n_g.add(n_cmd);
    std::string n_sym = "holo_log";
    n_cmd->add_option("--symbol", n_sym, "symbol kind or JSON spec");
    WeightFlags n_w;
    n_w.add(n_cmd, "nu-");
    double n_r = 1.0;
    n_cmd->add_option("--radius", n_r, "Bergman radius for BO/BA");

    // op
    auto* o_cmd = app.add_subcommand("op", "assemble an operator and report its weighted norm");
    GlobalFlags o_g;
    o_g.add(o_cmd);
    std::string o_kernel = "bergman", o_sym, o_dump;
    double o_eps = 0.25;
    o_cmd->add_option("--kernel", o_kernel, "bergman | berezin_plus | q_eps");
    o_cmd->add_option("--eps", o_eps, "epsilon for q_eps");
    o_cmd->add_option("--symbol", o_sym, "take the commutator with this symbol");
    o_cmd->add_option("--dump", o_dump, "write the matrix (complex128, row-major) to this path");
    WeightFlags o_mu, o_lam;
    o_mu.add(o_cmd, "mu-");
    o_lam.add(o_cmd, "lambda-");
    std::uint64_t o_seed = 1;
    o_cmd->add_option("--seed", o_seed, "start vector seed");

    // experiment
    auto* e_cmd = app.add_subcommand("experiment", "run an experiment (or 'all')");
    std::string e_id, e_config, e_out;
    std::optional<std::uint64_t> e_seed;
    e_cmd->add_option("id", e_id, "bloom | sparse | necessity | compactness | nonanalytic | counterexample | weights-report | all")
        ->required();
    e_cmd->add_option("--config", e_config, "JSON config merged over the shipped defaults");
    e_cmd->add_option("--seed", e_seed, "override the config seed");
    e_cmd->add_option("--out", e_out, "output directory (default from config)");

    // report
    auto* r_cmd = app.add_subcommand("report", "print the verdicts of a finished run");
    std::string r_dir;
    r_cmd->add_option("dir", r_dir, "output directory holding summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (*mesh_cmd) {
            auto g = mesh_g.get();
            Mesh m = build_mesh(g);
            if (mesh_json) {
                std::cout << to_json_dump(build_systems(g)) << "\n";
                return 0;
            }
            auto wr = whitney_radius(m);
            std::printf("cells      %zu\nhash       %s\ny_bottom   %.6g\nwhitney_R  %.6f\noverlap    %d\n", m.size(),
                        m.hash().c_str(), m.y_bottom, wr.R, disk_overlap_count(m, wr.R));
            return 0;
        }
        if (*w_cmd) {
            auto g = w_g.get();
            Mesh m = build_mesh(g);
            auto w = w_w.get(&m);
            if (w_full) {
                std::cout << weight_report(w, g).to_json().dump(2) << "\n";
                return 0;
            }
            BoxFamily fam = BoxFamily::build(m, build_systems(g));
            std::printf("weight     %s\n", w->name().c_str());
            print_char("b2_char", b2_characteristic(*w, m, fam));
            print_char("apr_const", apr_constant(*w, g));
            return 0;
        }
        if (*n_cmd) {
            auto g = n_g.get();
            Mesh m = build_mesh(g);
            BoxFamily fam = BoxFamily::build(m, build_systems(g));
            auto b = parse_symbol(n_sym, &m);
            auto nu = n_w.get(&m);
            auto osc = vmo_nu_trace(*b, *nu, m, fam);
            std::printf("symbol     %s\nbmo_nu     %.6g\nvmo_trace  %s\n", b->name().c_str(), osc.value,
                        osc.vmo_consistent ? "consistent with VMO" : "not consistent with VMO");
            std::printf("bmo2       %.6g\n", bmo2_norm(*b, m, fam).value);
            std::printf("bo         %.6g\nba         %.6g\n", bo_norm(*b, m, n_r), ba_norm(*b, m, n_r));
            return 0;
        }
        if (*o_cmd) {
            auto g = o_g.get();
            Mesh m = build_mesh(g);
            DiscretizedOperator op;
            if (o_kernel == "bergman") op = assemble_bergman(m, g.alpha);
            else if (o_kernel == "berezin_plus") op = assemble_berezin_plus(m, g.alpha);
            else if (o_kernel == "q_eps") op = assemble_q_eps(m, g.alpha, o_eps);
            else throw ConfigError("unknown kernel: " + o_kernel);
            if (!o_sym.empty()) op.matrix = commutator(op.matrix, symbol_values(*parse_symbol(o_sym, &m), m));
            if (!o_dump.empty()) write_matrix_dump(op, o_dump, m.hash());
            NormOptions opt;
            opt.seed = o_seed;
            auto r = weighted_operator_norm(op.matrix, node_values(*o_mu.get(&m), m), node_values(*o_lam.get(&m), m), m, opt);
            std::printf("N          %zu\nnorm       %.10g\nresidual   %.3g\niterations %d\nconverged  %s\n", m.size(),
                        r.value, r.residual, r.iterations, r.converged ? "yes" : "no");
            return r.converged ? 0 : 1;
        }
        if (*e_cmd) {
            std::vector<std::string> ids = e_id == "all" ? experiment_ids() : std::vector<std::string>{e_id};
            std::vector<ExperimentConfig> cfgs;
            for (const auto& id : ids) {
                auto c = load_experiment_config(id, e_config.empty() ? std::nullopt : std::optional<std::string>(e_config));
                if (e_seed) c.seed = *e_seed;
                if (!e_out.empty()) c.output_dir = ids.size() > 1 ? e_out + "/" + id : e_out;
                cfgs.push_back(std::move(c));
            }
            auto reports = run_experiments(cfgs, true);
            int code = 0;
            for (std::size_t i = 0; i < reports.size(); ++i) {
                std::cout << "# " << reports[i].id << " -> " << cfgs[i].output_dir << "\n";
                code = std::max(code, print_verdicts(reports[i].summary()));
            }
            return code;
        }
        if (*r_cmd) {
            return print_verdicts(read_json_file(r_dir + "/summary.json"));
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
