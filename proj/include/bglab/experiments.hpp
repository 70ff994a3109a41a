#pragma once
// Experiment drivers behind `bglab experiment <id>`.

#include <string>
#include <vector>

#include "bglab/config.hpp"
#include "bglab/operators.hpp"
#include "bglab/report.hpp"
#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

namespace bglab {

// mesh, both dyadic systems and their box families at one k_min
struct Level {
    GlobalConfig cfg;
    Mesh mesh;
    Systems systems;
    BoxFamily fam;
    static Level build(GlobalConfig g, int k_min);
};

// both sides below this are excluded from ratio statistics
inline constexpr double kZeroRatioFloor = 1e-12;

struct WeightPair {
    WeightPtr mu, lambda;
    std::string name() const { return mu->name() + "|" + lambda->name(); }
};
std::vector<WeightPair> weight_pairs_from_json(const nlohmann::json& j);

ExperimentReport run_bloom(const ExperimentConfig& cfg);
ExperimentReport run_sparse(const ExperimentConfig& cfg);
ExperimentReport run_necessity(const ExperimentConfig& cfg);
ExperimentReport run_compactness(const ExperimentConfig& cfg);
ExperimentReport run_nonanalytic(const ExperimentConfig& cfg);
ExperimentReport run_counterexample(const ExperimentConfig& cfg);
ExperimentReport run_weights_report(const ExperimentConfig& cfg);

// dispatch on cfg.id; throws ConfigError for an unknown id
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Runs several experiments on a small work queue; each writes to its own
// output directory. Returns the reports in input order.
std::vector<ExperimentReport> run_experiments(const std::vector<ExperimentConfig>& cfgs, bool write_outputs);

// the seeded non-negative test functions of the sparse experiment
std::vector<Eigen::VectorXd> sparse_suite(const Mesh& mesh, std::uint64_t seed, int count = 20);

// ‖P k_{w0} - k_{w0}‖/‖k_{w0}‖ in L²(dA_α) and ‖P² - P‖ on L²(dA_α)
struct ReproducingLevel {
    int k_min = 0;
    std::size_t n = 0;
    double reproducing = 0.0;
    double idempotence = 0.0;
    bool converged = false;
};
std::vector<ReproducingLevel> reproducing_study(const GlobalConfig& base, const std::vector<int>& k_mins, cx w0,
                                                const NormOptions& opt = {});

// quantity shared by bloom (ν ≡ 1) and nonanalytic: ‖[b,P]‖ on L²(σ)
double one_weight_commutator_norm(const Symbol& b, const Weight& sigma, const Level& lv, const Eigen::MatrixXcd& P);

}  // namespace bglab
