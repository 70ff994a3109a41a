#pragma once
// Experiment configuration: JSON documents with shipped defaults and calibration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bglab/geometry.hpp"

namespace bglab {

// bad flags, unknown ids, unreadable or malformed documents: CLI exit code 2
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string id;
    GlobalConfig global;
    std::vector<int> resolutions;  // k_min values, coarse to fine
    std::uint64_t seed = 1;
    std::string output_dir;
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json symbols = nlohmann::json::array();
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json thresholds = nlohmann::json::object();

    double threshold(const std::string& key) const;
    template <class T>
    T param(const std::string& key, T fallback) const {
        return params.contains(key) ? params.at(key).get<T>() : fallback;
    }
    nlohmann::json to_json() const;
};

const std::vector<std::string>& experiment_ids();
std::string config_dir();

GlobalConfig global_from_json(const nlohmann::json& j, GlobalConfig base = {});
nlohmann::json to_json(const GlobalConfig& g);

nlohmann::json read_json_file(const std::string& path);

// Shipped defaults for `id`, merged with the user document (if any); thresholds
// come from the calibration file, then the document's own "thresholds".
ExperimentConfig load_experiment_config(const std::string& id, const std::optional<std::string>& path = std::nullopt);
ExperimentConfig experiment_config_from_json(const std::string& id, const nlohmann::json& doc);

}  // namespace bglab
