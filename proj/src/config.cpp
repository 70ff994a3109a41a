#include "bglab/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace bglab {

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"bloom",       "sparse",         "necessity",     "compactness",
                                              "nonanalytic", "counterexample", "weights-report"};
    return ids;
}

std::string config_dir() {
    if (const char* env = std::getenv("BGLAB_CONFIG_DIR"); env && *env) return env;
    return BGLAB_CONFIG_DIR;
}

GlobalConfig global_from_json(const nlohmann::json& j, GlobalConfig g) {
    if (j.is_null()) return g;
    if (!j.is_object()) throw ConfigError("global must be an object");
    try {
        g.alpha = j.value("alpha", g.alpha);
        g.k_min = j.value("k_min", g.k_min);
        g.k_max = j.value("k_max", g.k_max);
        g.x_extent = j.value("x_extent", g.x_extent);
        g.inflation_factor = j.value("inflation_factor", g.inflation_factor);
        g.frak_A = j.value("frak_A", g.frak_A);
        g.bergman_radius = j.value("bergman_radius", g.bergman_radius);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad global field: ") + e.what());
    }
    return g;
}

nlohmann::json to_json(const GlobalConfig& g) {
    return {{"alpha", g.alpha},       {"k_min", g.k_min},
            {"k_max", g.k_max},       {"x_extent", g.x_extent},
            {"inflation_factor", g.inflation_factor}, {"frak_A", g.frak_A},
            {"bergman_radius", g.bergman_radius}};
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

double ExperimentConfig::threshold(const std::string& key) const {
    if (!thresholds.contains(key)) throw ConfigError("missing threshold '" + key + "' for experiment " + id);
    return thresholds.at(key).get<double>();
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"experiment", id},     {"global", bglab::to_json(global)},
            {"resolutions", resolutions}, {"seed", seed},
            {"weights", weights},   {"symbols", symbols},
            {"params", params},     {"thresholds", thresholds}};
}

ExperimentConfig experiment_config_from_json(const std::string& id, const nlohmann::json& doc) {
    if (std::find(experiment_ids().begin(), experiment_ids().end(), id) == experiment_ids().end())
        throw ConfigError("unknown experiment id: " + id);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.id = id;
    try {
        c.global = global_from_json(doc.value("global", nlohmann::json()));
        c.resolutions = doc.value("resolutions", std::vector<int>{c.global.k_min});
        c.seed = doc.value("seed", std::uint64_t{1});
        c.output_dir = doc.value("output_dir", std::string("out/") + id);
        c.weights = doc.value("weights", nlohmann::json::array());
        c.symbols = doc.value("symbols", nlohmann::json::array());
        c.params = doc.value("params", nlohmann::json::object());
        c.thresholds = doc.value("thresholds", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
    if (c.resolutions.empty()) throw ConfigError("at least one resolution is required");
    for (int k : c.resolutions) {
        GlobalConfig g = c.global;
        g.k_min = k;
        try {
            g.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid configuration: ") + e.what());
        }
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::string& id, const std::optional<std::string>& path) {
    if (std::find(experiment_ids().begin(), experiment_ids().end(), id) == experiment_ids().end())
        throw ConfigError("unknown experiment id: " + id);
    const std::string dir = config_dir();
    nlohmann::json doc = read_json_file(dir + "/" + id + ".json");
    nlohmann::json calib = read_json_file(dir + "/calibration.json");
    nlohmann::json thresholds = calib.value(id, nlohmann::json::object()).value("thresholds", nlohmann::json::object());
    if (path) {
        nlohmann::json user = read_json_file(*path);
        if (!user.is_object()) throw ConfigError("config must be a JSON object");
        if (user.contains("experiment") && user["experiment"] != id)
            throw ConfigError("config is for experiment " + user["experiment"].dump() + ", not " + id);
        if (user.contains("thresholds")) thresholds.merge_patch(user["thresholds"]);
        user.erase("thresholds");
        doc.merge_patch(user);
    }
    doc["thresholds"] = thresholds;
    return experiment_config_from_json(id, doc);
}

}  // namespace bglab
