#include "bglab/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bglab {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void Table::add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::logic_error("table row width does not match the header");
    rows_.push_back(std::move(row));
}

std::string Table::to_csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) {
        std::vector<std::string> cells;
        for (const auto& c : r) {
            if (auto s = std::get_if<std::string>(&c)) cells.push_back(*s);
            else if (auto d = std::get_if<double>(&c)) cells.push_back(format_number(*d));
            else cells.push_back(std::to_string(std::get<long long>(c)));
        }
        line(cells);
    }
    return out;
}

void Table::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_csv();
}

nlohmann::json Verdict::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(format_number(v)); };
    return {{"name", name},         {"invariant", invariant}, {"pass", pass},
            {"measured", num(measured)}, {"threshold", num(threshold)}, {"detail", detail}};
}

bool ExperimentReport::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

const Verdict* ExperimentReport::verdict(const std::string& name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return &v;
    return nullptr;
}

nlohmann::json ExperimentReport::summary() const {
    nlohmann::json j;
    j["experiment"] = id;
    j["config"] = config;
    j["pass"] = all_pass();
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : verdicts) j["verdicts"].push_back(v.to_json());
    j["measured"] = measured;
    j["tables"] = nlohmann::json::array();
    for (const auto& [name, t] : tables) j["tables"].push_back("table_" + name + ".csv");
    j["runtime_s"] = runtime_s;
    j["thresholds_note"] = "pass thresholds are calibrated values from config/calibration.json";
    return j;
}

void ExperimentReport::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/summary.json");
        if (!out) throw std::runtime_error("cannot write " + dir + "/summary.json");
        out << summary().dump(2) << "\n";
    }
    for (const auto& [name, t] : tables) t.write_csv(dir + "/table_" + name + ".csv");
    for (const auto& [name, pts] : plots) {
        Table t({"x", "y"});
        for (auto [x, y] : pts) t.add({x, y});
        t.write_csv(dir + "/plot_" + name + ".csv");
    }
}

}  // namespace bglab
