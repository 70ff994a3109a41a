#pragma once
// Tables, verdicts and the on-disk layout of experiment outputs.

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace bglab {

// shortest round-trip text for a double; "inf"/"nan" spelled out
std::string format_number(double v);
std::string csv_escape(const std::string& s);

class Table {
public:
    using Cell = std::variant<std::string, double, long long>;
    Table() = default;
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<Cell> row);
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    // RFC 4180: CRLF line ends, quoted when needed
    std::string to_csv() const;
    void write_csv(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

struct Verdict {
    std::string name;
    std::string invariant;  // what was tested
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
    nlohmann::json to_json() const;
};

struct ExperimentReport {
    std::string id;
    nlohmann::json config;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<std::pair<double, double>>> plots;
    std::vector<Verdict> verdicts;
    nlohmann::json measured = nlohmann::json::object();
    double runtime_s = 0.0;

    bool all_pass() const;
    const Verdict* verdict(const std::string& name) const;
    nlohmann::json summary() const;
    // summary.json, table_<name>.csv, plot_<name>.csv
    void write(const std::string& dir) const;
};

}  // namespace bglab
