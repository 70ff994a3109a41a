#include "bglab/symbols.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bglab {

namespace {

const cx I1(0.0, 1.0);

class FnSymbol final : public Symbol {
public:
    FnSymbol(std::string n, SymbolFn f, SymbolClass c, SymbolFn d, nlohmann::json s)
        : name_(std::move(n)), f_(std::move(f)), d_(std::move(d)), cls_(c), spec_(std::move(s)) {}
    std::string name() const override { return name_; }
    cx value(cx z) const override { return f_(z); }
    SymbolClass cls() const override { return cls_; }
    std::optional<cx> derivative(cx z) const override {
        if (!d_) return std::nullopt;
        return d_(z);
    }
    nlohmann::json spec() const override { return spec_.is_null() ? nlohmann::json{{"kind", name_}} : spec_; }

private:
    std::string name_;
    SymbolFn f_, d_;
    SymbolClass cls_;
    nlohmann::json spec_;
};

class GridSymbol final : public Symbol {
public:
    GridSymbol(std::vector<cx> v, const Mesh& mesh) : v_(std::move(v)) {
        if (v_.size() != mesh.size()) throw std::invalid_argument("grid symbol length does not match the mesh");
        rects_.reserve(mesh.size());
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            rects_.push_back(mesh.cells[i].rect);
            at_node_[{mesh.nodes[i].real(), mesh.nodes[i].imag()}] = static_cast<int>(i);
        }
    }
    std::string name() const override { return "grid"; }
    cx value(cx z) const override {
        auto it = at_node_.find({z.real(), z.imag()});
        if (it != at_node_.end()) return v_[static_cast<std::size_t>(it->second)];
        for (std::size_t i = 0; i < rects_.size(); ++i)
            if (rects_[i].contains(z)) return v_[i];
        throw std::domain_error("grid symbol evaluated outside its mesh");
    }
    nlohmann::json spec() const override { return {{"kind", "grid"}, {"n", v_.size()}}; }

private:
    std::vector<cx> v_;
    std::vector<Rect> rects_;
    std::map<std::pair<double, double>, int> at_node_;
};

}  // namespace

SymbolPtr make_symbol(std::string name, SymbolFn f, SymbolClass cls, SymbolFn derivative, nlohmann::json spec) {
    return std::make_shared<FnSymbol>(std::move(name), std::move(f), cls, std::move(derivative), std::move(spec));
}

SymbolPtr constant_symbol(cx c) {
    return make_symbol(
        "const", [c](cx) { return c; }, SymbolClass::Holomorphic, [](cx) { return cx(0.0); },
        {{"kind", "constant"}, {"re", c.real()}, {"im", c.imag()}});
}

SymbolPtr identity_symbol() {
    return make_symbol(
        "z", [](cx z) { return z; }, SymbolClass::Holomorphic, [](cx) { return cx(1.0); },
        {{"kind", "identity"}});
}

SymbolPtr square_symbol() {
    return make_symbol(
        "z^2", [](cx z) { return z * z; }, SymbolClass::Holomorphic, [](cx z) { return 2.0 * z; },
        {{"kind", "square"}});
}

SymbolPtr holo_log_symbol() {
    return make_symbol(
        "log(z+i)", [](cx z) { return std::log(z + I1); }, SymbolClass::Holomorphic,
        [](cx z) { return 1.0 / (z + I1); }, {{"kind", "holo_log"}});
}

SymbolPtr inverse_symbol() {
    return make_symbol(
        "1/(z+i)", [](cx z) { return 1.0 / (z + I1); }, SymbolClass::Holomorphic,
        [](cx z) { return -1.0 / ((z + I1) * (z + I1)); }, {{"kind", "inverse"}});
}

SymbolPtr exp_symbol() {
    return make_symbol(
        "exp(iz/2)", [](cx z) { return std::exp(0.5 * I1 * z); }, SymbolClass::Holomorphic,
        [](cx z) { return 0.5 * I1 * std::exp(0.5 * I1 * z); }, {{"kind", "exp"}});
}

SymbolPtr sqrt_symbol() {
    return make_symbol(
        "sqrt(z+i)", [](cx z) { return std::sqrt(z + I1); }, SymbolClass::Holomorphic,
        [](cx z) { return 0.5 / std::sqrt(z + I1); }, {{"kind", "sqrt"}});
}

SymbolPtr lacunary_symbol(int k0, int k1) {
    auto f = [k0, k1](cx z) {
        cx s = 0.0;
        for (int k = k0; k <= k1; ++k) {
            double t = std::ldexp(1.0, k);
            if (t * z.imag() > 60.0) break;
            s += std::exp(I1 * t * z);
        }
        return s;
    };
    auto d = [k0, k1](cx z) {
        cx s = 0.0;
        for (int k = k0; k <= k1; ++k) {
            double t = std::ldexp(1.0, k);
            if (t * z.imag() > 60.0) break;
            s += I1 * t * std::exp(I1 * t * z);
        }
        return s;
    };
    return make_symbol("lacunary", f, SymbolClass::Holomorphic, d, {{"kind", "lacunary"}, {"k0", k0}, {"k1", k1}});
}

SymbolPtr polynomial_symbol(std::vector<cx> c) {
    auto f = [c](cx z) {
        cx s = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
        return s;
    };
    auto d = [c](cx z) {
        cx s = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) s = s * z + static_cast<double>(k) * c[k];
        return s;
    };
    nlohmann::json co = nlohmann::json::array();
    for (cx a : c) co.push_back({a.real(), a.imag()});
    return make_symbol("poly", f, SymbolClass::Holomorphic, d, {{"kind", "polynomial"}, {"coeffs", co}});
}

SymbolPtr log_im_symbol() {
    return make_symbol("log(Im z)", [](cx z) { return cx(std::log(z.imag())); }, SymbolClass::General, nullptr,
                       {{"kind", "log_im"}});
}

SymbolPtr bump_symbol() {
    return make_symbol("bump", [](cx z) { return cx(std::exp(-std::norm(z - I1))); }, SymbolClass::General,
                       nullptr, {{"kind", "bump"}});
}

SymbolPtr disk_indicator_symbol(cx c, double r) {
    return make_symbol(
        "chi", [c, r](cx z) { return cx(std::abs(z - c) < r ? 1.0 : 0.0); }, SymbolClass::General, nullptr,
        {{"kind", "indicator"}, {"center", {c.real(), c.imag()}}, {"radius", r}});
}

SymbolPtr counterexample_symbol() {
    return make_symbol(
        "cex_b",
        [](cx z) {
            if (!(std::abs(z - cx(0.0, 0.5)) < 0.25)) return cx(0.0);
            return cx(std::pow(std::abs(z.imag() - 0.5), -0.25));
        },
        SymbolClass::General, nullptr, {{"kind", "counterexample_b"}});
}

SymbolPtr trig_symbol(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::array<double, 4> a{}, b{};
    for (int m = 0; m < 4; ++m) {
        a[static_cast<std::size_t>(m)] = nd(rng) / (m + 1);
        b[static_cast<std::size_t>(m)] = nd(rng) / (m + 1);
    }
    auto f = [a, b](cx z) {
        double s = 0.0;
        for (int m = 1; m <= 4; ++m)
            s += (a[static_cast<std::size_t>(m - 1)] * std::cos(m * z.real()) +
                  b[static_cast<std::size_t>(m - 1)] * std::sin(m * z.real())) *
                 std::exp(-m * z.imag());
        return cx(s);
    };
    return make_symbol("trig", f, SymbolClass::General, nullptr, {{"kind", "trig"}, {"seed", seed}});
}

SymbolPtr abs_inverse_symbol() {
    return make_symbol("1/|z+i|", [](cx z) { return cx(1.0 / std::abs(z + I1)); }, SymbolClass::General, nullptr,
                       {{"kind", "abs_inverse"}});
}

SymbolPtr conj_symbol(SymbolPtr b) {
    auto name = "conj(" + b->name() + ")";
    auto spec = nlohmann::json{{"kind", "conj"}, {"of", b->spec()}};
    return make_symbol(
        name, [b](cx z) { return std::conj(b->value(z)); }, SymbolClass::General, nullptr, spec);
}

SymbolPtr affine_symbol(SymbolPtr b, cx c, cx d) {
    auto cls = b->cls();
    SymbolFn deriv = nullptr;
    if (b->derivative(cx(0.0, 1.0))) deriv = [b, c](cx z) { return c * *b->derivative(z); };
    std::ostringstream os;
    os << c << "*" << b->name() << "+" << d;
    return make_symbol(
        os.str(), [b, c, d](cx z) { return c * b->value(z) + d; }, cls, deriv,
        {{"kind", "affine"}, {"of", b->spec()}, {"c", {c.real(), c.imag()}}, {"d", {d.real(), d.imag()}}});
}

SymbolPtr grid_symbol(std::vector<cx> v, const Mesh& mesh) { return std::make_shared<GridSymbol>(std::move(v), mesh); }

SymbolPtr symbol_from_json(const nlohmann::json& j, const Mesh* mesh) {
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("symbol spec needs a kind");
    std::string k = j.at("kind").get<std::string>();
    if (k == "constant") return constant_symbol({j.value("re", 1.0), j.value("im", 0.0)});
    if (k == "identity") return identity_symbol();
    if (k == "square") return square_symbol();
    if (k == "holo_log") return holo_log_symbol();
    if (k == "inverse") return inverse_symbol();
    if (k == "exp") return exp_symbol();
    if (k == "sqrt") return sqrt_symbol();
    if (k == "lacunary") return lacunary_symbol(j.value("k0", -3), j.value("k1", 39));
    if (k == "log_im") return log_im_symbol();
    if (k == "bump") return bump_symbol();
    if (k == "indicator") {
        auto c = j.value("center", std::vector<double>{0.0, 1.0});
        if (c.size() != 2) throw std::invalid_argument("indicator center needs two numbers");
        return disk_indicator_symbol({c[0], c[1]}, j.value("radius", 0.5));
    }
    if (k == "counterexample_b") return counterexample_symbol();
    if (k == "trig") return trig_symbol(j.value("seed", std::uint64_t{1}));
    if (k == "abs_inverse") return abs_inverse_symbol();
    if (k == "conj") return conj_symbol(symbol_from_json(j.at("of"), mesh));
    if (k == "grid") {
        if (!mesh) throw std::invalid_argument("grid symbol needs a mesh");
        std::ifstream in(j.at("file").get<std::string>());
        if (!in) throw std::invalid_argument("cannot open grid symbol file");
        // one row per node: re[,im]
        std::vector<cx> v;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string a, b;
            std::getline(ls, a, ',');
            std::getline(ls, b, ',');
            v.emplace_back(std::stod(a), b.empty() ? 0.0 : std::stod(b));
        }
        return grid_symbol(std::move(v), *mesh);
    }
    throw std::invalid_argument("unknown symbol kind: " + k);
}

Eigen::VectorXcd symbol_values(const Symbol& b, const Mesh& mesh) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i) v[static_cast<Eigen::Index>(i)] = b.value(mesh.nodes[i]);
    return v;
}

namespace {

// Σ|b - b_Q|^p w over members, b_Q the w-average
double box_deviation(const Eigen::VectorXcd& b, const Eigen::VectorXd& w, const std::vector<int>& cells,
                     double p, double& mass) {
    cx avg = 0.0;
    mass = 0.0;
    for (int c : cells) {
        avg += b[c] * w[c];
        mass += w[c];
    }
    avg /= mass;
    double s = 0.0;
    for (int c : cells) s += std::pow(std::abs(b[c] - avg), p) * w[c];
    return s;
}

std::vector<std::pair<int, double>> scale_trace(const OscillationReport& r, const BoxFamily& fam, int from_level) {
    std::map<int, double> m;
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        if (fam.boxes[i].level < from_level || fam.boxes[i].cells.empty()) continue;
        auto& v = m[fam.boxes[i].level];
        v = std::max(v, r.per_box[i]);
    }
    return {m.rbegin(), m.rend()};
}

std::vector<std::pair<double, double>> far_trace(const OscillationReport& r, const BoxFamily& fam, double X,
                                                 int from_level) {
    std::vector<double> radii{0.0};
    for (double R = 1.0; R < X; R *= 2.0) radii.push_back(R);
    std::vector<std::pair<double, double>> out;
    for (double R : radii) {
        double best = 0.0;
        for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
            const Box& b = fam.boxes[i];
            if (b.cells.empty() || b.level < from_level) continue;
            if (std::abs(b.center()) >= R) best = std::max(best, r.per_box[i]);
        }
        out.emplace_back(R, best);
    }
    return out;
}

template <class T>
bool trace_vanishes(const std::vector<std::pair<T, double>>& t, double norm, double rel) {
    if (t.size() < 2) return false;
    double last = t.back().second, prev = t[t.size() - 2].second;
    if (norm <= 1e-12) return true;
    return last <= rel * norm && last < prev;
}

}  // namespace

OscillationReport bmo_nu_norm(const Eigen::VectorXcd& b, const Eigen::VectorXd& nu, const Mesh& mesh,
                              const BoxFamily& fam) {
    OscillationReport out;
    out.per_box.assign(fam.boxes.size(), 0.0);
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const auto& cells = fam.boxes[i].cells;
        if (cells.empty()) continue;
        double mass;
        double dev = box_deviation(b, mesh.weights, cells, 1.0, mass);
        double nq = 0.0;
        for (int c : cells) nq += nu[c] * mesh.weights[c];
        out.per_box[i] = dev / nq;
        if (out.argmax < 0 || out.per_box[i] > out.value) {
            out.value = out.per_box[i];
            out.argmax = static_cast<int>(i);
        }
    }
    return out;
}

OscillationReport bmo_nu_norm(const Symbol& b, const Weight& nu, const Mesh& mesh, const BoxFamily& fam) {
    return bmo_nu_norm(symbol_values(b, mesh), node_values(nu, mesh), mesh, fam);
}

OscillationReport vmo_nu_trace(const Symbol& b, const Weight& nu, const Mesh& mesh, const BoxFamily& fam,
                               double rel) {
    auto r = bmo_nu_norm(b, nu, mesh, fam);
    // boxes with fewer than three rows of cells are dominated by truncation
    int from = mesh.cfg.k_min + 2;
    r.scale_trace = scale_trace(r, fam, from);
    r.far_trace = far_trace(r, fam, mesh.cfg.x_extent, from);
    r.vmo_consistent = trace_vanishes(r.scale_trace, r.value, rel) && trace_vanishes(r.far_trace, r.value, rel);
    return r;
}

Bmo2Report bmo2_norm(const Eigen::VectorXcd& b, const Mesh& mesh, const BoxFamily& fam) {
    Eigen::VectorXd w0 = cell_measures(mesh, 0.0);
    Bmo2Report out;
    out.per_box.assign(fam.boxes.size(), 0.0);
    out.l1_per_box.assign(fam.boxes.size(), 0.0);
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const auto& cells = fam.boxes[i].cells;
        if (cells.empty()) continue;
        double mass;
        out.per_box[i] = std::sqrt(box_deviation(b, w0, cells, 2.0, mass) / mass);
        out.l1_per_box[i] = box_deviation(b, w0, cells, 1.0, mass) / mass;
        if (out.argmax < 0 || out.per_box[i] > out.value) {
            out.value = out.per_box[i];
            out.argmax = static_cast<int>(i);
        }
    }
    return out;
}

Bmo2Report bmo2_norm(const Symbol& b, const Mesh& mesh, const BoxFamily& fam) {
    return bmo2_norm(symbol_values(b, mesh), mesh, fam);
}

DiskTable DiskTable::build(const Mesh& mesh, double r) {
    DiskTable t;
    t.r = r;
    t.members.resize(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) t.members[i] = bergman_disk(mesh.nodes[i], r, mesh);
    return t;
}

double bo_norm(const Eigen::VectorXcd& b, const DiskTable& disks) {
    double best = 0.0;
    for (std::size_t i = 0; i < disks.members.size(); ++i)
        for (int j : disks.members[i]) best = std::max(best, std::abs(b[static_cast<Eigen::Index>(i)] - b[j]));
    return best;
}

double bo_norm(const Symbol& b, const Mesh& mesh, double r) {
    return bo_norm(symbol_values(b, mesh), DiskTable::build(mesh, r));
}

double ba_norm(const Eigen::VectorXcd& b, const Mesh& mesh, const DiskTable& disks) {
    Eigen::VectorXd w0 = cell_measures(mesh, 0.0);
    double best = 0.0;
    for (const auto& m : disks.members) {
        double s = 0.0, a = 0.0;
        for (int j : m) {
            s += std::norm(b[j]) * w0[j];
            a += w0[j];
        }
        if (a > 0.0) best = std::max(best, std::sqrt(s / a));
    }
    return best;
}

double ba_norm(const Symbol& b, const Mesh& mesh, double r) {
    return ba_norm(symbol_values(b, mesh), mesh, DiskTable::build(mesh, r));
}

SplitResult split_bo_ba(const Symbol& b, const Mesh& mesh, const BoxFamily& fam, double r) {
    auto disks = DiskTable::build(mesh, r);
    Eigen::VectorXd w0 = cell_measures(mesh, 0.0);
    Eigen::VectorXcd bv = symbol_values(b, mesh);
    SplitResult out;
    out.b1.resize(bv.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        cx s = 0.0;
        double a = 0.0;
        for (int j : disks.members[i]) {
            s += bv[j] * w0[j];
            a += w0[j];
        }
        out.b1[static_cast<Eigen::Index>(i)] = s / a;
    }
    out.b2 = bv - out.b1;
    out.bo_b1 = bo_norm(out.b1, disks);
    out.ba_b2 = ba_norm(out.b2, mesh, disks);
    out.bmo2 = bmo2_norm(bv, mesh, fam).value;
    out.ratio = out.bmo2 > 0.0 ? (out.bo_b1 + out.ba_b2) / out.bmo2 : 0.0;
    return out;
}

BdaResult bda_norm(const Symbol& b, const Mesh& mesh, double r, int degree) {
    if (degree < 0) throw std::invalid_argument("degree must be non-negative");
    auto disks = DiskTable::build(mesh, r);
    Eigen::VectorXd w0 = cell_measures(mesh, 0.0);
    Eigen::VectorXcd bv = symbol_values(b, mesh);
    std::vector<double> sup(static_cast<std::size_t>(degree) + 1, 0.0);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const auto& m = disks.members[i];
        const auto n = static_cast<Eigen::Index>(m.size());
        if (n < degree + 1)
            throw std::runtime_error("disk around node " + std::to_string(i) + " holds " + std::to_string(n) +
                                     " nodes, too few for degree " + std::to_string(degree));
        cx z0 = mesh.nodes[i];
        double scale = z0.imag();
        Eigen::MatrixXcd V(n, degree + 1);
        Eigen::VectorXcd rhs(n);
        double area = 0.0;
        for (Eigen::Index a = 0; a < n; ++a) {
            int j = m[static_cast<std::size_t>(a)];
            double sw = std::sqrt(w0[j]);
            cx u = (mesh.nodes[static_cast<std::size_t>(j)] - z0) / scale, p = 1.0;
            for (int d = 0; d <= degree; ++d, p *= u) V(a, d) = sw * p;
            rhs[a] = sw * bv[j];
            area += w0[j];
        }
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(V);
        Eigen::MatrixXcd R = qr.matrixQR().topRows(degree + 1).triangularView<Eigen::Upper>();
        double r00 = std::abs(R(0, 0));
        for (int d = 1; d <= degree; ++d)
            if (std::abs(R(d, d)) < 1e-12 * r00)
                throw std::runtime_error("fit of degree " + std::to_string(degree) +
                                         " is ill-conditioned; lower the degree");
        // Qᴴ rhs: the tail beyond the first d+1 entries is the residual of the degree-d fit
        Eigen::VectorXcd qtb = qr.householderQ().adjoint() * rhs;
        double tail = qtb.tail(n - degree - 1).squaredNorm();
        for (int d = degree; d >= 0; --d) {
            sup[static_cast<std::size_t>(d)] = std::max(sup[static_cast<std::size_t>(d)], std::sqrt(tail / area));
            if (d > 0) tail += std::norm(qtb[d]);
        }
    }
    BdaResult out;
    for (int d = 0; d <= degree; ++d) out.by_degree.emplace_back(d, sup[static_cast<std::size_t>(d)]);
    out.value = sup.back();
    return out;
}

ChainBound oscillation_chain_bound(const Symbol& b, const DyadicInterval& I, cx z, const Mesh& mesh) {
    auto chain = chain_to_top(z, I);
    const double infl = mesh.cfg.inflation_factor;
    auto average = [&](double x0, double x1, double h, cx& avg) {
        cx s = 0.0;
        double m = 0.0;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            cx w = mesh.nodes[i];
            if (w.real() >= x0 && w.real() < x1 && w.imag() < h) {
                s += b.value(w) * mesh.weights[static_cast<Eigen::Index>(i)];
                m += mesh.weights[static_cast<Eigen::Index>(i)];
            }
        }
        if (m > 0.0) avg = s / m;
        return m;
    };
    ChainBound out;
    out.length = static_cast<int>(chain.size());
    cx bq = 0.0;
    if (average(I.x0(), I.x1(), I.length(), bq) <= 0.0) throw std::domain_error("box holds no mesh nodes");
    out.lhs = std::abs(b.value(z) - bq);
    for (const auto& J : chain) {
        cx bj = 0.0;
        if (average(J.x0(), J.x1(), J.length(), bj) <= 0.0) continue;
        double c = 0.5 * (J.x0() + J.x1()), half = 0.5 * infl * J.length();
        double s = 0.0, m = 0.0;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            cx w = mesh.nodes[i];
            if (w.real() >= c - half && w.real() < c + half && w.imag() < J.length()) {
                s += std::abs(b.value(w) - bj) * mesh.weights[static_cast<Eigen::Index>(i)];
                m += mesh.weights[static_cast<Eigen::Index>(i)];
            }
        }
        if (m > 0.0) out.rhs += s / m;
    }
    return out;
}

}  // namespace bglab
