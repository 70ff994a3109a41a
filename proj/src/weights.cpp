#include "bglab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace bglab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Gauss16 = boost::math::quadrature::gauss<double, 16>;

// (α+1)(2y)^α/π
double density(double y, double alpha) {
    return (alpha + 1.0) * std::pow(2.0 * y, alpha) / std::numbers::pi;
}

// ∫_{y0}^{y1} c y^e dy with the divergence conventions of power weights
double power_moment(double y0, double y1, double e) {
    if (y1 <= y0) return 0.0;
    double f = e + 1.0;
    if (f <= 0.0 && y0 <= 0.0) return kInf;
    if (f == 0.0) return std::log(y1 / y0);
    return (std::pow(y1, f) - (y0 > 0.0 ? std::pow(y0, f) : 0.0)) / f;
}

class ConstantWeight final : public Weight {
public:
    explicit ConstantWeight(double c) : c_(c) {}
    std::string name() const override {
        std::ostringstream os;
        os << "const(" << c_ << ")";
        return os.str();
    }
    double value(cx) const override { return c_; }
    double integral(const Rect& r, double alpha, double p) const override {
        return std::pow(c_, p) * measure_A_alpha(r, alpha);
    }
    std::optional<std::pair<double, double>> extremes(const Rect&) const override { return {{c_, c_}}; }
    std::optional<std::pair<double, double>> power_form() const override { return {{c_, 0.0}}; }
    nlohmann::json spec() const override { return {{"kind", "constant"}, {"c", c_}}; }

private:
    double c_;
};

class PowerWeight final : public Weight {
public:
    PowerWeight(double s, double c) : s_(s), c_(c) {}
    std::string name() const override {
        std::ostringstream os;
        if (c_ != 1.0) os << c_ << "*";
        os << "y^" << s_;
        return os.str();
    }
    double value(cx z) const override { return c_ * std::pow(z.imag(), s_); }
    double integral(const Rect& r, double alpha, double p) const override {
        double k = std::pow(c_, p) * (alpha + 1.0) * std::pow(2.0, alpha) / std::numbers::pi;
        double m = power_moment(std::max(r.y0, 0.0), r.y1, s_ * p + alpha);
        return m == kInf ? kInf : k * r.width() * m;
    }
    std::optional<std::pair<double, double>> extremes(const Rect& r) const override {
        double y0 = std::max(r.y0, 0.0);
        double a = y0 > 0.0 ? c_ * std::pow(y0, s_) : (s_ > 0 ? 0.0 : (s_ == 0 ? c_ : kInf));
        double b = c_ * std::pow(r.y1, s_);
        return {{std::min(a, b), std::max(a, b)}};
    }
    std::optional<std::pair<double, double>> power_form() const override { return {{c_, s_}}; }
    nlohmann::json spec() const override {
        nlohmann::json j{{"kind", "power"}, {"s", s_}};
        if (c_ != 1.0) j["c"] = c_;
        return j;
    }

private:
    double s_, c_;
};

// |y - 1/2|^{-1/2}
class CounterexampleWeight final : public Weight {
public:
    std::string name() const override { return "|y-1/2|^-1/2"; }
    double value(cx z) const override { return 1.0 / std::sqrt(std::abs(z.imag() - 0.5)); }

    double integral(const Rect& r, double alpha, double p) const override {
        double q = -0.5 * p;  // exponent on |y - 1/2|
        double y0 = std::max(r.y0, 0.0), y1 = r.y1;
        double total = 0.0;
        // below the line: t = 1/2 - y, above: t = y - 1/2
        if (y0 < 0.5) {
            double ta = std::max(0.5 - y1, 0.0), tb = 0.5 - y0;
            double v = side(ta, tb, q, alpha, -1.0);
            if (v == kInf) return kInf;
            total += v;
        }
        if (y1 > 0.5) {
            double ta = std::max(y0 - 0.5, 0.0), tb = y1 - 0.5;
            double v = side(ta, tb, q, alpha, 1.0);
            if (v == kInf) return kInf;
            total += v;
        }
        return total * r.width();
    }

    std::optional<std::pair<double, double>> extremes(const Rect& r) const override {
        double y0 = std::max(r.y0, 0.0), y1 = r.y1;
        double dmax = std::max(std::abs(y0 - 0.5), std::abs(y1 - 0.5));
        double dmin = (y0 <= 0.5 && y1 >= 0.5) ? 0.0 : std::min(std::abs(y0 - 0.5), std::abs(y1 - 0.5));
        double lo = 1.0 / std::sqrt(dmax);
        double hi = dmin == 0.0 ? kInf : 1.0 / std::sqrt(dmin);
        return {{lo, hi}};
    }
    nlohmann::json spec() const override { return {{"kind", "apr_counterexample"}}; }

private:
    // ∫_{ta}^{tb} t^q g(1/2 + sgn t) dt, g the dA_α density
    static double side(double ta, double tb, double q, double alpha, double sgn) {
        if (tb <= ta) return 0.0;
        if (q <= -1.0 && ta <= 0.0) return kInf;
        if (alpha == 0.0) {
            double g = 1.0 / std::numbers::pi;
            if (q == -1.0) return g * std::log(tb / ta);
            return g * (std::pow(tb, q + 1.0) - std::pow(ta, q + 1.0)) / (q + 1.0);
        }
        if (q > -1.0) {
            // u = t^{q+1} removes the endpoint singularity
            double e = 1.0 / (q + 1.0);
            auto f = [&](double u) { return density(0.5 + sgn * std::pow(u, e), alpha); };
            return Gauss16::integrate(f, std::pow(ta, q + 1.0), std::pow(tb, q + 1.0)) * e;
        }
        auto f = [&](double v) {
            double t = std::exp(v);
            return std::pow(t, q + 1.0) * density(0.5 + sgn * t, alpha);
        };
        return Gauss16::integrate(f, std::log(ta), std::log(tb));
    }
};

class ConformalWeight final : public Weight {
public:
    explicit ConformalWeight(double eta) : eta_(eta) {}
    std::string name() const override {
        std::ostringstream os;
        os << "|h'|^" << eta_;
        return os.str();
    }
    // |h'(z)| = 2/|z+i|^2
    double value(cx z) const override { return std::pow(2.0 / std::norm(z + cx(0, 1)), eta_); }
    nlohmann::json spec() const override { return {{"kind", "conformal"}, {"eta", eta_}}; }

private:
    double eta_;
};

class GridWeight final : public Weight {
public:
    GridWeight(std::vector<double> v, const Mesh& mesh) : values_(std::move(v)) {
        if (values_.size() != mesh.size())
            throw std::invalid_argument("grid weight length does not match the mesh");
        for (double x : values_)
            if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("grid weight must be positive");
        rects_.reserve(mesh.size());
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            rects_.push_back(mesh.cells[i].rect);
            if (mesh.dyadic) lookup_[{mesh.cells[i].level, mesh.cells[i].index}] = static_cast<int>(i);
        }
        dyadic_ = mesh.dyadic;
    }
    std::string name() const override { return "grid"; }
    double value(cx z) const override {
        int i = locate(z);
        if (i < 0) throw std::domain_error("grid weight evaluated outside its mesh");
        return values_[static_cast<std::size_t>(i)];
    }
    double integral(const Rect& r, double alpha, double p) const override {
        // exact for piecewise-constant data: sum over overlapping cells
        double s = 0.0;
        for (std::size_t i = 0; i < rects_.size(); ++i) {
            const Rect& c = rects_[i];
            Rect o{std::max(c.x0, r.x0), std::min(c.x1, r.x1), std::max(c.y0, r.y0), std::min(c.y1, r.y1)};
            if (o.x1 > o.x0 && o.y1 > o.y0) s += std::pow(values_[i], p) * measure_A_alpha(o, alpha);
        }
        return s;
    }
    nlohmann::json spec() const override { return {{"kind", "grid"}, {"n", values_.size()}}; }

private:
    int locate(cx z) const {
        if (dyadic_ && z.imag() > 0.0) {
            int k = static_cast<int>(std::floor(std::log2(z.imag()))) + 1;
            for (int kk : {k, k - 1, k + 1}) {
                double h = std::ldexp(1.0, kk);
                auto j = static_cast<std::int64_t>(std::floor(z.real() / h));
                auto it = lookup_.find({kk, j});
                if (it != lookup_.end() && rects_[static_cast<std::size_t>(it->second)].contains(z)) return it->second;
            }
            return -1;
        }
        for (std::size_t i = 0; i < rects_.size(); ++i)
            if (rects_[i].contains(z)) return static_cast<int>(i);
        return -1;
    }
    std::vector<double> values_;
    std::vector<Rect> rects_;
    std::map<std::pair<int, std::int64_t>, int> lookup_;
    bool dyadic_ = false;
};

class ReciprocalWeight final : public Weight {
public:
    explicit ReciprocalWeight(WeightPtr w) : w_(std::move(w)) {}
    std::string name() const override { return "1/" + w_->name(); }
    double value(cx z) const override { return 1.0 / w_->value(z); }
    double integral(const Rect& r, double alpha, double p) const override { return w_->integral(r, alpha, -p); }
    std::optional<std::pair<double, double>> extremes(const Rect& r) const override {
        auto e = w_->extremes(r);
        if (!e) return std::nullopt;
        return {{1.0 / e->second, e->first > 0.0 ? 1.0 / e->first : kInf}};
    }
    std::optional<std::pair<double, double>> power_form() const override {
        auto f = w_->power_form();
        if (!f) return std::nullopt;
        return {{1.0 / f->first, -f->second}};
    }
    nlohmann::json spec() const override { return {{"kind", "reciprocal"}, {"of", w_->spec()}}; }

private:
    WeightPtr w_;
};

class ScaledWeight final : public Weight {
public:
    ScaledWeight(WeightPtr w, double c) : w_(std::move(w)), c_(c) {}
    std::string name() const override {
        std::ostringstream os;
        os << c_ << "*" << w_->name();
        return os.str();
    }
    double value(cx z) const override { return c_ * w_->value(z); }
    double integral(const Rect& r, double alpha, double p) const override {
        return std::pow(c_, p) * w_->integral(r, alpha, p);
    }
    std::optional<std::pair<double, double>> extremes(const Rect& r) const override {
        auto e = w_->extremes(r);
        if (!e) return std::nullopt;
        return {{c_ * e->first, c_ * e->second}};
    }
    std::optional<std::pair<double, double>> power_form() const override {
        auto f = w_->power_form();
        if (!f) return std::nullopt;
        return {{c_ * f->first, f->second}};
    }
    nlohmann::json spec() const override { return {{"kind", "scaled"}, {"c", c_}, {"of", w_->spec()}}; }

private:
    WeightPtr w_;
    double c_;
};

// pointwise product of powers: Π w_k^{e_k} · y^t
class ProductWeight final : public Weight {
public:
    ProductWeight(std::vector<std::pair<WeightPtr, double>> f, double t, std::string label)
        : f_(std::move(f)), t_(t), label_(std::move(label)) {}
    std::string name() const override { return label_; }
    double value(cx z) const override {
        double v = std::pow(z.imag(), t_);
        for (const auto& [w, e] : f_) v *= std::pow(w->value(z), e);
        return v;
    }
    nlohmann::json spec() const override {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& [w, e] : f_) parts.push_back({{"weight", w->spec()}, {"exponent", e}});
        return {{"kind", "product"}, {"factors", parts}, {"y_power", t_}};
    }

private:
    std::vector<std::pair<WeightPtr, double>> f_;
    double t_;
    std::string label_;
};

}  // namespace

double Weight::integral(const Rect& r, double alpha, double p) const {
    double y0 = std::max(r.y0, 0.0);
    auto inner = [&](double y) {
        auto fx = [&](double x) { return std::pow(value(cx(x, y)), p); };
        return Gauss16::integrate(fx, r.x0, r.x1) * density(y, alpha);
    };
    return Gauss16::integrate(inner, y0, r.y1);
}

WeightPtr constant_weight(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("constant weight must be positive");
    return std::make_shared<ConstantWeight>(c);
}
WeightPtr power_weight(double s, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("power weight scale must be positive");
    if (s == 0.0) return constant_weight(c);
    return std::make_shared<PowerWeight>(s, c);
}
WeightPtr counterexample_weight() { return std::make_shared<CounterexampleWeight>(); }
WeightPtr conformal_weight(double eta) { return std::make_shared<ConformalWeight>(eta); }
WeightPtr grid_weight(std::vector<double> v, const Mesh& mesh) {
    return std::make_shared<GridWeight>(std::move(v), mesh);
}

WeightPtr reciprocal(WeightPtr w) {
    if (auto f = w->power_form()) return power_weight(-f->second, 1.0 / f->first);
    return std::make_shared<ReciprocalWeight>(std::move(w));
}

WeightPtr scaled(WeightPtr w, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("scale must be positive");
    if (auto f = w->power_form()) return power_weight(f->second, c * f->first);
    return std::make_shared<ScaledWeight>(std::move(w), c);
}

WeightPtr times_y_power(WeightPtr w, double t) {
    if (t == 0.0) return w;
    if (auto f = w->power_form()) return power_weight(f->second + t, f->first);
    std::ostringstream os;
    os << w->name() << "*y^" << t;
    return std::make_shared<ProductWeight>(std::vector<std::pair<WeightPtr, double>>{{w, 1.0}}, t, os.str());
}

WeightPtr bloom_nu(WeightPtr mu, WeightPtr lambda) {
    auto fm = mu->power_form(), fl = lambda->power_form();
    if (fm && fl)
        return power_weight(0.5 * (fm->second - fl->second), std::sqrt(fm->first / fl->first));
    std::string label = "(" + mu->name() + ")^1/2 (" + lambda->name() + ")^-1/2";
    return std::make_shared<ProductWeight>(
        std::vector<std::pair<WeightPtr, double>>{{mu, 0.5}, {lambda, -0.5}}, 0.0, label);
}

WeightPtr weight_from_json(const nlohmann::json& j, const Mesh* mesh) {
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("weight spec needs a kind");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant_weight(j.value("c", 1.0));
    if (kind == "power") return power_weight(j.at("s").get<double>(), j.value("c", 1.0));
    if (kind == "apr_counterexample") return counterexample_weight();
    if (kind == "conformal") return conformal_weight(j.value("eta", 0.5));
    if (kind == "grid") {
        if (!mesh) throw std::invalid_argument("grid weight needs a mesh");
        std::ifstream in(j.at("file").get<std::string>());
        if (!in) throw std::invalid_argument("cannot open grid weight file");
        std::vector<double> v;
        std::string tok;
        while (std::getline(in, tok)) {
            std::stringstream ls(tok);
            std::string cell;
            while (std::getline(ls, cell, ','))
                if (!cell.empty()) v.push_back(std::stod(cell));
        }
        return grid_weight(std::move(v), *mesh);
    }
    throw std::invalid_argument("unknown weight kind: " + kind);
}

Eigen::VectorXd node_values(const Weight& w, const Mesh& mesh) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i) v[static_cast<Eigen::Index>(i)] = w.value(mesh.nodes[i]);
    return v;
}

Eigen::VectorXd cell_integrals(const Weight& w, const Mesh& mesh, double p, double alpha) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = w.integral(mesh.cells[i].rect, alpha, p);
    return v;
}

Eigen::VectorXd cell_measures(const Mesh& mesh, double alpha) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = measure_A_alpha(mesh.cells[i].rect, alpha);
    return v;
}

Rect bottom_strip(const Mesh& mesh, const Box& box) {
    double a = std::max(box.x0, mesh.x_lo), b = std::min(box.x1, mesh.x_hi);
    if (!mesh.dyadic || b <= a) return {0, 0, 0, 0};
    return {a, b, 0.0, std::min(mesh.y_bottom, box.h)};
}

BoxIntegrator::BoxIntegrator(const Weight& w_, const Mesh& mesh_, double p_, double alpha_)
    : mesh(&mesh_), w(&w_), p(p_), alpha(alpha_), cells(cell_integrals(w_, mesh_, p_, alpha_)) {}

double BoxIntegrator::operator()(const Box& box, bool closure) const {
    double s = 0.0;
    for (int c : box.cells) s += cells[c];
    if (closure) {
        Rect r = bottom_strip(*mesh, box);
        if (r.width() > 0.0) s += w->integral(r, alpha, p);
    }
    return s;
}

double box_measure(const Mesh& mesh, const Box& box, double alpha, bool closure) {
    double s = 0.0;
    for (int c : box.cells) s += measure_A_alpha(mesh.cells[static_cast<std::size_t>(c)].rect, alpha);
    if (closure) {
        Rect r = bottom_strip(mesh, box);
        if (r.width() > 0.0) s += measure_A_alpha(r, alpha);
    }
    return s;
}

namespace {

void consider(Characteristic& c, double v, int id) {
    if (c.argmax < 0 || !(v <= c.value)) {
        c.value = std::isnan(v) ? kInf : v;
        c.argmax = id;
    }
    if (!(v <= kInfinityFlag)) c.infinite = true;
}

}  // namespace

Characteristic b2_characteristic(const Weight& w, const Mesh& mesh, const BoxFamily& fam) {
    double a = mesh.alpha();
    BoxIntegrator W(w, mesh, 1.0, a), Winv(w, mesh, -1.0, a);
    Characteristic out;
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const Box& b = fam.boxes[i];
        if (b.cells.empty()) continue;
        double m = box_measure(mesh, b, a);
        consider(out, (W(b) / m) * (Winv(b) / m), static_cast<int>(i));
    }
    return out;
}

Characteristic apr_constant(const Weight& w, const GlobalConfig& cfg, int grid, bool exact_extremes) {
    Characteristic out;
    int id = 0;
    auto handle = [&](double a, double b) {
        double h = b - a;
        Rect up{a, b, 0.5 * h, h};
        double lo = kInf, hi = 0.0;
        std::optional<std::pair<double, double>> e;
        if (exact_extremes) e = w.extremes(up);
        if (e) {
            lo = e->first;
            hi = e->second;
        } else {
            // interior sample points of an n x n grid
            for (int iy = 0; iy < grid; ++iy)
                for (int ix = 0; ix < grid; ++ix) {
                    cx z(a + h * (ix + 0.5) / grid, up.y0 + up.height() * (iy + 0.5) / grid);
                    double v = w.value(z);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        }
        double r = lo > 0.0 ? hi / lo : kInf;
        consider(out, r, id++);
    };
    auto sys = build_systems(cfg);
    for (System s : {System::D1, System::D2})
        for (const auto& n : sys.of(s)) handle(n.interval.x0(), n.interval.x1());
    // shifted non-dyadic boxes
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        double h = std::ldexp(1.0, k);
        for (int t = 1; t <= 8; ++t) {
            double shift = h * t / 9.0;
            auto n = static_cast<std::int64_t>(std::floor(cfg.x_extent / h));
            for (std::int64_t j = -n; j < n - 1; ++j) handle(j * h + shift, (j + 1) * h + shift);
        }
    }
    return out;
}

Characteristic reverse_holder_constant(const Weight& w, const Mesh& mesh, const BoxFamily& fam, double r) {
    if (!(r > 1.0)) throw std::invalid_argument("reverse Hölder exponent must exceed 1");
    double a = mesh.alpha();
    BoxIntegrator W(w, mesh, 1.0, a), Wr(w, mesh, r, a);
    Characteristic out;
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const Box& b = fam.boxes[i];
        if (b.cells.empty()) continue;
        double m = box_measure(mesh, b, a);
        double wr = Wr(b);
        double v = std::isfinite(wr) ? std::pow(wr / m, 1.0 / r) / (W(b) / m) : kInf;
        consider(out, v, static_cast<int>(i));
    }
    return out;
}

Characteristic binfty_characteristic(const Weight& w, const Mesh& mesh, const BoxFamily& fam, System s) {
    // σ1_Q restricted to the cells; M_D evaluated by box averages along chains
    const double a = mesh.alpha();
    Eigen::VectorXd ci = cell_integrals(w, mesh, 1.0, a);
    const int si = static_cast<int>(s);
    Characteristic out;
    // per box: cumulative mass and integral
    std::vector<double> bint(fam.boxes.size(), 0.0), bmass(fam.boxes.size(), 0.0);
    for (std::size_t i = 0; i < fam.boxes.size(); ++i)
        for (int c : fam.boxes[i].cells) {
            bint[i] += ci[c];
            bmass[i] += mesh.weights[c];
        }
    for (int id : fam.ids_of(s)) {
        const Box& Q = fam.boxes[static_cast<std::size_t>(id)];
        if (Q.cells.empty() || bint[static_cast<std::size_t>(id)] <= 0.0) continue;
        double acc = 0.0;
        for (int c : Q.cells) {
            // boxes J ⊆ Q containing the node: chain entries with level ≤ Q.level
            double m = 0.0;
            for (int jb : fam.chains[si][static_cast<std::size_t>(c)]) {
                const Box& J = fam.boxes[static_cast<std::size_t>(jb)];
                if (J.level > Q.level) break;
                m = std::max(m, bint[static_cast<std::size_t>(jb)] / bmass[static_cast<std::size_t>(jb)]);
            }
            acc += m * mesh.weights[c];
        }
        consider(out, acc / bint[static_cast<std::size_t>(id)], id);
    }
    return out;
}

BloomBalance bloom_balance(const WeightPtr& mu, const WeightPtr& lambda, const Mesh& mesh,
                           const BoxFamily& fam) {
    auto nu = bloom_nu(mu, lambda);
    double a = mesh.alpha();
    BoxIntegrator M(*mu, mesh, 1.0, a), L(*lambda, mesh, -1.0, a), V(*nu, mesh, 1.0, a);
    BloomBalance out{kInf, 0.0};
    for (const auto& b : fam.boxes) {
        if (b.cells.empty()) continue;
        double r = std::sqrt(M(b) * L(b)) / V(b);
        out.min_ratio = std::min(out.min_ratio, r);
        out.max_ratio = std::max(out.max_ratio, r);
    }
    return out;
}

Characteristic further_weighted_b2(const WeightPtr& sigma, double eps, const Mesh& mesh, const BoxFamily& fam) {
    double a = mesh.alpha();
    if (!(eps > 0.0) || !(a - 3.0 * eps > -1.0))
        throw std::invalid_argument("eps must satisfy 0 < eps and alpha - 3 eps > -1");
    auto first = times_y_power(sigma, -eps);
    auto second = times_y_power(reciprocal(sigma), eps);
    BoxIntegrator F(*first, mesh, 1.0, a - eps), S(*second, mesh, 1.0, a - 3.0 * eps);
    Characteristic out;
    for (std::size_t i = 0; i < fam.boxes.size(); ++i) {
        const Box& b = fam.boxes[i];
        if (b.cells.empty()) continue;
        double m1 = box_measure(mesh, b, a - eps), m3 = box_measure(mesh, b, a - 3.0 * eps);
        consider(out, (F(b) / m1) * (S(b) / m3), static_cast<int>(i));
    }
    return out;
}

nlohmann::json WeightReport::to_json() const {
    auto ch = [](const Characteristic& c) {
        nlohmann::json j{{"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json("inf")},
                         {"infinite", c.infinite}};
        return j;
    };
    nlohmann::json j{{"weight", name}, {"b2", ch(b2)}, {"apr", ch(apr)}, {"binfty", ch(binfty)},
                     {"b2_stable", b2_stable}};
    j["reverse_holder"] = nlohmann::json::array();
    for (const auto& [r, c] : rh) {
        auto e = ch(c);
        e["r"] = r;
        j["reverse_holder"].push_back(e);
    }
    j["convergence"] = nlohmann::json::array();
    for (const auto& [k, v] : convergence)
        j["convergence"].push_back({{"k_min", k}, {"b2", std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf")}});
    return j;
}

WeightReport weight_report(const WeightPtr& w, const GlobalConfig& cfg, const std::vector<double>& rh_exponents) {
    WeightReport rep;
    rep.name = w->name();
    auto mesh = build_mesh(cfg);
    auto fam = BoxFamily::build(mesh, build_systems(cfg));
    rep.b2 = b2_characteristic(*w, mesh, fam);
    rep.apr = apr_constant(*w, cfg);
    rep.binfty = binfty_characteristic(*w, mesh, fam, System::D1);
    for (double r : rh_exponents) rep.rh.emplace_back(r, reverse_holder_constant(*w, mesh, fam, r));
    rep.convergence.emplace_back(cfg.k_min, rep.b2.infinite ? kInf : rep.b2.value);
    for (int d = 1; d <= 2; ++d) {
        GlobalConfig c = cfg;
        c.k_min -= d;
        auto m = build_mesh(c);
        auto f = BoxFamily::build(m, build_systems(c));
        auto b2 = b2_characteristic(*w, m, f);
        rep.convergence.emplace_back(c.k_min, b2.infinite ? kInf : b2.value);
    }
    double v0 = rep.convergence.front().second, v2 = rep.convergence.back().second;
    rep.b2_stable = std::isfinite(v0) && std::isfinite(v2) && std::abs(v2 / v0 - 1.0) <= 0.10;
    if (!rep.b2_stable) rep.b2.infinite = true;
    return rep;
}

}  // namespace bglab
