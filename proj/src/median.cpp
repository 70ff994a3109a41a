#include "bglab/median.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bglab {

namespace {

constexpr double kPi = std::numbers::pi;

int quadrant_u(cx u) {
    double x = u.real(), y = u.imag();
    if (x == 0.0 && y == 0.0) return 0;
    if (x > 0.0 && y >= 0.0) return 0;
    if (x <= 0.0 && y > 0.0) return 1;
    if (x < 0.0 && y <= 0.0) return 2;
    return 3;
}

bool closed_u(cx u, int j) {
    double x = u.real(), y = u.imag();
    switch (j & 3) {
        case 0: return x >= 0.0 && y >= 0.0;
        case 1: return x <= 0.0 && y >= 0.0;
        case 2: return x <= 0.0 && y <= 0.0;
        default: return x >= 0.0 && y <= 0.0;
    }
}

cx rot(double theta) { return std::polar(1.0, theta); }

// e^{iθ₁}/(z - w̄)^{2+α}
cx rotated_kernel(cx z, cx w, double alpha, double theta1) {
    cx d = z - std::conj(w);
    cx k = alpha == 0.0 ? 1.0 / (d * d) : std::exp(-(2.0 + alpha) * std::log(d));
    return rot(theta1) * k;
}

}  // namespace

int quadrant_of(cx v, cx center, double theta) { return quadrant_u(rot(theta) * v - rot(theta) * center); }

bool in_closed_quadrant(cx v, cx center, double theta, int j) {
    return closed_u(rot(theta) * v - rot(theta) * center, j);
}

int quadrant_of(cx v, const ComplexMedian& m) { return quadrant_u(rot(m.theta) * v - m.rotated); }

bool in_closed_quadrant(cx v, const ComplexMedian& m, int j) { return closed_u(rot(m.theta) * v - m.rotated, j); }

std::array<double, 4> quadrant_masses(const std::vector<std::pair<cx, double>>& values, cx center, double theta,
                                      bool closed) {
    std::array<double, 4> out{};
    for (const auto& [v, w] : values) {
        if (closed) {
            for (int j = 0; j < 4; ++j)
                if (in_closed_quadrant(v, center, theta, j)) out[static_cast<std::size_t>(j)] += w;
        } else {
            out[static_cast<std::size_t>(quadrant_of(v, center, theta))] += w;
        }
    }
    return out;
}

double weighted_median(std::vector<std::pair<double, double>> values) {
    if (values.empty()) throw std::invalid_argument("weighted median of an empty list");
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (const auto& p : values) total += p.second;
    double acc = 0.0;
    for (const auto& [v, w] : values) {
        acc += w;
        if (acc >= 0.5 * total) return v;
    }
    return values.back().first;
}

ComplexMedian complex_median(const std::vector<std::pair<cx, double>>& values) {
    double total = 0.0;
    for (const auto& p : values) total += p.second;
    if (!(total > 0.0)) throw std::invalid_argument("complex median needs positive total mass");
    ComplexMedian best;
    best.min_fraction = -1.0;
    std::vector<std::pair<double, double>> re(values.size()), im(values.size());
    std::vector<cx> u(values.size());
    for (int k = 0; k < 180; ++k) {
        double theta = k * kPi / 360.0;
        cx e = rot(theta);
        for (std::size_t i = 0; i < values.size(); ++i) {
            u[i] = e * values[i].first;
            re[i] = {u[i].real(), values[i].second};
            im[i] = {u[i].imag(), values[i].second};
        }
        cx m(weighted_median(re), weighted_median(im));
        ComplexMedian c;
        c.theta = theta;
        c.grid_index = k;
        c.rotated = m;
        c.center = std::conj(e) * m;
        c.total = total;
        for (std::size_t i = 0; i < values.size(); ++i)
            for (int j = 0; j < 4; ++j)
                if (closed_u(u[i] - m, j)) c.masses[static_cast<std::size_t>(j)] += values[i].second;
        c.min_fraction = *std::min_element(c.masses.begin(), c.masses.end()) / total;
        if (c.min_fraction >= 1.0 / 16.0) return c;
        if (c.min_fraction > best.min_fraction) best = c;
    }
    throw MedianSearchError("no grid angle reaches the 1/16 quadrant bound", best);
}

TestConfiguration build_test_configuration(double a, double b, const Symbol& sym, const Mesh& mesh,
                                           const GlobalConfig& cfg) {
    const double len = b - a;
    if (!(len > 0.0)) throw std::invalid_argument("empty base interval");
    const int A = cfg.frak_A;
    const double alpha = mesh.alpha();
    double y_top = 0.0;
    for (const auto& c : mesh.cells) y_top = std::max(y_top, c.rect.y1);
    double mid = 0.5 * (a + b), half_big = A * len;
    std::string missing;
    if (2.0 * A * len > y_top) missing += " height " + std::to_string(2.0 * A * len) + " above mesh top";
    if (mid - half_big < mesh.x_lo || mid + half_big > mesh.x_hi) missing += " enlarged interval outside mesh";
    if (len < std::ldexp(1.0, cfg.k_min + 1)) missing += " base interval below the finest resolved scale";
    if (!missing.empty()) throw std::domain_error("test configuration not covered:" + missing);

    TestConfiguration tc;
    tc.a = a;
    tc.b = b;
    tc.frak_A = A;
    tc.alpha = alpha;
    tc.S = {a, b, A * len, (A + 1) * len};
    tc.aux = mesh_from_rects(uniform_grid(tc.S, 16, 16), alpha);
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        cx z = mesh.nodes[i];
        if (z.real() >= a && z.real() < b && z.imag() < len) tc.q_cells.push_back(static_cast<int>(i));
    }
    if (tc.q_cells.empty()) throw std::domain_error("Q_I holds no mesh nodes");
    tc.b_q.resize(static_cast<Eigen::Index>(tc.q_cells.size()));
    for (std::size_t i = 0; i < tc.q_cells.size(); ++i)
        tc.b_q[static_cast<Eigen::Index>(i)] = sym.value(mesh.nodes[static_cast<std::size_t>(tc.q_cells[i])]);
    tc.b_s = symbol_values(sym, tc.aux);

    std::vector<std::pair<cx, double>> vals;
    for (std::size_t i = 0; i < tc.aux.size(); ++i)
        vals.emplace_back(tc.b_s[static_cast<Eigen::Index>(i)], tc.aux.weights[static_cast<Eigen::Index>(i)]);
    tc.median = complex_median(vals);
    for (std::size_t i = 0; i < tc.aux.size(); ++i)
        for (int j = 0; j < 4; ++j)
            if (in_closed_quadrant(tc.b_s[static_cast<Eigen::Index>(i)], tc.median, j))
                tc.F[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < tc.q_cells.size(); ++i) {
        int q = quadrant_of(tc.b_q[static_cast<Eigen::Index>(i)], tc.median);
        tc.B[static_cast<std::size_t>((q + 2) & 3)].push_back(static_cast<int>(i));
    }
    double aS = measure_A_alpha(tc.S, alpha);
    tc.min_F_fraction = std::numeric_limits<double>::infinity();
    for (const auto& f : tc.F) {
        double m = 0.0;
        for (int i : f) m += tc.aux.weights[i];
        tc.min_F_fraction = std::min(tc.min_F_fraction, m / aS);
    }

    cx zQ(mid, 0.5 * len), wS = tc.S.center();
    tc.theta1 = std::fmod((2.0 + alpha) * std::arg(zQ - std::conj(wS)), 2.0 * kPi);
    double aQ = measure_A_alpha(Rect{a, b, 0.0, len}, alpha);
    tc.c1 = std::numeric_limits<double>::infinity();
    std::vector<char> inB1(tc.q_cells.size(), 0), inF1(tc.aux.size(), 0);
    for (int i : tc.B[0]) inB1[static_cast<std::size_t>(i)] = 1;
    for (int i : tc.F[0]) inF1[static_cast<std::size_t>(i)] = 1;
    for (std::size_t qi = 0; qi < tc.q_cells.size(); ++qi) {
        cx z = mesh.nodes[static_cast<std::size_t>(tc.q_cells[qi])];
        for (std::size_t si = 0; si < tc.aux.size(); ++si) {
            cx w = tc.aux.nodes[si];
            cx d = z - std::conj(w);
            double dp = std::pow(std::abs(d), 2.0 + alpha);
            tc.c1 = std::min(tc.c1, aQ / dp);
            tc.c2 = std::max(tc.c2, aQ / dp);
            tc.max_dist_pow = std::max(tc.max_dist_pow, dp);
            tc.angle_dev = std::max(tc.angle_dev, std::abs(std::arg(d) - 0.5 * kPi));
            cx k = rotated_kernel(z, w, alpha, tc.theta1);
            double ratio = std::abs(k.imag()) / k.real();
            if (!(k.real() > 0.0)) ratio = std::numeric_limits<double>::infinity();
            tc.step2_ratio = std::max(tc.step2_ratio, ratio);
            tc.step2_const = std::max(tc.step2_const, std::abs(k) / k.real());
            if (inB1[qi] && inF1[si]) tc.step2_ratio_b1f1 = std::max(tc.step2_ratio_b1f1, ratio);
        }
    }
    return tc;
}

nlohmann::json TestConfiguration::to_json() const {
    nlohmann::json j;
    j["interval"] = {a, b};
    j["frak_A"] = frak_A;
    j["theta"] = median.theta;
    j["theta1"] = theta1;
    j["median"] = {median.center.real(), median.center.imag()};
    j["quadrant_fractions"] = nlohmann::json::array();
    for (double m : median.masses) j["quadrant_fractions"].push_back(m / median.total);
    j["min_F_fraction"] = min_F_fraction;
    j["c1"] = c1;
    j["c2"] = c2;
    j["angle_dev"] = angle_dev;
    j["step2_ratio"] = step2_ratio;
    j["step2_ratio_b1f1"] = step2_ratio_b1f1;
    j["step2_const"] = step2_const;
    return j;
}

LowerBound oscillation_lower_bound(const TestConfiguration& tc, const Weight& mu, const Weight& lambda,
                                   const Mesh& mesh) {
    LowerBound lb;
    const double alpha = tc.alpha;
    const auto nq = tc.q_cells.size();
    std::vector<double> wq(nq), nuq(nq), linv(nq);
    double nuQ = 0.0, mass = 0.0;
    cx bQ = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
        cx z = mesh.nodes[static_cast<std::size_t>(tc.q_cells[i])];
        wq[i] = mesh.weights[tc.q_cells[i]];
        double m = mu.value(z), l = lambda.value(z);
        nuq[i] = std::sqrt(m / l);
        linv[i] = 1.0 / l;
        nuQ += nuq[i] * wq[i];
        mass += wq[i];
        bQ += tc.b_q[static_cast<Eigen::Index>(i)] * wq[i];
    }
    bQ /= mass;
    for (std::size_t i = 0; i < nq; ++i) {
        lb.lhs += std::abs(tc.b_q[static_cast<Eigen::Index>(i)] - bQ) * wq[i];
        lb.lhs_cm += std::abs(tc.b_q[static_cast<Eigen::Index>(i)] - tc.median.center) * wq[i];
    }
    lb.lhs /= nuQ;
    lb.lhs_cm *= 2.0 / nuQ;

    const double r = tc.step2_ratio;
    const cx ia = std::exp(cx(0.0, 0.5 * kPi * (2.0 + alpha)));
    lb.step1_worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 4; ++j) {
        const auto& F = tc.F[static_cast<std::size_t>(j)];
        const auto& B = tc.B[static_cast<std::size_t>(j)];
        double aF = 0.0, muF = 0.0;
        for (int s : F) {
            aF += tc.aux.weights[s];
            muF += mu.value(tc.aux.nodes[static_cast<std::size_t>(s)]) * tc.aux.weights[s];
        }
        double linvB = 0.0;
        for (int q : B) linvB += linv[static_cast<std::size_t>(q)] * wq[static_cast<std::size_t>(q)];
        const double phi = tc.median.theta - (j + 2) * 0.5 * kPi - 0.25 * kPi;
        const cx ephi = rot(phi);
        double mid = 0.0, mid_plus = 0.0, l2 = 0.0;
        for (int q : B) {
            cx z = mesh.nodes[static_cast<std::size_t>(tc.q_cells[static_cast<std::size_t>(q)])];
            cx bz = tc.b_q[q];
            cx acc = 0.0, acc_plus = 0.0;
            for (int s : F) {
                cx w = tc.aux.nodes[static_cast<std::size_t>(s)];
                cx delta = bz - tc.b_s[s];
                cx d = z - std::conj(w);
                cx k = alpha == 0.0 ? 1.0 / (d * d) : std::exp(-(2.0 + alpha) * std::log(d));
                acc += delta * ia * k * tc.aux.weights[s];
                acc_plus += delta * std::abs(k) * tc.aux.weights[s];
                lb.step1_worst = std::min(lb.step1_worst, (ephi * delta).real() - std::abs(delta) / std::sqrt(2.0));
            }
            double wz = wq[static_cast<std::size_t>(q)];
            mid += std::abs(acc) * wz;
            mid_plus += std::abs(acc_plus) * wz;
            l2 += std::norm(acc) * lambda.value(z) * wz;
        }
        auto js = static_cast<std::size_t>(j);
        lb.middle[js] = mid / nuQ;
        lb.middle_plus[js] = mid_plus / nuQ;
        lb.image_norm[js] = std::sqrt(l2);
        lb.cs_factor[js] = std::sqrt(muF * linvB) / nuQ;
        lb.K[js] = aF > 0.0 ? std::sqrt(2.0) * tc.step2_const * tc.max_dist_pow / ((1.0 - r) * aF)
                            : std::numeric_limits<double>::infinity();
        lb.K_plus[js] = aF > 0.0 ? std::sqrt(2.0) * tc.max_dist_pow / aF : std::numeric_limits<double>::infinity();
        if (!B.empty()) {
            lb.chain_rhs += 2.0 * lb.K[js] * lb.middle[js];
            lb.chain_rhs_plus += 2.0 * lb.K_plus[js] * lb.middle_plus[js];
        }
        lb.rhs_functional += lb.middle[js];
    }
    if (!std::isfinite(lb.step1_worst)) lb.step1_worst = 0.0;
    const double slack = 1e-12 * std::max(1.0, lb.lhs);
    lb.chain_holds = r < 1.0 && lb.lhs <= lb.lhs_cm + slack && lb.lhs_cm <= lb.chain_rhs * (1.0 + 1e-12) + slack;
    lb.chain_plus_holds = lb.lhs_cm <= lb.chain_rhs_plus * (1.0 + 1e-12) + slack;
    return lb;
}

nlohmann::json LowerBound::to_json() const {
    auto arr = [](const std::array<double, 4>& a) { return nlohmann::json(std::vector<double>(a.begin(), a.end())); };
    return {{"lhs", lhs},
            {"lhs_cm", lhs_cm},
            {"middle", arr(middle)},
            {"middle_plus", arr(middle_plus)},
            {"K", arr(K)},
            {"K_plus", arr(K_plus)},
            {"cs_factor", arr(cs_factor)},
            {"image_norm", arr(image_norm)},
            {"chain_rhs", chain_rhs},
            {"chain_rhs_plus", chain_rhs_plus},
            {"chain_holds", chain_holds},
            {"chain_plus_holds", chain_plus_holds},
            {"step1_worst", step1_worst},
            {"rhs_functional", rhs_functional}};
}

Step2Report step2_kernel_real_part_check(const TestConfiguration& tc, const Mesh& mesh) {
    Step2Report rep;
    rep.ratio = tc.step2_ratio;
    rep.ratio_b1f1 = tc.step2_ratio_b1f1;
    rep.const_ratio = tc.step2_const;
    rep.target = 2.0 / tc.frak_A;
    rep.pass = tc.step2_ratio <= rep.target;
    const double len = tc.b - tc.a, alpha = tc.alpha;
    const double aQ = measure_A_alpha(Rect{tc.a, tc.b, 0.0, len}, alpha);
    cx zQ(0.5 * (tc.a + tc.b), 0.5 * len);
    for (int A = 4; A <= 32; ++A) {
        Rect S{tc.a, tc.b, A * len, (A + 1) * len};
        auto aux = uniform_grid(S, 16, 16);
        double theta1 = (2.0 + alpha) * std::arg(zQ - std::conj(S.center()));
        double worst = 0.0, c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
        for (int q : tc.q_cells) {
            cx z = mesh.nodes[static_cast<std::size_t>(q)];
            for (const auto& cell : aux) {
                cx w = cell.center();
                cx k = rotated_kernel(z, w, alpha, theta1);
                worst = std::max(worst, k.real() > 0.0 ? std::abs(k.imag()) / k.real()
                                                       : std::numeric_limits<double>::infinity());
                double v = aQ * std::pow(std::abs(k), 1.0);
                c1 = std::min(c1, v);
                c2 = std::max(c2, v);
            }
        }
        rep.sweep.emplace_back(A, worst);
        rep.bracket.emplace_back(A, c2 / c1);
        if (rep.minimal_A < 0 && worst <= 2.0 / A) rep.minimal_A = A;
    }
    return rep;
}

double disjointify(std::vector<TestConfiguration>& seq) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < seq.size(); ++j) {
        auto& tc = seq[j];
        double aS = measure_A_alpha(tc.S, tc.alpha);
        for (auto& F : tc.F) {
            std::vector<int> keep;
            for (int s : F) {
                cx w = tc.aux.nodes[static_cast<std::size_t>(s)];
                bool hit = false;
                for (std::size_t l = j + 1; l < seq.size() && !hit; ++l) hit = seq[l].S.contains(w);
                if (!hit) keep.push_back(s);
            }
            F = std::move(keep);
            double m = 0.0;
            for (int s : F) m += tc.aux.weights[s];
            worst = std::min(worst, m / aS);
        }
    }
    return worst;
}

}  // namespace bglab
