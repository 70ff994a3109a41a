#include "bglab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bglab {

void GlobalConfig::validate() const {
    if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
    if (!(k_min < k_max)) throw std::invalid_argument("k_min must be below k_max");
    if (!(x_extent > 0.0)) throw std::invalid_argument("x_extent must be positive");
    if (!(inflation_factor > 1.0 && inflation_factor < 2.0))
        throw std::invalid_argument("inflation_factor must lie in (1,2)");
    if (frak_A < 4) throw std::invalid_argument("frak_A must be at least 4");
    if (!(bergman_radius > 0.0)) throw std::invalid_argument("bergman_radius must be positive");
}

const char* system_name(System s) { return s == System::D1 ? "D1" : "D2"; }

double system_offset(System s, int level) {
    if (s == System::D1) return 0.0;
    double h = std::ldexp(1.0, level);
    return (level % 2 == 0 ? 1.0 : -1.0) * h / 3.0;
}

double DyadicInterval::length() const { return std::ldexp(1.0, level); }
double DyadicInterval::x0() const {
    return static_cast<double>(index) * length() + system_offset(system, level);
}
double DyadicInterval::x1() const { return x0() + length(); }

static std::int64_t floor_div2(std::int64_t v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// D2 children of (k+1, J) are level-k indices 2J - (-1)^k and 2J - (-1)^k + 1.
DyadicInterval DyadicInterval::parent() const {
    if (system == System::D1) return {system, level + 1, floor_div2(index)};
    std::int64_t sgn = (level % 2 == 0) ? 1 : -1;
    return {system, level + 1, floor_div2(index + sgn)};
}

std::array<DyadicInterval, 2> DyadicInterval::children() const {
    int k = level - 1;
    std::int64_t first = 2 * index;
    if (system == System::D2) first -= (k % 2 == 0) ? 1 : -1;
    return {DyadicInterval{system, k, first}, DyadicInterval{system, k, first + 1}};
}

DyadicInterval DyadicInterval::containing(System s, int level, double x) {
    double h = std::ldexp(1.0, level);
    auto j = static_cast<std::int64_t>(std::floor((x - system_offset(s, level)) / h));
    return {s, level, j};
}

CarlesonBox CarlesonBox::of(const DyadicInterval& I, BoxKind kind, double inflation) {
    return {I.x0(), I.x1(), kind, inflation};
}

Rect CarlesonBox::region() const {
    double h = b - a;
    switch (kind) {
        case BoxKind::Full: return {a, b, 0.0, h};
        case BoxKind::Upper: return {a, b, 0.5 * h, h};
        case BoxKind::Inflated: {
            double c = 0.5 * (a + b), half = 0.5 * inflation * h;
            return {c - half, c + half, 0.0, h};
        }
    }
    return {};
}

bool CarlesonBox::contains(cx z) const {
    Rect r = region();
    return z.real() >= r.x0 && z.real() < r.x1 && z.imag() > r.y0 && z.imag() < r.y1;
}

double measure_A_alpha(const Rect& r, double alpha) {
    if (!(alpha > -1.0)) throw std::invalid_argument("alpha must exceed -1");
    double e = alpha + 1.0;
    return r.width() * std::pow(2.0, alpha) *
           (std::pow(r.y1, e) - std::pow(std::max(r.y0, 0.0), e)) / std::numbers::pi;
}

double measure_A_alpha(const CarlesonBox& box, double alpha) {
    return measure_A_alpha(box.region(), alpha);
}

int Systems::find(const DyadicInterval& I) const {
    const auto& v = of(I.system);
    auto it = std::lower_bound(v.begin(), v.end(), I, [](const SystemNode& n, const DyadicInterval& J) {
        if (n.interval.level != J.level) return n.interval.level < J.level;
        return n.interval.index < J.index;
    });
    if (it != v.end() && it->interval == I) return static_cast<int>(it - v.begin());
    return -1;
}

Systems build_systems(const GlobalConfig& cfg) {
    cfg.validate();
    Systems out;
    const double X = cfg.x_extent;
    for (System s : {System::D1, System::D2}) {
        auto& v = out.nodes[static_cast<int>(s)];
        for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
            double h = std::ldexp(1.0, k), off = system_offset(s, k);
            auto jlo = static_cast<std::int64_t>(std::floor((-X - off) / h));
            auto jhi = static_cast<std::int64_t>(std::ceil((X - off) / h));
            for (std::int64_t j = jlo; j <= jhi; ++j) {
                DyadicInterval I{s, k, j};
                if (I.x0() < X && I.x1() > -X) v.push_back({I});
            }
        }
    }
    for (System s : {System::D1, System::D2}) {
        auto& v = out.nodes[static_cast<int>(s)];
        for (std::size_t p = 0; p < v.size(); ++p) {
            const auto& I = v[p].interval;
            if (I.level < cfg.k_max) v[p].parent = out.find(I.parent());
            if (I.level > cfg.k_min) {
                auto ch = I.children();
                v[p].child = {out.find(ch[0]), out.find(ch[1])};
            }
        }
    }
    return out;
}

std::vector<DyadicInterval> chain_to_top(cx z, const DyadicInterval& I) {
    double y = z.imag();
    if (!(y > 0.0) || !I.contains(z.real()) || !(y < I.length()))
        throw std::domain_error("point outside the Carleson box");
    std::vector<DyadicInterval> chain{I};
    while (!(y >= 0.5 * chain.back().length())) {
        auto ch = chain.back().children();
        chain.push_back(ch[0].contains(z.real()) ? ch[0] : ch[1]);
    }
    return chain;
}

double bergman_distance(cx z, cx w) {
    if (!(z.imag() > 0.0) || !(w.imag() > 0.0))
        throw std::domain_error("Bergman distance needs points in the upper half-plane");
    double rho = std::abs(z - w) / std::abs(z - std::conj(w));
    return std::atanh(rho);
}

int Mesh::locate(cx z) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].rect.contains(z)) return static_cast<int>(i);
    return -1;
}

std::string Mesh::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& z : nodes) feed(&z, sizeof(cx));
    for (Eigen::Index i = 0; i < weights.size(); ++i) feed(&weights[i], sizeof(double));
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

static void finish_mesh(Mesh& m) {
    m.nodes.resize(m.cells.size());
    m.weights.resize(static_cast<Eigen::Index>(m.cells.size()));
    for (std::size_t i = 0; i < m.cells.size(); ++i) {
        m.nodes[i] = m.cells[i].rect.center();
        m.weights[static_cast<Eigen::Index>(i)] = measure_A_alpha(m.cells[i].rect, m.cfg.alpha);
    }
}

Mesh build_mesh(const GlobalConfig& cfg) {
    cfg.validate();
    Mesh m;
    m.cfg = cfg;
    m.dyadic = true;
    m.y_bottom = std::ldexp(1.0, cfg.k_min - 1);
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        double h = std::ldexp(1.0, k);
        auto n = static_cast<std::int64_t>(std::floor(cfg.x_extent / h));
        if (k == cfg.k_min) {
            m.x_lo = -static_cast<double>(n) * h;
            m.x_hi = static_cast<double>(n) * h;
        }
        for (std::int64_t j = -n; j < n; ++j) {
            Rect r{static_cast<double>(j) * h, static_cast<double>(j + 1) * h, 0.5 * h, h};
            m.cells.push_back({r, k, j});
        }
    }
    if (m.cells.empty()) throw std::invalid_argument("mesh is empty for this configuration");
    finish_mesh(m);
    return m;
}

Mesh mesh_from_rects(const std::vector<Rect>& rects, double alpha) {
    Mesh m;
    m.cfg.alpha = alpha;
    for (const auto& r : rects) m.cells.push_back({r, 0, 0});
    finish_mesh(m);
    return m;
}

std::vector<Rect> uniform_grid(const Rect& r, int nx, int ny) {
    std::vector<Rect> out;
    out.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.push_back({r.x0 + r.width() * i / nx, r.x0 + r.width() * (i + 1) / nx,
                           r.y0 + r.height() * j / ny, r.y0 + r.height() * (j + 1) / ny});
    return out;
}

std::vector<int> bergman_disk(cx z, double r, const Mesh& mesh) {
    std::vector<int> out;
    if (!(z.imag() > 0.0)) return out;
    // ρ < tanh r ⇔ |z-w|² < t²|z-w̄|²
    double t2 = std::tanh(r) * std::tanh(r);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        cx w = mesh.nodes[i];
        if (std::norm(z - w) <= t2 * std::norm(z - std::conj(w))) out.push_back(static_cast<int>(i));
    }
    return out;
}

WhitneyRadius whitney_radius(const Mesh& mesh) {
    if (mesh.cells.empty()) throw std::invalid_argument("empty mesh");
    std::map<int, double> per;
    for (std::size_t i = 0; i < mesh.cells.size(); ++i) {
        const Rect& r = mesh.cells[i].rect;
        cx c = mesh.nodes[i];
        double best = 0.0;
        for (cx corner : {cx(r.x0, r.y0), cx(r.x1, r.y0), cx(r.x0, r.y1), cx(r.x1, r.y1)})
            best = std::max(best, bergman_distance(c, corner));
        auto [it, fresh] = per.emplace(mesh.cells[i].level, best);
        if (!fresh) it->second = std::max(it->second, best);
    }
    WhitneyRadius out;
    for (auto [k, R] : per) {
        out.per_level.emplace_back(k, R);
        out.R = std::max(out.R, R);
    }
    for (auto [k, R] : out.per_level)
        if (std::abs(R - out.R) > 1e-12 * out.R)
            throw std::logic_error("Whitney radius depends on the level");
    return out;
}

int disk_overlap_count(const Mesh& mesh, double radius) {
    int best = 0;
    double t2 = std::tanh(radius) * std::tanh(radius);
    for (cx z : mesh.nodes) {
        int count = 0;
        for (cx c : mesh.nodes)
            if (std::norm(z - c) <= t2 * std::norm(z - std::conj(c))) ++count;
        best = std::max(best, count);
    }
    return best;
}

BoxFamily BoxFamily::build(const Mesh& mesh, const Systems& systems) {
    BoxFamily fam;
    const int N = static_cast<int>(mesh.size());
    int kmin = mesh.cfg.k_min, kmax = mesh.cfg.k_max;
    for (System s : {System::D1, System::D2}) {
        const int si = static_cast<int>(s);
        // box id per system position, created lazily
        std::vector<int> id_of(systems.of(s).size(), -1);
        fam.chains[si].assign(static_cast<std::size_t>(N), {});
        for (int c = 0; c < N; ++c) {
            cx z = mesh.nodes[static_cast<std::size_t>(c)];
            for (int k = kmin; k <= kmax; ++k) {
                double h = std::ldexp(1.0, k);
                if (!(z.imag() < h)) continue;
                auto I = DyadicInterval::containing(s, k, z.real());
                int p = systems.find(I);
                if (p < 0) continue;
                if (id_of[static_cast<std::size_t>(p)] < 0) {
                    Box b;
                    b.system = s;
                    b.level = k;
                    b.index = I.index;
                    b.x0 = I.x0();
                    b.x1 = I.x1();
                    b.h = h;
                    id_of[static_cast<std::size_t>(p)] = static_cast<int>(fam.boxes.size());
                    fam.boxes.push_back(std::move(b));
                }
                int id = id_of[static_cast<std::size_t>(p)];
                fam.boxes[static_cast<std::size_t>(id)].cells.push_back(c);
                fam.chains[si][static_cast<std::size_t>(c)].push_back(id);
            }
        }
    }
    for (auto& b : fam.boxes)
        for (int c : b.cells) b.mass += mesh.weights[c];
    return fam;
}

std::vector<int> BoxFamily::ids_of(System s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < boxes.size(); ++i)
        if (boxes[i].system == s) out.push_back(static_cast<int>(i));
    return out;
}

std::string to_json_dump(const Systems& systems) {
    nlohmann::json arr = nlohmann::json::array();
    for (System s : {System::D1, System::D2})
        for (const auto& n : systems.of(s))
            arr.push_back({{"system", system_name(s)},
                           {"level", n.interval.level},
                           {"index", n.interval.index},
                           {"x0", n.interval.x0()},
                           {"x1", n.interval.x1()}});
    return arr.dump(1);
}

}  // namespace bglab
