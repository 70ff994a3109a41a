#include "bglab/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bglab/parallel.hpp"
#include "bglab/symbols.hpp"
#include "bglab/weights.hpp"

namespace bglab {

std::vector<Rect> band_cells(int layers) {
    if (layers < 1)
        throw std::invalid_argument("refused: the mesh is not refined near Im z = 1/2 (need at least one band layer)");
    std::vector<std::pair<double, double>> bands;  // distances from the line
    auto d = [](int k) { return 0.25 * std::ldexp(1.0, -k); };
    for (int k = 0; k < layers; ++k) bands.emplace_back(d(k + 1), d(k));
    bands.emplace_back(0.0, d(layers));
    std::vector<Rect> out;
    for (auto [a, b] : bands) {
        const double t = b - a;
        const int n = std::max(1, static_cast<int>(std::lround(0.5 / t)));
        for (int s : {1, -1}) {
            double y0 = 0.5 + s * a, y1 = 0.5 + s * b;
            if (y0 > y1) std::swap(y0, y1);
            for (int i = 0; i < n; ++i)
                out.push_back({-0.25 + 0.5 * i / n, -0.25 + 0.5 * (i + 1) / n, y0, y1});
        }
    }
    return out;
}

Mesh band_mesh(int layers, double alpha) { return mesh_from_rects(band_cells(layers), alpha); }

DiskSource disk_source(int nr, int nt) {
    if (nr < 1 || nt < 4) throw std::invalid_argument("disk source needs nr >= 1 and nt >= 4");
    DiskSource s;
    const double dt = 2.0 * std::numbers::pi / nt;
    for (int i = 0; i < nr; ++i) {
        const double r0 = kDiskRadius * i / nr, r1 = kDiskRadius * (i + 1) / nr;
        const double rm = 0.5 * (r0 + r1);
        const double area = 0.5 * (r1 * r1 - r0 * r0) * dt;
        for (int k = 0; k < nt; ++k) {
            // half-step offset keeps nodes off the singular diameter
            const double t = (k + 0.5) * dt + 0.25 * dt;
            s.nodes.push_back(kDiskCenter + std::polar(rm, t));
            s.area.push_back(area);
        }
    }
    return s;
}

std::vector<cx> project_on_disk(const std::vector<cx>& z, const DiskSource& src, const std::function<cx(cx)>& g) {
    std::vector<cx> gw(src.nodes.size());
    for (std::size_t j = 0; j < gw.size(); ++j) gw[j] = g(src.nodes[j]) * (src.area[j] / std::numbers::pi);
    std::vector<cx> out(z.size());
    parallel_rows(static_cast<long>(z.size()), [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            cx acc = 0.0;
            for (std::size_t j = 0; j < gw.size(); ++j) {
                const cx d = z[static_cast<std::size_t>(i)] - std::conj(src.nodes[j]);
                acc -= gw[j] / (d * d);
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
    });
    return out;
}

CounterexampleStudy counterexample_study(const std::vector<int>& layers, const std::vector<int>& b2_kmins,
                                         const GlobalConfig& cfg, int src_rings, int src_sectors) {
    if (layers.empty()) throw std::invalid_argument("refused: no refinement band levels configured");
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (layers[i] <= layers[i - 1]) throw std::invalid_argument("band levels must increase");

    CounterexampleStudy out;
    const auto sigma = counterexample_weight();
    const auto b = counterexample_symbol();
    // A_0(D) = (π/16)/π
    const double norm = 1.0 / (kDiskRadius * kDiskRadius);
    const DiskSource src = disk_source(src_rings, src_sectors);
    auto f = [&](cx) { return cx(norm); };
    auto bf = [&](cx w) { return norm * b->value(w); };

    out.pf_center = std::abs(project_on_disk({kDiskCenter}, src, f).front());

    for (int K : layers) {
        Mesh m = band_mesh(K, 0.0);
        std::vector<cx> z;
        std::vector<double> area;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (std::abs(m.nodes[i] - kDiskCenter) < kDiskRadius) {
                z.push_back(m.nodes[i]);
                area.push_back(m.weights[static_cast<Eigen::Index>(i)]);
            }
        const auto pf = project_on_disk(z, src, f);
        const auto pbf = project_on_disk(z, src, bf);
        CounterexampleLevel lv;
        lv.layers = K;
        lv.cells = m.size();
        lv.disk_cells = z.size();
        lv.min_abs_pf = INFINITY;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double bb = std::norm(b->value(z[i]));
            lv.integral += bb * std::norm(pf[i]) * sigma->value(z[i]) * area[i];
            lv.min_abs_pf = std::min(lv.min_abs_pf, std::abs(pf[i]));
            lv.max_abs_pbf = std::max(lv.max_abs_pbf, std::abs(pbf[i]));
        }
        if (!out.levels.empty()) lv.growth = lv.integral / out.levels.back().integral - 1.0;
        out.levels.push_back(lv);
    }

    for (int k : b2_kmins) {
        GlobalConfig g = cfg;
        g.k_min = k;
        g.alpha = 0.0;
        Mesh m = build_mesh(g);
        BoxFamily fam = BoxFamily::build(m, build_systems(g));
        out.b2_trace.emplace_back(k, b2_characteristic(*sigma, m, fam).value);
    }
    return out;
}

}  // namespace bglab
