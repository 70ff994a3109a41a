#pragma once
// The APR counterexample: σ = |Im z - ½|^{-1/2}, b = σ^{1/2} on D(i/2, ¼).
// The dyadic mesh cannot see an interior singular line, so the integrals
// here run on a band of square cells that shrink toward Im z = ½.

#include <functional>
#include <utility>
#include <vector>

#include "bglab/geometry.hpp"

namespace bglab {

inline constexpr cx kDiskCenter{0.0, 0.5};
inline constexpr double kDiskRadius = 0.25;

// Square [-¼,¼] x [¼,¾] cut into layers [½ ± d_{k+1}, ½ ± d_k], d_k = 2^{-k}/4,
// k < layers, plus the innermost [½, ½ ± d_layers]; each layer holds squares.
// layers < 1 is refused (std::invalid_argument).
std::vector<Rect> band_cells(int layers);
Mesh band_mesh(int layers, double alpha = 0.0);

// Polar quadrature of the disk: nr rings by nt sectors, exact sector areas,
// nodes at mid radius and mid angle (never on the horizontal diameter).
struct DiskSource {
    std::vector<cx> nodes;
    std::vector<double> area;  // Euclidean area
};
DiskSource disk_source(int nr = 48, int nt = 96);

// P(g χ_D)(z) with α = 0 and g sampled at the source nodes
std::vector<cx> project_on_disk(const std::vector<cx>& z, const DiskSource& src,
                                const std::function<cx(cx)>& g);

struct CounterexampleLevel {
    int layers = 0;
    std::size_t cells = 0, disk_cells = 0;
    double integral = 0.0;  // ∫_D |b|²|Pf|²σ dA_0
    double growth = 0.0;    // relative increase over the previous level
    double min_abs_pf = 0.0;
    double max_abs_pbf = 0.0;
};

struct CounterexampleStudy {
    std::vector<CounterexampleLevel> levels;
    double pf_center = 0.0;  // |Pf(i/2)|
    std::vector<std::pair<int, double>> b2_trace;  // (k_min, truncated [σ]_B₂)
};

// f = χ_D / A_0(D), so |Pf| ≥ 16/25 on D
CounterexampleStudy counterexample_study(const std::vector<int>& layers, const std::vector<int>& b2_kmins,
                                         const GlobalConfig& cfg, int src_rings = 48, int src_sectors = 96);

}  // namespace bglab
