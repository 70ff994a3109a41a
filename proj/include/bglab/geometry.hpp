#pragma once
// Dyadic Carleson geometry of the upper half-plane, truncated Whitney meshes
// and the box families used for every supremum over dyadic intervals.

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bglab {

using cx = std::complex<double>;

struct GlobalConfig {
    double alpha = 0.0;
    int k_min = -6;
    int k_max = 5;
    double x_extent = 8.0;
    double inflation_factor = 1.1;
    int frak_A = 8;
    double bergman_radius = 1.0;

    // throws std::invalid_argument on a violated invariant
    void validate() const;
};

enum class System { D1 = 0, D2 = 1 };
const char* system_name(System s);

// (-1)^k 2^k / 3 for D2, zero for D1
double system_offset(System s, int level);

struct DyadicInterval {
    System system = System::D1;
    int level = 0;
    std::int64_t index = 0;

    double length() const;
    double x0() const;
    double x1() const;
    bool contains(double x) const { return x >= x0() && x < x1(); }
    DyadicInterval parent() const;
    std::array<DyadicInterval, 2> children() const;
    // interval of this system at `level` that contains x
    static DyadicInterval containing(System s, int level, double x);
    bool operator==(const DyadicInterval&) const = default;
};

// Half-open rectangle [x0,x1) x [y0,y1).
struct Rect {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    cx center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool contains(cx z) const {
        return z.real() >= x0 && z.real() < x1 && z.imag() >= y0 && z.imag() < y1;
    }
};

enum class BoxKind { Full, Upper, Inflated };

struct CarlesonBox {
    double a = 0, b = 0;  // the interval I = [a,b)
    BoxKind kind = BoxKind::Full;
    double inflation = 1.1;

    static CarlesonBox of(const DyadicInterval& I, BoxKind kind, double inflation = 1.1);
    double side() const { return b - a; }
    Rect region() const;
    // Euclidean center of the square Q_I (same for every kind)
    cx center() const { return {0.5 * (a + b), 0.5 * (b - a)}; }
    bool contains(cx z) const;
};

// dA_alpha measure of a rectangle, closed form; alpha <= -1 throws.
double measure_A_alpha(const Rect& r, double alpha);
double measure_A_alpha(const CarlesonBox& box, double alpha);

struct SystemNode {
    DyadicInterval interval;
    int parent = -1;
    std::array<int, 2> child{-1, -1};
};

struct Systems {
    std::array<std::vector<SystemNode>, 2> nodes;  // indexed by System
    const std::vector<SystemNode>& of(System s) const { return nodes[static_cast<int>(s)]; }
    int find(const DyadicInterval& I) const;  // position or -1
};

// All intervals of both systems with 2^k_min <= |I| <= 2^k_max meeting [-X, X],
// ordered by level then index.
Systems build_systems(const GlobalConfig& cfg);

// I = I_0 ⊇ I_1 ⊇ ... down to the interval whose upper box holds z.
// Upper boxes are taken half-open: |J|/2 <= Im z < |J|.
std::vector<DyadicInterval> chain_to_top(cx z, const DyadicInterval& I);

double bergman_distance(cx z, cx w);

struct Cell {
    Rect rect;
    int level = 0;            // dyadic level; auxiliary cells use 0
    std::int64_t index = 0;
};

struct Mesh {
    GlobalConfig cfg;
    std::vector<Cell> cells;
    std::vector<cx> nodes;
    Eigen::VectorXd weights;  // A_alpha(cell)
    bool dyadic = false;
    double y_bottom = 0.0;    // lowest covered height (dyadic meshes)
    double x_lo = 0.0, x_hi = 0.0;

    std::size_t size() const { return cells.size(); }
    double alpha() const { return cfg.alpha; }
    // index of the cell containing z or -1
    int locate(cx z) const;
    std::string hash() const;
};

// Upper boxes of D1 at levels k_min..k_max with I inside [-X, X].
Mesh build_mesh(const GlobalConfig& cfg);
// Arbitrary rectangles; nodes are centers, weights closed-form A_alpha.
Mesh mesh_from_rects(const std::vector<Rect>& rects, double alpha);
// n x n uniform subdivision of a rectangle
std::vector<Rect> uniform_grid(const Rect& r, int nx, int ny);

// cells whose node lies within Bergman distance r of z
std::vector<int> bergman_disk(cx z, double r, const Mesh& mesh);

struct WhitneyRadius {
    double R = 0.0;
    std::vector<std::pair<int, double>> per_level;  // (level, R at that level)
};
// smallest R with Q_I^up ⊂ β(c, R) for every cell, c the cell center;
// throws std::logic_error if the per-level values disagree.
WhitneyRadius whitney_radius(const Mesh& mesh);
// max number of disks β(c_I, radius) (over cells) containing one node
int disk_overlap_count(const Mesh& mesh, double radius);

// Carleson boxes of both systems with their mesh members (node in Q_I).
struct Box {
    System system = System::D1;
    int level = 0;
    std::int64_t index = 0;
    double x0 = 0, x1 = 0, h = 0;
    std::vector<int> cells;
    double mass = 0.0;  // sum of member quad weights
    DyadicInterval interval() const { return {system, level, index}; }
    cx center() const { return {0.5 * (x0 + x1), 0.5 * h}; }
};

struct BoxFamily {
    std::vector<Box> boxes;
    // per system, per cell: ids of boxes containing the node, ascending level
    std::array<std::vector<std::vector<int>>, 2> chains;

    static BoxFamily build(const Mesh& mesh, const Systems& systems);
    std::vector<int> ids_of(System s) const;
};

std::string to_json_dump(const Systems& systems);

}  // namespace bglab
