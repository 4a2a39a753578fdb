#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "cmelab/ambient.hpp"
#include "cmelab/geom.hpp"

namespace cmelab {

/// One Christ-David cube Q. Membership is half-open in the parameter
/// coordinate: [a, b) (abscissa / arclength for graphs and polygons,
/// leaf-cell DFS range for four-corners).
struct DyadicCube {
    int k = 0;           // generation, len = 2^-k
    std::int64_t j = 0;  // index within the generation
    double a = 0.0;      // member descriptor begin
    double b = 0.0;      // member descriptor end
    Vec2 center;         // x_Q, a point of E inside Q
    double len = 0.0;    // l(Q) = 2^-k
    double r_ball = 0.0; // r_Q with Delta(x_Q, 2 r_Q) subset Q
    double sigma = 0.0;  // sigma(Q)
    int parent = -1;
    int child_begin = 0; // [child_begin, child_end) ids
    int child_end = 0;
    Box bbox;
};

/// The cube hierarchy D(E) over a parameter window, generations k_min..k_max.
class DyadicGrid {
public:
    static DyadicGrid build(const AmbientSet& set, int k_min, int k_max,
                            double win_lo = 0.0, double win_hi = 0.0);

    const AmbientSet& set() const { return *set_; }
    int size() const { return static_cast<int>(cubes_.size()); }
    const DyadicCube& cube(int id) const { return cubes_[id]; }
    int kmin() const { return k_min_; }
    int kmax() const { return k_max_; }

    /// [begin, end) ids of generation k, ordered by j.
    std::pair<int, int> generation(int k) const;
    std::vector<int> top_cubes() const;

    int parent(int id) const;  // throws for top-generation cubes
    std::pair<int, int> children(int id) const { return {cubes_[id].child_begin, cubes_[id].child_end}; }
    void descendants(int id, const std::function<void(int)>& fn) const;  // includes id
    bool is_descendant(int id, int ancestor) const;

    /// Cube of generation k containing parameter t (id or -1).
    int find(int k, double t) const;
    /// Leaf (generation k_max) containing parameter t.
    int leaf_at(double t) const { return find(k_max_, t); }
    /// Leaves under Q, in j order.
    std::pair<int, int> leaf_span(int id) const;

    double dist_to_box(int id, const Box& b) const;
    /// Exact check Delta(x_Q, rho) subset Q (all measure of the ball lies in Q).
    bool surface_ball_inside(int id, double rho) const;
    /// Measured C with Q subset Delta(x_Q, C r_Q).
    double cube_ball_C(int id) const;

    void dump_csv(std::ostream& os) const;
    std::uint64_t geometry_hash() const;

private:
    const AmbientSet* set_ = nullptr;
    int k_min_ = 0;
    int k_max_ = 0;
    std::vector<DyadicCube> cubes_;
    std::vector<int> gen_begin_;  // size (k_max-k_min+2)
};

/// sigma{x in Q : dist(x, E \ Q) <= rho * l(Q)} / sigma(Q), by quadrature.
double thin_boundary_ratio(const DyadicGrid& grid, int id, double rho, int nodes = 2048);

/// Localized dyadic maximal operator M^D_{Q0,p} of per-leaf values; returns
/// per-leaf values on the leaves of Q0 (in leaf-span order).
std::vector<double> dyadic_maximal(const DyadicGrid& grid, int q0, const std::vector<double>& leaf_values,
                                   double p);

/// Generic Christ-grid constructor from a weighted point cloud (greedy
/// 2^-k nets, nearest-point assignment, lexicographic tie-break).
struct NetGrid {
    struct Cube {
        int k;
        Vec2 net_point;
        std::vector<int> members;  // sample indices
        int parent;
    };
    std::vector<Cube> cubes;
    std::vector<int> gen_begin;
};
NetGrid build_net_grid(const std::vector<WeightedPoint>& points, int k_min, int k_max);

}  // namespace cmelab
