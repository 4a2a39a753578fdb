#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cmelab/geom.hpp"

namespace cmelab {

enum class SetKind { flat, graph, polygon, four_corners };

enum class Side { plus, minus, any };

/// Which open set the experiments run on. `complement` is R^2 \ E; the other
/// two pick one connected component of it (graph scenarios use the region
/// above the graph, polygon scenarios use the interior).
enum class DomainMode { complement, above_graph, polygon_interior };

struct WeightedPoint {
    Vec2 p;
    double w = 0.0;     // surface-measure weight
    double param = 0.0; // parameter coordinate on E (arclength / abscissa / cell index)
};

struct AdrEstimate {
    double c_lower = 0.0;
    double c_upper = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int sample_count = 0;
};

struct CorkscrewResult {
    Vec2 point;
    double constant = 0.0;  // the C for which B(X, r/C) subset B(x,r) \ E held
    bool at_published_constant = true;
};

/// A rough set E in the plane exposed through exact analytic oracles:
/// distance, nearest boundary point, surface measure of balls, and a
/// deterministic point sampler. Immutable after construction.
class AmbientSet {
public:
    virtual ~AmbientSet() = default;

    SetKind kind() const { return kind_; }
    int boundary_dim() const { return 1; }
    double diam() const { return diam_; }
    double lipschitz_bound() const { return lipschitz_; }

    virtual double distance(const Vec2& p) const = 0;
    virtual Vec2 nearest_point(const Vec2& p) const = 0;
    /// Parameter coordinate of (a) nearest point of E to p.
    virtual double nearest_param(const Vec2& p) const = 0;
    /// sigma(Delta(x, r)) for x on E.
    virtual double measure_ball(const Vec2& x, double r) const = 0;
    /// Exact distance from a closed box to E (0 if they meet).
    virtual double distance_box(const Box& b) const = 0;
    /// Deterministic point sample on E: `count` points covering `window`
    /// (parameter window; ignored for bounded sets), midpoint rule weights.
    virtual std::vector<WeightedPoint> sample_points(int count, double param_lo, double param_hi) const = 0;
    /// Point on E at parameter t.
    virtual Vec2 point_at(double t) const = 0;
    /// Total measure; +inf for unbounded sets.
    virtual double total_measure() const = 0;
    /// Membership in the experiment domain.
    virtual bool in_domain(const Vec2& p, DomainMode mode) const;

    /// Text config block (kind + parameters), the serialization format.
    virtual std::string describe() const = 0;

    /// Published corkscrew constant for this set.
    virtual double corkscrew_constant() const = 0;

protected:
    SetKind kind_ = SetKind::flat;
    double diam_ = kInf;
    double lipschitz_ = 0.0;
};

/// Piecewise-linear graph {(t, psi(t))}, extended constantly outside the
/// breakpoint range. Covers the flat line as the single-segment case.
class GraphSet : public AmbientSet {
public:
    explicit GraphSet(std::vector<Vec2> breakpoints);

    double distance(const Vec2& p) const override;
    Vec2 nearest_point(const Vec2& p) const override;
    double nearest_param(const Vec2& p) const override { return nearest_point(p).x; }
    double measure_ball(const Vec2& x, double r) const override;
    double distance_box(const Box& b) const override;
    std::vector<WeightedPoint> sample_points(int count, double lo, double hi) const override;
    Vec2 point_at(double t) const override;
    double total_measure() const override { return kInf; }
    bool in_domain(const Vec2& p, DomainMode mode) const override;
    std::string describe() const override;
    double corkscrew_constant() const override;

    double psi(double t) const;
    double max_slope() const { return lipschitz_; }
    const std::vector<Vec2>& breakpoints() const { return pts_; }
    /// Arclength of {t in [a,b] : |(t,psi(t)) - x| <= r}, exact per segment.
    double arclength_in_ball(const Vec2& x, double r, double a, double b) const;
    /// Distance from box to the graph restricted to parameter range [a,b].
    double distance_box_param(const Box& box, double a, double b) const;
    /// Distance from p to the graph restricted to the complement of (a,b).
    double distance_param_complement(const Vec2& p, double a, double b) const;
    Box bbox_param(double a, double b) const;

private:
    std::vector<Vec2> pts_;  // includes two far sentinel points for the constant extension
};

/// Simple closed polygon boundary, parameterized by arclength in [0, P).
class PolygonSet : public AmbientSet {
public:
    explicit PolygonSet(std::vector<Vec2> vertices);

    double distance(const Vec2& p) const override;
    Vec2 nearest_point(const Vec2& p) const override;
    double nearest_param(const Vec2& p) const override;
    double measure_ball(const Vec2& x, double r) const override;
    double distance_box(const Box& b) const override;
    std::vector<WeightedPoint> sample_points(int count, double lo, double hi) const override;
    Vec2 point_at(double s) const override;  // s mod perimeter
    double total_measure() const override { return perimeter_; }
    bool in_domain(const Vec2& p, DomainMode mode) const override;
    std::string describe() const override;
    double corkscrew_constant() const override;

    double perimeter() const { return perimeter_; }
    int num_edges() const { return static_cast<int>(verts_.size()); }
    Segment edge(int i) const;
    double edge_offset(int i) const { return offsets_[i]; }
    bool point_inside(const Vec2& p) const;
    /// Arclength of the boundary within B(x,r) restricted to parameter [a,b].
    double arclength_in_ball(const Vec2& x, double r, double a, double b) const;
    double distance_box_param(const Box& box, double a, double b) const;
    double distance_param_complement(const Vec2& p, double a, double b) const;
    Box bbox_param(double a, double b) const;

private:
    std::vector<Vec2> verts_;
    std::vector<double> offsets_;  // arclength offset of each edge start
    double perimeter_ = 0.0;
};

/// Generation-L approximation of Garnett's 4-corners Cantor set: 4^L closed
/// squares of side 4^-L inside the unit square, corner replication rule.
/// sigma is the normalized uniform measure, total mass 1.
class FourCornersSet : public AmbientSet {
public:
    explicit FourCornersSet(int level);

    double distance(const Vec2& p) const override;
    Vec2 nearest_point(const Vec2& p) const override;
    double nearest_param(const Vec2& p) const override;
    double measure_ball(const Vec2& x, double r) const override;
    double distance_box(const Box& b) const override;
    std::vector<WeightedPoint> sample_points(int count, double lo, double hi) const override;
    Vec2 point_at(double t) const override;  // t = leaf cell index in DFS order
    double total_measure() const override { return 1.0; }
    std::string describe() const override;
    double corkscrew_constant() const override { return 16.0; }

    int level() const { return level_; }
    int num_cells() const { return ncells_; }
    /// Lower-left corner of DFS-ordered leaf cell `idx`; side is 4^-level.
    Vec2 cell_origin(std::int64_t idx) const;
    double cell_side() const { return cell_side_; }
    /// Mass of B(p, r) against sigma restricted to leaf cells [lo, hi).
    double measure_ball_cells(const Vec2& p, double r, std::int64_t lo, std::int64_t hi) const;
    /// Distance from box to the union of leaf cells [lo, hi).
    double distance_box_cells(const Box& b, std::int64_t lo, std::int64_t hi) const;
    double distance_cells_complement(const Vec2& p, std::int64_t lo, std::int64_t hi) const;
    Box bbox_cells(std::int64_t lo, std::int64_t hi) const;

private:
    double dist_rec(const Vec2& p, const Vec2& org, double side, int depth) const;
    double distbox_rec(const Box& b, const Vec2& org, double side, int depth) const;
    void nearest_rec(const Vec2& p, const Vec2& org, double side, int depth, double& best, Vec2& arg) const;

    int level_ = 1;
    int ncells_ = 4;
    double cell_side_ = 0.25;
};

std::unique_ptr<AmbientSet> make_graph_set(const std::vector<Vec2>& breakpoints);
std::unique_ptr<AmbientSet> make_flat_line();
std::unique_ptr<AmbientSet> make_polygon_set(const std::vector<Vec2>& vertices);
std::unique_ptr<AmbientSet> make_four_corners(int level);

AdrEstimate estimate_adr(const AmbientSet& set, double r_min, double r_max, int samples,
                         std::uint64_t seed = 1);

CorkscrewResult corkscrew(const AmbientSet& set, const Vec2& x, double r, Side side);

}  // namespace cmelab
