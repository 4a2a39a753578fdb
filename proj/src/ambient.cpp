#include "cmelab/ambient.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cmelab/rng.hpp"

namespace cmelab {

namespace {

// Sentinel extent for the constant extension of graphs. Experiments window
// everything well inside this.
constexpr double kGraphExtent = 1e6;

// Arclength of {t in [t0,t1] : |A + (t-t0)*dir - x|^2 <= r^2} for the segment
// from A with unit-speed-in-parameter direction dir, times the speed factor.
// Solves the quadratic in t exactly.
double param_interval_in_ball(const Vec2& A, const Vec2& dir, double t0, double t1,
                              const Vec2& x, double r) {
    // |A + s*dir - x|^2 <= r^2, s in [0, t1-t0]
    Vec2 w = A - x;
    double a = dir.norm2();
    double b = 2.0 * w.dot(dir);
    double c = w.norm2() - r * r;
    if (a == 0.0) return 0.0;
    double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0) return 0.0;
    double sq = std::sqrt(disc);
    double s_lo = (-b - sq) / (2.0 * a);
    double s_hi = (-b + sq) / (2.0 * a);
    double lo = std::max(0.0, s_lo);
    double hi = std::min(t1 - t0, s_hi);
    return std::max(0.0, hi - lo);
}

}  // namespace

bool AmbientSet::in_domain(const Vec2& p, DomainMode mode) const {
    (void)mode;
    return distance(p) > 0.0;
}

// ---------------------------------------------------------------------------
// GraphSet
// ---------------------------------------------------------------------------

GraphSet::GraphSet(std::vector<Vec2> breakpoints) {
    if (breakpoints.empty()) breakpoints = {{0.0, 0.0}};
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i].x > breakpoints[i - 1].x))
            throw std::invalid_argument("graph breakpoints must be strictly increasing in abscissa");
    }
    pts_.reserve(breakpoints.size() + 2);
    pts_.push_back({-kGraphExtent, breakpoints.front().y});
    for (const Vec2& p : breakpoints) pts_.push_back(p);
    pts_.push_back({kGraphExtent, breakpoints.back().y});

    double m = 0.0;
    bool all_flat = true;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        double slope = (pts_[i].y - pts_[i - 1].y) / (pts_[i].x - pts_[i - 1].x);
        m = std::max(m, std::abs(slope));
        if (pts_[i].y != pts_[0].y) all_flat = false;
    }
    lipschitz_ = m;
    kind_ = all_flat ? SetKind::flat : SetKind::graph;
    diam_ = kInf;
}

double GraphSet::psi(double t) const {
    if (t <= pts_.front().x) return pts_.front().y;
    if (t >= pts_.back().x) return pts_.back().y;
    // Linear scan; breakpoint lists are short.
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        if (t <= pts_[i].x) {
            double a = pts_[i - 1].x, b = pts_[i].x;
            double s = (t - a) / (b - a);
            return pts_[i - 1].y + s * (pts_[i].y - pts_[i - 1].y);
        }
    }
    return pts_.back().y;
}

double GraphSet::distance(const Vec2& p) const {
    double best = kInf;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        Segment s{pts_[i - 1], pts_[i]};
        best = std::min(best, s.dist_to(p));
    }
    return best;
}

Vec2 GraphSet::nearest_point(const Vec2& p) const {
    double best = kInf;
    Vec2 arg = pts_.front();
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        Segment s{pts_[i - 1], pts_[i]};
        Vec2 q = s.closest_point(p);
        double d = dist(p, q);
        if (d < best) {
            best = d;
            arg = q;
        }
    }
    return arg;
}

double GraphSet::distance_box(const Box& b) const {
    double best = kInf;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        Segment s{pts_[i - 1], pts_[i]};
        // bbox prune
        double lox = std::min(s.a.x, s.b.x), hix = std::max(s.a.x, s.b.x);
        double loy = std::min(s.a.y, s.b.y), hiy = std::max(s.a.y, s.b.y);
        Box sb{{lox, loy}, {hix, hiy}};
        if (b.dist_to(sb) >= best) continue;
        best = std::min(best, box_seg_dist(b, s));
        if (best == 0.0) return 0.0;
    }
    return best;
}

double GraphSet::arclength_in_ball(const Vec2& x, double r, double a, double b) const {
    double total = 0.0;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        double t0 = std::max(a, pts_[i - 1].x);
        double t1 = std::min(b, pts_[i].x);
        if (t1 <= t0) continue;
        double slope = (pts_[i].y - pts_[i - 1].y) / (pts_[i].x - pts_[i - 1].x);
        Vec2 A{t0, psi(t0)};
        Vec2 dir{1.0, slope};
        double dt = param_interval_in_ball(A, dir, t0, t1, x, r);
        total += dt * std::sqrt(1.0 + slope * slope);
    }
    return total;
}

double GraphSet::measure_ball(const Vec2& x, double r) const {
    return arclength_in_ball(x, r, -kGraphExtent, kGraphExtent);
}

double GraphSet::distance_box_param(const Box& box, double a, double b) const {
    double best = kInf;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        double t0 = std::max(a, pts_[i - 1].x);
        double t1 = std::min(b, pts_[i].x);
        if (t1 <= t0) continue;
        Segment s{{t0, psi(t0)}, {t1, psi(t1)}};
        double lox = std::min(s.a.x, s.b.x), hix = std::max(s.a.x, s.b.x);
        double loy = std::min(s.a.y, s.b.y), hiy = std::max(s.a.y, s.b.y);
        if (box.dist_to(Box{{lox, loy}, {hix, hiy}}) >= best) continue;
        best = std::min(best, box_seg_dist(box, s));
        if (best == 0.0) return 0.0;
    }
    return best;
}

double GraphSet::distance_param_complement(const Vec2& p, double a, double b) const {
    double left = distance_box_param(Box{p, p}, -kGraphExtent, a);
    double right = distance_box_param(Box{p, p}, b, kGraphExtent);
    return std::min(left, right);
}

Box GraphSet::bbox_param(double a, double b) const {
    double ylo = psi(a), yhi = psi(a);
    auto upd = [&](double y) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    };
    upd(psi(b));
    for (const Vec2& q : pts_)
        if (q.x > a && q.x < b) upd(q.y);
    return {{a, ylo}, {b, yhi}};
}

std::vector<WeightedPoint> GraphSet::sample_points(int count, double lo, double hi) const {
    std::vector<WeightedPoint> out;
    out.reserve(count);
    double h = (hi - lo) / count;
    for (int i = 0; i < count; ++i) {
        double t = lo + (i + 0.5) * h;
        double tm = lo + i * h, tp = lo + (i + 1) * h;
        // exact arclength weight of the parameter slab
        double w = 0.0;
        for (std::size_t k = 1; k < pts_.size(); ++k) {
            double a = std::max(tm, pts_[k - 1].x), b = std::min(tp, pts_[k].x);
            if (b <= a) continue;
            double slope = (pts_[k].y - pts_[k - 1].y) / (pts_[k].x - pts_[k - 1].x);
            w += (b - a) * std::sqrt(1.0 + slope * slope);
        }
        out.push_back({{t, psi(t)}, w, t});
    }
    return out;
}

Vec2 GraphSet::point_at(double t) const { return {t, psi(t)}; }

bool GraphSet::in_domain(const Vec2& p, DomainMode mode) const {
    switch (mode) {
        case DomainMode::complement: return distance(p) > 0.0;
        case DomainMode::above_graph: return p.y > psi(p.x);
        case DomainMode::polygon_interior: return false;
    }
    return false;
}

std::string GraphSet::describe() const {
    std::ostringstream os;
    os << "kind=" << (kind_ == SetKind::flat ? "flat" : "graph");
    os << " breakpoints=";
    for (std::size_t i = 1; i + 1 < pts_.size(); ++i)
        os << pts_[i].x << ":" << pts_[i].y << (i + 2 < pts_.size() ? "," : "");
    os << " lipschitz=" << lipschitz_;
    return os.str();
}

double GraphSet::corkscrew_constant() const {
    if (kind_ == SetKind::flat) return 2.0;
    return 2.0 * std::sqrt(1.0 + lipschitz_ * lipschitz_);
}

// ---------------------------------------------------------------------------
// PolygonSet
// ---------------------------------------------------------------------------

PolygonSet::PolygonSet(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    // reject self-intersection (non-adjacent edge pairs)
    int n = static_cast<int>(vertices.size());
    for (int i = 0; i < n; ++i) {
        Segment si{vertices[i], vertices[(i + 1) % n]};
        for (int j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            Segment sj{vertices[j], vertices[(j + 1) % n]};
            if (segments_intersect(si, sj))
                throw std::invalid_argument("self-intersecting polygon rejected");
        }
    }
    verts_ = std::move(vertices);
    offsets_.resize(verts_.size());
    double s = 0.0;
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) {
        offsets_[i] = s;
        s += edge(i).length();
        for (int j = i + 1; j < n; ++j) dmax = std::max(dmax, dist(verts_[i], verts_[j]));
    }
    perimeter_ = s;
    diam_ = dmax;
    kind_ = SetKind::polygon;
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        Segment e = edge(i);
        double dx = std::abs(e.b.x - e.a.x), dy = std::abs(e.b.y - e.a.y);
        if (dx > 0) m = std::max(m, dy / dx);
    }
    lipschitz_ = m;
}

Segment PolygonSet::edge(int i) const {
    int n = static_cast<int>(verts_.size());
    return {verts_[i], verts_[(i + 1) % n]};
}

double PolygonSet::distance(const Vec2& p) const {
    double best = kInf;
    for (int i = 0; i < num_edges(); ++i) best = std::min(best, edge(i).dist_to(p));
    return best;
}

Vec2 PolygonSet::nearest_point(const Vec2& p) const {
    double best = kInf;
    Vec2 arg = verts_[0];
    for (int i = 0; i < num_edges(); ++i) {
        Vec2 q = edge(i).closest_point(p);
        double d = dist(p, q);
        if (d < best) {
            best = d;
            arg = q;
        }
    }
    return arg;
}

double PolygonSet::distance_box(const Box& b) const {
    double best = kInf;
    for (int i = 0; i < num_edges(); ++i) {
        best = std::min(best, box_seg_dist(b, edge(i)));
        if (best == 0.0) return 0.0;
    }
    return best;
}

double PolygonSet::arclength_in_ball(const Vec2& x, double r, double a, double b) const {
    double total = 0.0;
    for (int i = 0; i < num_edges(); ++i) {
        Segment e = edge(i);
        double len = e.length();
        double s0 = std::max(a, offsets_[i]);
        double s1 = std::min(b, offsets_[i] + len);
        if (s1 <= s0) continue;
        Vec2 dir = (e.b - e.a) / len;  // unit speed in arclength
        Vec2 A = e.a + dir * (s0 - offsets_[i]);
        total += param_interval_in_ball(A, dir, s0, s1, x, r);
    }
    return total;
}

double PolygonSet::measure_ball(const Vec2& x, double r) const {
    return arclength_in_ball(x, r, 0.0, perimeter_);
}

double PolygonSet::nearest_param(const Vec2& p) const {
    double best = kInf;
    double arg = 0.0;
    for (int i = 0; i < num_edges(); ++i) {
        Segment e = edge(i);
        Vec2 q = e.closest_point(p);
        double d = dist(p, q);
        if (d < best) {
            best = d;
            arg = offsets_[i] + dist(e.a, q);
        }
    }
    return arg;
}

double PolygonSet::distance_box_param(const Box& box, double a, double b) const {
    double best = kInf;
    for (int i = 0; i < num_edges(); ++i) {
        Segment e = edge(i);
        double len = e.length();
        double s0 = std::max(a, offsets_[i]);
        double s1 = std::min(b, offsets_[i] + len);
        if (s1 <= s0) continue;
        Vec2 dir = (e.b - e.a) / len;
        Segment clipped{e.a + dir * (s0 - offsets_[i]), e.a + dir * (s1 - offsets_[i])};
        best = std::min(best, box_seg_dist(box, clipped));
        if (best == 0.0) return 0.0;
    }
    return best;
}

double PolygonSet::distance_param_complement(const Vec2& p, double a, double b) const {
    // complement of [a,b) on the circle [0,P)
    Box pb{p, p};
    double d1 = distance_box_param(pb, 0.0, a);
    double d2 = distance_box_param(pb, b, perimeter_);
    return std::min(d1, d2);
}

Box PolygonSet::bbox_param(double a, double b) const {
    Vec2 p0 = point_at(a);
    Box bb{p0, p0};
    auto upd = [&](const Vec2& q) { bb = Box::hull(bb, Box{q, q}); };
    upd(point_at(std::min(b, perimeter_ - 1e-12)));
    for (int i = 0; i < num_edges(); ++i) {
        if (offsets_[i] > a && offsets_[i] < b) upd(verts_[i]);
    }
    return bb;
}

std::vector<WeightedPoint> PolygonSet::sample_points(int count, double lo, double hi) const {
    if (hi <= lo) {
        lo = 0.0;
        hi = perimeter_;
    }
    std::vector<WeightedPoint> out;
    out.reserve(count);
    double h = (hi - lo) / count;
    for (int i = 0; i < count; ++i) {
        double s = lo + (i + 0.5) * h;
        out.push_back({point_at(s), h, s});
    }
    return out;
}

Vec2 PolygonSet::point_at(double s) const {
    s = std::fmod(s, perimeter_);
    if (s < 0) s += perimeter_;
    for (int i = num_edges() - 1; i >= 0; --i) {
        if (s >= offsets_[i]) {
            Segment e = edge(i);
            double len = e.length();
            double u = (s - offsets_[i]) / len;
            return e.a + (e.b - e.a) * u;
        }
    }
    return verts_[0];
}

bool PolygonSet::point_inside(const Vec2& p) const {
    // even-odd ray cast
    bool in = false;
    int n = num_edges();
    for (int i = 0; i < n; ++i) {
        const Vec2& a = verts_[i];
        const Vec2& b = verts_[(i + 1) % n];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) in = !in;
        }
    }
    return in;
}

bool PolygonSet::in_domain(const Vec2& p, DomainMode mode) const {
    switch (mode) {
        case DomainMode::complement: return distance(p) > 0.0;
        case DomainMode::polygon_interior: return point_inside(p) && distance(p) > 0.0;
        case DomainMode::above_graph: return false;
    }
    return false;
}

std::string PolygonSet::describe() const {
    std::ostringstream os;
    os << "kind=polygon vertices=";
    for (std::size_t i = 0; i < verts_.size(); ++i)
        os << verts_[i].x << ":" << verts_[i].y << (i + 1 < verts_.size() ? "," : "");
    return os.str();
}

double PolygonSet::corkscrew_constant() const { return 4.0 * std::sqrt(1.0 + lipschitz_ * lipschitz_); }

// ---------------------------------------------------------------------------
// FourCornersSet
// ---------------------------------------------------------------------------

FourCornersSet::FourCornersSet(int level) {
    if (level < 1 || level > 12) throw std::invalid_argument("four_corners level must be in [1,12]");
    level_ = level;
    ncells_ = 1;
    for (int i = 0; i < level; ++i) ncells_ *= 4;
    cell_side_ = std::pow(0.25, level);
    kind_ = SetKind::four_corners;
    diam_ = std::sqrt(2.0);
}

namespace {
// Child corner offsets in units of the parent side.
constexpr double kCorner[4][2] = {{0.0, 0.0}, {0.75, 0.0}, {0.0, 0.75}, {0.75, 0.75}};
}  // namespace

double FourCornersSet::dist_rec(const Vec2& p, const Vec2& org, double side, int depth) const {
    Box b{org, {org.x + side, org.y + side}};
    if (depth == level_) return b.dist_to(p);
    double lower = b.dist_to(p);
    // At depth d the set occupies the 4 corner squares of side side/4.
    double best = kInf;
    for (int c = 0; c < 4; ++c) {
        Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
        Box cb{o, {o.x + side * 0.25, o.y + side * 0.25}};
        double lb = cb.dist_to(p);
        if (lb < best) {
            double d = dist_rec(p, o, side * 0.25, depth + 1);
            best = std::min(best, d);
        }
    }
    (void)lower;
    return best;
}

double FourCornersSet::distance(const Vec2& p) const { return dist_rec(p, {0.0, 0.0}, 1.0, 0); }

double FourCornersSet::distbox_rec(const Box& b, const Vec2& org, double side, int depth) const {
    Box cell{org, {org.x + side, org.y + side}};
    if (depth == level_) return b.dist_to(cell);
    double best = kInf;
    for (int c = 0; c < 4; ++c) {
        Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
        Box cb{o, {o.x + side * 0.25, o.y + side * 0.25}};
        double lb = b.dist_to(cb);
        if (lb < best) best = std::min(best, distbox_rec(b, o, side * 0.25, depth + 1));
        if (best == 0.0) return 0.0;
    }
    return best;
}

double FourCornersSet::distance_box(const Box& b) const { return distbox_rec(b, {0.0, 0.0}, 1.0, 0); }

void FourCornersSet::nearest_rec(const Vec2& p, const Vec2& org, double side, int depth,
                                 double& best, Vec2& arg) const {
    if (depth == level_) {
        Box b{org, {org.x + side, org.y + side}};
        double d = b.dist_to(p);
        if (d < best) {
            best = d;
            arg = {std::clamp(p.x, b.lo.x, b.hi.x), std::clamp(p.y, b.lo.y, b.hi.y)};
        }
        return;
    }
    for (int c = 0; c < 4; ++c) {
        Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
        Box cb{o, {o.x + side * 0.25, o.y + side * 0.25}};
        if (cb.dist_to(p) < best) nearest_rec(p, o, side * 0.25, depth + 1, best, arg);
    }
}

Vec2 FourCornersSet::nearest_point(const Vec2& p) const {
    double best = kInf;
    Vec2 arg{0.0, 0.0};
    nearest_rec(p, {0.0, 0.0}, 1.0, 0, best, arg);
    return arg;
}

double FourCornersSet::nearest_param(const Vec2& p) const {
    // descend the replication tree tracking the best leaf index
    struct Rec {
        const FourCornersSet* self;
        Vec2 p;
        double best = kInf;
        std::int64_t arg = 0;
        void rec(const Vec2& org, double side, int depth, std::int64_t base, std::int64_t span) {
            Box cell{org, {org.x + side, org.y + side}};
            if (cell.dist_to(p) >= best) return;
            if (depth == self->level_) {
                best = cell.dist_to(p);
                arg = base;
                return;
            }
            for (int c = 0; c < 4; ++c) {
                Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
                rec(o, side * 0.25, depth + 1, base + c * (span / 4), span / 4);
            }
        }
    } r{this, p};
    r.rec({0.0, 0.0}, 1.0, 0, 0, ncells_);
    return static_cast<double>(r.arg);
}

Vec2 FourCornersSet::cell_origin(std::int64_t idx) const {
    Vec2 org{0.0, 0.0};
    double side = 1.0;
    for (int d = 0; d < level_; ++d) {
        side *= 0.25;
        std::int64_t q = 1;
        for (int i = 0; i < level_ - 1 - d; ++i) q *= 4;
        int digit = static_cast<int>((idx / q) % 4);
        org.x += kCorner[digit][0] * side * 4.0;
        org.y += kCorner[digit][1] * side * 4.0;
    }
    return org;
}

double FourCornersSet::measure_ball_cells(const Vec2& p, double r, std::int64_t lo,
                                          std::int64_t hi) const {
    // Recursive descent: full cells inside add their mass, disjoint add 0,
    // partial leaf cells are subdivided uniformly to quadrature tolerance.
    struct Ctx {
        const FourCornersSet* self;
        Vec2 p;
        double r;
        std::int64_t lo, hi;
        double rec(const Vec2& org, double side, int depth, std::int64_t base, std::int64_t span,
                   double mass) {
            if (base + span <= lo || base >= hi) return 0.0;
            Box b{org, {org.x + side, org.y + side}};
            bool clipped = base < lo || base + span > hi;
            if (!clipped) {
                if (b.dist_to(p) >= r) return 0.0;
                if (b.max_dist_to(p) <= r) return mass;
            }
            if (depth == self->level_) {
                // uniform subdivision of the partially covered leaf (never clipped:
                // leaves are single indices)
                return leaf(b, mass, 0);
            }
            double out = 0.0;
            for (int c = 0; c < 4; ++c) {
                Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
                out += rec(o, side * 0.25, depth + 1, base + c * (span / 4), span / 4, mass * 0.25);
            }
            return out;
        }
        double leaf(const Box& b, double mass, int depth) {
            if (b.dist_to(p) >= r) return 0.0;
            if (b.max_dist_to(p) <= r) return mass;
            if (depth >= 10) {
                return b.contains(p) || dist(b.center(), p) <= r ? mass : 0.0;
            }
            double out = 0.0;
            double hw = b.width() * 0.5, hh = b.height() * 0.5;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    Box q{{b.lo.x + i * hw, b.lo.y + j * hh},
                          {b.lo.x + (i + 1) * hw, b.lo.y + (j + 1) * hh}};
                    out += leaf(q, mass * 0.25, depth + 1);
                }
            return out;
        }
    } ctx{this, p, r, lo, hi};
    return ctx.rec({0.0, 0.0}, 1.0, 0, 0, ncells_, 1.0);
}

double FourCornersSet::measure_ball(const Vec2& x, double r) const {
    return measure_ball_cells(x, r, 0, ncells_);
}

namespace {
struct CellRangeDist {
    const Box* query;
    std::int64_t lo, hi;
    bool invert;  // measure against the complement of [lo,hi)
    double best = kInf;
    void rec(const Vec2& org, double side, int depth, std::int64_t base, std::int64_t span, int level) {
        bool overlaps = !(base + span <= lo || base >= hi);
        if (invert ? (base >= lo && base + span <= hi) : !overlaps) return;
        Box cell{org, {org.x + side, org.y + side}};
        if (query->dist_to(cell) >= best) return;
        if (depth == level) {
            if (!invert || base < lo || base >= hi) best = std::min(best, query->dist_to(cell));
            return;
        }
        for (int c = 0; c < 4; ++c) {
            Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
            rec(o, side * 0.25, depth + 1, base + c * (span / 4), span / 4, level);
        }
    }
};
}  // namespace

double FourCornersSet::distance_box_cells(const Box& b, std::int64_t lo, std::int64_t hi) const {
    CellRangeDist d{&b, lo, hi, false};
    d.rec({0.0, 0.0}, 1.0, 0, 0, ncells_, level_);
    return d.best;
}

double FourCornersSet::distance_cells_complement(const Vec2& p, std::int64_t lo, std::int64_t hi) const {
    Box pb{p, p};
    CellRangeDist d{&pb, lo, hi, true};
    d.rec({0.0, 0.0}, 1.0, 0, 0, ncells_, level_);
    return d.best;
}

Box FourCornersSet::bbox_cells(std::int64_t lo, std::int64_t hi) const {
    Vec2 o0 = cell_origin(lo);
    Box bb{o0, {o0.x + cell_side_, o0.y + cell_side_}};
    // The range is a contiguous DFS block; walk the tree instead of all leaves.
    struct Rec {
        const FourCornersSet* self;
        std::int64_t lo, hi;
        Box* bb;
        void rec(const Vec2& org, double side, int depth, std::int64_t base, std::int64_t span) {
            if (base + span <= lo || base >= hi) return;
            if (base >= lo && base + span <= hi) {
                *bb = Box::hull(*bb, Box{org, {org.x + side, org.y + side}});
                return;
            }
            for (int c = 0; c < 4; ++c) {
                Vec2 o{org.x + kCorner[c][0] * side, org.y + kCorner[c][1] * side};
                rec(o, side * 0.25, depth + 1, base + c * (span / 4), span / 4);
            }
        }
    } r{this, lo, hi, &bb};
    r.rec({0.0, 0.0}, 1.0, 0, 0, ncells_);
    return bb;
}

std::vector<WeightedPoint> FourCornersSet::sample_points(int count, double, double) const {
    // Deterministic: evenly strided leaf-cell centers.
    std::vector<WeightedPoint> out;
    int stride = std::max(1, ncells_ / std::max(1, count));
    int n = (ncells_ + stride - 1) / stride;
    double w = 1.0 / n;
    out.reserve(n);
    for (std::int64_t i = 0; i < ncells_; i += stride) {
        Vec2 o = cell_origin(i);
        out.push_back({{o.x + cell_side_ * 0.5, o.y + cell_side_ * 0.5}, w, static_cast<double>(i)});
    }
    return out;
}

Vec2 FourCornersSet::point_at(double t) const {
    std::int64_t idx = std::clamp<std::int64_t>(static_cast<std::int64_t>(t), 0, ncells_ - 1);
    Vec2 o = cell_origin(idx);
    return {o.x + cell_side_ * 0.5, o.y + cell_side_ * 0.5};
}

std::string FourCornersSet::describe() const {
    std::ostringstream os;
    os << "kind=four_corners level=" << level_;
    return os.str();
}

// ---------------------------------------------------------------------------
// factories / estimators
// ---------------------------------------------------------------------------

std::unique_ptr<AmbientSet> make_graph_set(const std::vector<Vec2>& breakpoints) {
    return std::make_unique<GraphSet>(breakpoints);
}

std::unique_ptr<AmbientSet> make_flat_line() {
    return std::make_unique<GraphSet>(std::vector<Vec2>{{0.0, 0.0}});
}

std::unique_ptr<AmbientSet> make_polygon_set(const std::vector<Vec2>& vertices) {
    return std::make_unique<PolygonSet>(vertices);
}

std::unique_ptr<AmbientSet> make_four_corners(int level) {
    return std::make_unique<FourCornersSet>(level);
}

AdrEstimate estimate_adr(const AmbientSet& set, double r_min, double r_max, int samples,
                         std::uint64_t seed) {
    if (!(r_min > 0.0) || !(r_min < r_max) || !(r_max < set.diam()) || samples < 1)
        throw std::invalid_argument("estimate_adr: need 0 < r_min < r_max < diam(E), samples >= 1");
    if (set.total_measure() == 0.0) throw std::runtime_error("estimate_adr: degenerate set");
    AdrEstimate est;
    est.r_min = r_min;
    est.r_max = r_max;
    (void)seed;  // sampling is deterministic; the seed is provenance only
    // Deterministic point set plus the dyadic radius ladder.
    double window = std::isfinite(set.diam()) ? set.diam() : 4.0;
    auto pts = set.sample_points(samples, -window, window);
    int nr = std::max(2, static_cast<int>(std::round(std::log2(r_max / r_min))) + 1);
    est.c_lower = kInf;
    est.c_upper = 0.0;
    int n = 0;
    for (const auto& wp : pts) {
        for (int i = 0; i < nr; ++i) {
            double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (nr - 1));
            double ratio = set.measure_ball(wp.p, r) / r;  // n = 1
            est.c_lower = std::min(est.c_lower, ratio);
            est.c_upper = std::max(est.c_upper, ratio);
            ++n;
        }
    }
    est.sample_count = n;
    return est;
}

CorkscrewResult corkscrew(const AmbientSet& set, const Vec2& x, double r, Side side) {
    if (!(r > 0.0) || (std::isfinite(set.diam()) && !(r < set.diam())))
        throw std::invalid_argument("corkscrew: need 0 < r < diam(E)");
    double C = set.corkscrew_constant();
    CorkscrewResult res;
    res.constant = C;

    if (set.kind() == SetKind::flat || set.kind() == SetKind::graph) {
        const auto& g = static_cast<const GraphSet&>(set);
        double sgn = (side == Side::minus) ? -1.0 : 1.0;
        Vec2 X{x.x, g.psi(x.x) + sgn * r * 0.5};
        res.point = X;
        double d = set.distance(X);
        if (d + 1e-12 >= r / C) return res;
        res.constant = (d > 0) ? r / d : kInf;
        res.at_published_constant = false;
        return res;
    }
    if (set.kind() == SetKind::polygon) {
        const auto& poly = static_cast<const PolygonSet&>(set);
        // walk inward/outward along the normal at the nearest boundary point;
        // try both sides and pick the requested component
        Vec2 q = set.nearest_point(x);
        Vec2 t{0.0, 0.0};
        for (int i = 0; i < poly.num_edges(); ++i) {
            Segment e = poly.edge(i);
            if (e.dist_to(q) < 1e-12) {
                t = (e.b - e.a) / e.length();
                break;
            }
        }
        Vec2 nrm{-t.y, t.x};
        for (double sgn : {1.0, -1.0}) {
            Vec2 X = q + nrm * (sgn * r * 0.5);
            bool inside = poly.point_inside(X);
            bool want_inside = (side != Side::minus);
            if (side != Side::any && inside != want_inside) continue;
            if (set.distance(X) + 1e-12 >= r / C && dist(X, x) < r) {
                res.point = X;
                return res;
            }
        }
        // fall through to grid search
    }
    // Grid search over B(x, r(1-1/C)) maximizing the distance oracle.
    const int grid = 48;
    double best = -1.0;
    Vec2 arg = x;
    double rad = r * (1.0 - 1.0 / C);
    for (int i = 0; i <= grid; ++i) {
        for (int j = 0; j <= grid; ++j) {
            Vec2 X{x.x - rad + 2.0 * rad * i / grid, x.y - rad + 2.0 * rad * j / grid};
            if (dist(X, x) > rad) continue;
            double d = set.distance(X);
            if (d > best) {
                best = d;
                arg = X;
            }
        }
    }
    res.point = arg;
    if (best + 1e-12 >= r / C) return res;
    res.constant = (best > 0) ? r / best : kInf;
    res.at_published_constant = false;
    return res;
}

}  // namespace cmelab
