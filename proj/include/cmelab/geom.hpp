#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace cmelab {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << "(" << v.x << "," << v.y << ")";
}

/// Closed axis-aligned box [lo.x,hi.x] x [lo.y,hi.y].
struct Box {
    Vec2 lo;
    Vec2 hi;

    Box() = default;
    Box(Vec2 lo_, Vec2 hi_) : lo(lo_), hi(hi_) {}

    Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double side() const { return std::max(width(), height()); }
    double diam() const { return std::hypot(width(), height()); }
    double area() const { return width() * height(); }

    bool contains(const Vec2& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    /// Half-open membership [lo, hi), the deterministic tiling convention.
    bool contains_half_open(const Vec2& p) const {
        return p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y;
    }
    bool intersects(const Box& o) const {
        return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
    }
    /// Concentric dilate (1+tau)I.
    Box dilated(double tau) const {
        Vec2 c = center();
        Vec2 h{width() * 0.5 * (1.0 + tau), height() * 0.5 * (1.0 + tau)};
        return {c - h, c + h};
    }
    /// Concentric scaled copy s*I (s may be < 1).
    Box scaled(double s) const {
        Vec2 c = center();
        Vec2 h{width() * 0.5 * s, height() * 0.5 * s};
        return {c - h, c + h};
    }
    Box expanded(double pad) const { return {{lo.x - pad, lo.y - pad}, {hi.x + pad, hi.y + pad}}; }

    double dist_to(const Vec2& p) const {
        double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
        double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
        return std::hypot(dx, dy);
    }
    double dist_to(const Box& o) const {
        double dx = std::max({lo.x - o.hi.x, 0.0, o.lo.x - hi.x});
        double dy = std::max({lo.y - o.hi.y, 0.0, o.lo.y - hi.y});
        return std::hypot(dx, dy);
    }
    /// Farthest distance from p to the box (max over corners).
    double max_dist_to(const Vec2& p) const {
        double dx = std::max(std::abs(p.x - lo.x), std::abs(p.x - hi.x));
        double dy = std::max(std::abs(p.y - lo.y), std::abs(p.y - hi.y));
        return std::hypot(dx, dy);
    }
    static Box hull(const Box& a, const Box& b) {
        return {{std::min(a.lo.x, b.lo.x), std::min(a.lo.y, b.lo.y)},
                {std::max(a.hi.x, b.hi.x), std::max(a.hi.y, b.hi.y)}};
    }
};

struct Segment {
    Vec2 a;
    Vec2 b;

    Segment() = default;
    Segment(Vec2 a_, Vec2 b_) : a(a_), b(b_) {}

    double length() const { return dist(a, b); }

    Vec2 closest_point(const Vec2& p) const {
        Vec2 u = b - a;
        double uu = u.norm2();
        if (uu == 0.0) return a;
        double t = std::clamp((p - a).dot(u) / uu, 0.0, 1.0);
        return a + t * u;
    }
    double dist_to(const Vec2& p) const { return dist(p, closest_point(p)); }
};

/// Orientation sign of (b-a) x (c-a).
inline double cross(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool segments_intersect(const Segment& s, const Segment& t) {
    double d1 = cross(t.a, t.b, s.a);
    double d2 = cross(t.a, t.b, s.b);
    double d3 = cross(s.a, s.b, t.a);
    double d4 = cross(s.a, s.b, t.b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    auto on = [](const Segment& seg, const Vec2& p) {
        return cross(seg.a, seg.b, p) == 0.0 &&
               p.x >= std::min(seg.a.x, seg.b.x) && p.x <= std::max(seg.a.x, seg.b.x) &&
               p.y >= std::min(seg.a.y, seg.b.y) && p.y <= std::max(seg.a.y, seg.b.y);
    };
    return on(t, s.a) || on(t, s.b) || on(s, t.a) || on(s, t.b);
}

inline double seg_seg_dist(const Segment& s, const Segment& t) {
    if (segments_intersect(s, t)) return 0.0;
    return std::min(std::min(s.dist_to(t.a), s.dist_to(t.b)),
                    std::min(t.dist_to(s.a), t.dist_to(s.b)));
}

inline double box_seg_dist(const Box& box, const Segment& s) {
    if (box.contains(s.a) || box.contains(s.b)) return 0.0;
    Segment e0{{box.lo.x, box.lo.y}, {box.hi.x, box.lo.y}};
    Segment e1{{box.hi.x, box.lo.y}, {box.hi.x, box.hi.y}};
    Segment e2{{box.hi.x, box.hi.y}, {box.lo.x, box.hi.y}};
    Segment e3{{box.lo.x, box.hi.y}, {box.lo.x, box.lo.y}};
    return std::min(std::min(seg_seg_dist(e0, s), seg_seg_dist(e1, s)),
                    std::min(seg_seg_dist(e2, s), seg_seg_dist(e3, s)));
}

}  // namespace cmelab
