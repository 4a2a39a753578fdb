#include "cmelab/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cmelab/rng.hpp"

namespace cmelab {

namespace {

struct RawCube {
    std::int32_t ix, iy;
    std::int8_t e;
    double dist;
};

}  // namespace

struct WhitneyBuilder {
    const AmbientSet* set;
    Box window;
    int floor_exp;  // final cubes have side >= 2^-floor_exp
    std::vector<RawCube> out;

    // Stein candidate recursion: split while dist < side, emit maximal cubes
    // with side <= dist, then subdivide by 8 so the 4/40 display holds.
    void recurse(std::int64_t ix, std::int64_t iy, int e) {
        double s = std::ldexp(1.0, -e);
        Vec2 lo{ix * s, iy * s};
        Box b{lo, {lo.x + s, lo.y + s}};
        if (!b.intersects(window)) return;
        double d = set->distance_box(b);
        if (d >= s) {
            emit_stein(ix, iy, e);
            return;
        }
        if (e + 1 > floor_exp - 3) return;  // depth floor reached, drop the near-E sliver
        for (int cx = 0; cx < 2; ++cx)
            for (int cy = 0; cy < 2; ++cy) recurse(ix * 2 + cx, iy * 2 + cy, e + 1);
    }

    void emit_stein(std::int64_t ix, std::int64_t iy, int e) {
        // subdivide into side-1/8 pieces; cache exact distances per piece
        for (int cx = 0; cx < 8; ++cx) {
            for (int cy = 0; cy < 8; ++cy) {
                std::int64_t jx = ix * 8 + cx, jy = iy * 8 + cy;
                int je = e + 3;
                double s = std::ldexp(1.0, -je);
                Vec2 lo{jx * s, jy * s};
                Box b{lo, {lo.x + s, lo.y + s}};
                if (!b.intersects(window)) continue;
                double d = set->distance_box(b);
                out.push_back({static_cast<std::int32_t>(jx), static_cast<std::int32_t>(jy),
                               static_cast<std::int8_t>(je), d});
            }
        }
    }
};

WhitneyDecomposition WhitneyDecomposition::build(const AmbientSet& set, const Box& window,
                                                 int depth) {
    if (depth > 24) throw std::invalid_argument("decompose: depth must be <= 24");
    // Snap the window to dyadic squares with corners on the 2^p lattice.
    double side = std::max(window.width(), window.height());
    int p = static_cast<int>(std::ceil(std::log2(side)));
    double s = std::ldexp(1.0, p);
    std::int64_t ix = static_cast<std::int64_t>(std::floor(window.lo.x / s));
    std::int64_t iy = static_cast<std::int64_t>(std::floor(window.lo.y / s));
    WhitneyBuilder builder{&set, window, depth, {}};
    for (std::int64_t rx = ix; rx * s < window.hi.x; ++rx)
        for (std::int64_t ry = iy; ry * s < window.hi.y; ++ry) builder.recurse(rx, ry, -p);
    if (builder.out.empty())
        throw std::runtime_error("decompose: window contains no Whitney cubes (inside E's shell?)");

    WhitneyDecomposition w;
    w.set_ = &set;
    w.window_ = window;
    w.depth_ = depth;

    auto& raw = builder.out;
    std::sort(raw.begin(), raw.end(), [](const RawCube& a, const RawCube& b) {
        if (a.e != b.e) return a.e < b.e;
        if (a.iy != b.iy) return a.iy < b.iy;
        return a.ix < b.ix;
    });
    w.e_min_ = raw.front().e;
    w.e_max_ = raw.back().e;
    w.scale_begin_.assign(w.e_max_ - w.e_min_ + 2, 0);
    w.ix_.reserve(raw.size());
    for (const RawCube& c : raw) {
        w.ix_.push_back(c.ix);
        w.iy_.push_back(c.iy);
        w.exp_.push_back(c.e);
        w.dist_.push_back(c.dist);
    }
    for (std::size_t i = 0; i < raw.size(); ++i) w.scale_begin_[raw[i].e - w.e_min_ + 1] = static_cast<int>(i) + 1;
    for (std::size_t e = 1; e < w.scale_begin_.size(); ++e)
        w.scale_begin_[e] = std::max(w.scale_begin_[e], w.scale_begin_[e - 1]);
    int nscales = w.e_max_ - w.e_min_ + 1;
    w.row_lo_.assign(nscales, 0);
    w.row_hi_.assign(nscales, -1);
    for (int e = w.e_min_; e <= w.e_max_; ++e) {
        auto [b, eend] = w.scale_span(e);
        if (b == eend) continue;
        w.row_lo_[e - w.e_min_] = w.iy_[b];
        w.row_hi_[e - w.e_min_] = w.iy_[eend - 1];
    }
    return w;
}

std::pair<int, int> WhitneyDecomposition::scale_span(int e) const {
    if (e < e_min_ || e > e_max_) return {0, 0};
    return {scale_begin_[e - e_min_], scale_begin_[e - e_min_ + 1]};
}

int WhitneyDecomposition::find_at_scale(int e, std::int64_t ix, std::int64_t iy) const {
    auto [b, eend] = scale_span(e);
    if (b == eend) return -1;
    // binary search by (iy, ix)
    int lo = b, hi = eend;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (iy_[mid] < iy || (iy_[mid] == iy && ix_[mid] < ix))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < eend && iy_[lo] == iy && ix_[lo] == ix) return lo;
    return -1;
}

int WhitneyDecomposition::containing_cube(const Vec2& X) const {
    for (int e = e_max_; e >= e_min_; --e) {
        double s = std::ldexp(1.0, -e);
        std::int64_t ix = static_cast<std::int64_t>(std::floor(X.x / s));
        std::int64_t iy = static_cast<std::int64_t>(std::floor(X.y / s));
        int id = find_at_scale(e, ix, iy);
        if (id >= 0) return id;
    }
    return -1;
}

void WhitneyDecomposition::neighbors(int id, const std::function<void(int)>& fn) const {
    Box b = box(id);
    // touching cubes have side ratio in [1/4, 4]: check scales e-2 .. e+2
    int e = exp_[id];
    Box q = b.expanded(1e-12);
    for (int ee = std::max(e_min_, e - 2); ee <= std::min(e_max_, e + 2); ++ee) {
        double s = std::ldexp(1.0, -ee);
        std::int64_t x0 = static_cast<std::int64_t>(std::floor(q.lo.x / s));
        std::int64_t x1 = static_cast<std::int64_t>(std::floor(q.hi.x / s));
        std::int64_t y0 = static_cast<std::int64_t>(std::floor(q.lo.y / s));
        std::int64_t y1 = static_cast<std::int64_t>(std::floor(q.hi.y / s));
        for (std::int64_t yy = y0; yy <= y1; ++yy)
            for (std::int64_t xx = x0; xx <= x1; ++xx) {
                int nid = find_at_scale(ee, xx, yy);
                if (nid >= 0 && nid != id) fn(nid);
            }
    }
}

void WhitneyDecomposition::for_cubes_near(const Box& query, int e_lo, int e_hi,
                                          const std::function<void(int)>& fn) const {
    for (int e = std::max(e_min_, e_lo); e <= std::min(e_max_, e_hi); ++e) {
        double s = std::ldexp(1.0, -e);
        std::int64_t x0 = static_cast<std::int64_t>(std::floor(query.lo.x / s));
        std::int64_t x1 = static_cast<std::int64_t>(std::ceil(query.hi.x / s)) - 1;
        std::int64_t y0 = static_cast<std::int64_t>(std::floor(query.lo.y / s));
        std::int64_t y1 = static_cast<std::int64_t>(std::ceil(query.hi.y / s)) - 1;
        y0 = std::max<std::int64_t>(y0, row_lo_[e - e_min_]);
        y1 = std::min<std::int64_t>(y1, row_hi_[e - e_min_]);
        auto [b, eend] = scale_span(e);
        if (b == eend) continue;
        for (std::int64_t yy = y0; yy <= y1; ++yy) {
            // binary search the row start, then scan ix range
            int lo = b, hi = eend;
            while (lo < hi) {
                int mid = (lo + hi) / 2;
                if (iy_[mid] < yy || (iy_[mid] == yy && ix_[mid] < x0))
                    lo = mid + 1;
                else
                    hi = mid;
            }
            for (int i = lo; i < eend && iy_[i] == yy && ix_[i] <= x1; ++i) fn(i);
        }
    }
}

void WhitneyDecomposition::dump_csv(std::ostream& os) const {
    os << "k,cx,cy,len,dist\n";
    char buf[200];
    for (int i = 0; i < size(); ++i) {
        Vec2 c = center(i);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", static_cast<int>(exp_[i]),
                      c.x, c.y, side(i), dist_[i]);
        os << buf;
    }
}

std::uint64_t WhitneyDecomposition::geometry_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(ix_.data(), ix_.size() * sizeof(ix_[0]), h);
    h = fnv1a(iy_.data(), iy_.size() * sizeof(iy_[0]), h);
    h = fnv1a(exp_.data(), exp_.size() * sizeof(exp_[0]), h);
    return h;
}

Box dilate(const Box& I, double tau) {
    if (!(tau > 0.0) || tau > kTau0) throw std::invalid_argument("dilate: tau must be in (0, 2^-4]");
    return I.dilated(tau);
}

int nearest_dyadic(const WhitneyDecomposition& w, int id, const DyadicGrid& grid) {
    double s = w.side(id);
    int k = static_cast<int>(std::lround(-std::log2(s)));
    if (k < grid.kmin() || k > grid.kmax())
        throw std::invalid_argument("nearest_dyadic: l(I) outside the grid's generation range");
    Box I = w.box(id);
    auto [b, e] = grid.generation(k);
    int best = -1;
    double bd = kInf;
    for (int q = b; q < e; ++q) {
        // prune with the cube's bbox
        if (grid.cube(q).bbox.dist_to(I) >= bd) continue;
        double d = grid.dist_to_box(q, I);
        if (d < bd - 1e-15) {
            bd = d;
            best = q;
        }
    }
    return best;  // generation scan order = increasing j, so ties keep smallest j
}

}  // namespace cmelab
