#include "cmelab/structures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace cmelab {

// ---------------------------------------------------------------------------
// Boundary sweep
// ---------------------------------------------------------------------------

RegionBoundary region_boundary(const std::vector<Box>& boxes) {
    RegionBoundary rb;
    if (boxes.empty()) return rb;

    std::vector<double> xs, ys;
    xs.reserve(boxes.size() * 2);
    ys.reserve(boxes.size() * 2);
    for (const Box& b : boxes) {
        xs.push_back(b.lo.x);
        xs.push_back(b.hi.x);
        ys.push_back(b.lo.y);
        ys.push_back(b.hi.y);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    int m = static_cast<int>(xs.size()) - 1;  // slabs
    int n = static_cast<int>(ys.size()) - 1;  // cells
    if (m <= 0 || n <= 0) return rb;

    auto yindex = [&](double v) {
        return static_cast<int>(std::lower_bound(ys.begin(), ys.end(), v) - ys.begin());
    };
    auto xindex = [&](double v) {
        return static_cast<int>(std::lower_bound(xs.begin(), xs.end(), v) - xs.begin());
    };

    // per-slab box begin/end events
    std::vector<std::vector<std::pair<int, int>>> start(m + 1), stop(m + 1);
    for (const Box& b : boxes) {
        int x0 = xindex(b.lo.x), x1 = xindex(b.hi.x);
        int y0 = yindex(b.lo.y), y1 = yindex(b.hi.y);
        if (x0 >= x1 || y0 >= y1) continue;
        start[x0].push_back({y0, y1});
        stop[x1].push_back({y0, y1});
    }

    std::vector<int> cnt(n, 0);
    std::vector<char> prev(n, 0), cur(n, 0);
    auto flush_vertical = [&](double x, const std::vector<char>& a, const std::vector<char>& b) {
        int j = 0;
        while (j < n) {
            if (a[j] != b[j]) {
                int j0 = j;
                while (j < n && a[j] != b[j]) ++j;
                rb.segments.push_back({{x, ys[j0]}, {x, ys[j]}});
                rb.length += ys[j] - ys[j0];
            } else {
                ++j;
            }
        }
    };

    for (int i = 0; i <= m; ++i) {
        if (i < m) {
            for (auto [y0, y1] : start[i])
                for (int j = y0; j < y1; ++j) ++cnt[j];
            for (auto [y0, y1] : stop[i])
                for (int j = y0; j < y1; ++j) --cnt[j];
            for (int j = 0; j < n; ++j) cur[j] = cnt[j] > 0;
        } else {
            std::fill(cur.begin(), cur.end(), 0);
        }
        flush_vertical(xs[i], prev, cur);
        if (i < m) {
            // horizontal boundary pieces inside slab [xs[i], xs[i+1])
            double x0 = xs[i], x1 = xs[i + 1];
            for (int j = 0; j <= n; ++j) {
                bool below = j > 0 && cur[j - 1];
                bool above = j < n && cur[j];
                if (below != above) {
                    rb.segments.push_back({{x0, ys[j]}, {x1, ys[j]}});
                    rb.length += x1 - x0;
                }
            }
        }
        std::swap(prev, cur);
    }
    return rb;
}

void RegionBoundary::build_index() const {
    auto idx = std::make_shared<SegIndex>();
    Box bb{segments[0].a, segments[0].a};
    for (const Segment& s : segments) {
        bb = Box::hull(bb, Box{{std::min(s.a.x, s.b.x), std::min(s.a.y, s.b.y)},
                               {std::max(s.a.x, s.b.x), std::max(s.a.y, s.b.y)}});
    }
    idx->bbox = bb;
    int n = static_cast<int>(segments.size());
    int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
    idx->cell = std::max(std::max(bb.width(), bb.height()) / target, 1e-12);
    idx->nx = std::max(1, static_cast<int>(std::ceil(bb.width() / idx->cell)));
    idx->ny = std::max(1, static_cast<int>(std::ceil(bb.height() / idx->cell)));
    idx->buckets.assign(static_cast<std::size_t>(idx->nx) * idx->ny, {});
    for (int i = 0; i < n; ++i) {
        const Segment& s = segments[i];
        int x0 = std::clamp(static_cast<int>((std::min(s.a.x, s.b.x) - bb.lo.x) / idx->cell), 0, idx->nx - 1);
        int x1 = std::clamp(static_cast<int>((std::max(s.a.x, s.b.x) - bb.lo.x) / idx->cell), 0, idx->nx - 1);
        int y0 = std::clamp(static_cast<int>((std::min(s.a.y, s.b.y) - bb.lo.y) / idx->cell), 0, idx->ny - 1);
        int y1 = std::clamp(static_cast<int>((std::max(s.a.y, s.b.y) - bb.lo.y) / idx->cell), 0, idx->ny - 1);
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) idx->buckets[yy * idx->nx + xx].push_back(i);
    }
    index_ = std::move(idx);
}

double RegionBoundary::dist(const Vec2& p) const {
    if (segments.empty()) return kInf;
    if (segments.size() < 32) {
        double best = kInf;
        for (const Segment& s : segments) best = std::min(best, s.dist_to(p));
        return best;
    }
    if (!index_) build_index();
    const SegIndex& g = *index_;
    int cx = std::clamp(static_cast<int>((p.x - g.bbox.lo.x) / g.cell), 0, g.nx - 1);
    int cy = std::clamp(static_cast<int>((p.y - g.bbox.lo.y) / g.cell), 0, g.ny - 1);
    double best = kInf;
    int max_ring = std::max(g.nx, g.ny);
    for (int ring = 0; ring <= max_ring; ++ring) {
        // once a hit exists, expanding further cannot help past one safety ring
        if (best < (ring - 1) * g.cell) break;
        bool any = false;
        for (int yy = cy - ring; yy <= cy + ring; ++yy) {
            if (yy < 0 || yy >= g.ny) continue;
            for (int xx = cx - ring; xx <= cx + ring; ++xx) {
                if (xx < 0 || xx >= g.nx) continue;
                if (std::max(std::abs(xx - cx), std::abs(yy - cy)) != ring) continue;
                any = true;
                for (int i : g.buckets[yy * g.nx + xx]) best = std::min(best, segments[i].dist_to(p));
            }
        }
        if (!any && ring > 0 && best < kInf) break;
    }
    if (best == kInf) {
        for (const Segment& s : segments) best = std::min(best, s.dist_to(p));
    }
    return best;
}

std::vector<WeightedPoint> RegionBoundary::sample(int count) const {
    std::vector<WeightedPoint> out;
    if (segments.empty() || count <= 0) return out;
    double h = length / count;
    double acc = 0.0;
    std::size_t seg = 0;
    double seg_end = segments[0].length();
    for (int i = 0; i < count; ++i) {
        double target = (i + 0.5) * h;
        while (seg + 1 < segments.size() && target > seg_end) {
            acc = seg_end;
            ++seg;
            seg_end += segments[seg].length();
        }
        const Segment& s = segments[seg];
        double local = (target - acc) / std::max(s.length(), 1e-300);
        local = std::clamp(local, 0.0, 1.0);
        out.push_back({s.a + (s.b - s.a) * local, h, target});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Region
// ---------------------------------------------------------------------------

Region::Region(std::vector<Box> boxes) : boxes_(std::move(boxes)) {
    if (boxes_.empty()) return;
    bbox_ = boxes_[0];
    for (const Box& b : boxes_) bbox_ = Box::hull(bbox_, b);
    int n = static_cast<int>(boxes_.size());
    nx_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
    ny_ = nx_;
    cell_ = std::max(bbox_.width() / nx_, bbox_.height() / ny_);
    if (cell_ <= 0) cell_ = 1.0;
    nx_ = std::max(1, static_cast<int>(std::ceil(bbox_.width() / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(bbox_.height() / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (int i = 0; i < n; ++i) {
        const Box& b = boxes_[i];
        int x0 = std::clamp(static_cast<int>((b.lo.x - bbox_.lo.x) / cell_), 0, nx_ - 1);
        int x1 = std::clamp(static_cast<int>((b.hi.x - bbox_.lo.x) / cell_), 0, nx_ - 1);
        int y0 = std::clamp(static_cast<int>((b.lo.y - bbox_.lo.y) / cell_), 0, ny_ - 1);
        int y1 = std::clamp(static_cast<int>((b.hi.y - bbox_.lo.y) / cell_), 0, ny_ - 1);
        for (int yy = y0; yy <= y1; ++yy)
            for (int xx = x0; xx <= x1; ++xx) buckets_[yy * nx_ + xx].push_back(i);
    }
}

bool Region::contains(const Vec2& p) const {
    if (boxes_.empty() || !bbox_.contains(p)) return false;
    int xx = std::clamp(static_cast<int>((p.x - bbox_.lo.x) / cell_), 0, nx_ - 1);
    int yy = std::clamp(static_cast<int>((p.y - bbox_.lo.y) / cell_), 0, ny_ - 1);
    for (int i : buckets_[yy * nx_ + xx])
        if (boxes_[i].contains(p)) return true;
    return false;
}

bool Region::contains_interior(const Vec2& p) const {
    return contains(p) && boundary().dist(p) > 0.0;
}

const RegionBoundary& Region::boundary() const {
    if (!boundary_) boundary_ = std::make_shared<RegionBoundary>(region_boundary(boxes_));
    return *boundary_;
}

double Region::area_boxsum() const {
    double a = 0.0;
    for (const Box& b : boxes_) a += b.area();
    return a;
}

void Region::dump_csv(std::ostream& os) const {
    char buf[200];
    os << "kind,x0,y0,x1,y1\n";
    for (const Box& b : boxes_) {
        std::snprintf(buf, sizeof buf, "rect,%.17g,%.17g,%.17g,%.17g\n", b.lo.x, b.lo.y, b.hi.x,
                      b.hi.y);
        os << buf;
    }
    for (const Segment& sg : boundary().segments) {
        std::snprintf(buf, sizeof buf, "boundary,%.17g,%.17g,%.17g,%.17g\n", sg.a.x, sg.a.y,
                      sg.b.x, sg.b.y);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Corona decomposition
// ---------------------------------------------------------------------------

namespace {

// Total least squares line through samples of Delta*_Q = B(x_Q, K l(Q)) cap E.
RegimeLine fit_line(const DyadicGrid& grid, int q, double K, int nsamples) {
    const DyadicCube& Q = grid.cube(q);
    const AmbientSet& set = grid.set();
    double R = K * Q.len;
    std::vector<Vec2> pts;
    pts.reserve(nsamples);
    if (set.kind() == SetKind::four_corners) {
        auto s = set.sample_points(nsamples * 4, 0, 0);
        for (const auto& wp : s)
            if (dist(wp.p, Q.center) <= R) pts.push_back(wp.p);
    } else {
        // parameter window around the cube; |t - x| <= |P(t) - x| for graphs,
        // arclength dominates chord for polygons, so this window covers the ball.
        double span = R + 2.0 * Q.len;
        for (int i = 0; i < nsamples; ++i) {
            double t = (Q.a + Q.b) * 0.5 - span + 2.0 * span * (i + 0.5) / nsamples;
            Vec2 p = set.point_at(t);
            if (dist(p, Q.center) <= R) pts.push_back(p);
        }
    }
    RegimeLine line;
    if (pts.size() < 2) {
        line.offset = Q.center.y;
        return line;
    }
    double mx = 0, my = 0;
    for (const Vec2& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (const Vec2& p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
        syy += (p.y - my) * (p.y - my);
    }
    // principal direction of the covariance
    double tr = sxx + syy, det = sxx * syy - sxy * sxy;
    double lam = tr * 0.5 + std::sqrt(std::max(0.0, tr * tr * 0.25 - det));
    Vec2 dir{sxy, lam - sxx};
    if (dir.norm() < 1e-30) dir = {1.0, 0.0};
    if (std::abs(dir.x) < 1e-12 * std::abs(dir.y)) {
        // vertical fit: represent as a huge slope
        line.slope = 1e12;
        line.offset = my - line.slope * mx;
        return line;
    }
    line.slope = dir.y / dir.x;
    line.offset = my - line.slope * mx;
    return line;
}

// sup_{x in Delta*_Q} dist(x, Gamma_S) + sup_{y in B*_Q cap Gamma_S} dist(y, E)
double bilateral_gap(const DyadicGrid& grid, int q, const RegimeLine& line, double K,
                     int nsamples) {
    const DyadicCube& Q = grid.cube(q);
    const AmbientSet& set = grid.set();
    double R = K * Q.len;
    double sup1 = 0.0;
    if (set.kind() == SetKind::four_corners) {
        auto s = set.sample_points(nsamples * 4, 0, 0);
        for (const auto& wp : s)
            if (dist(wp.p, Q.center) <= R) sup1 = std::max(sup1, line.dist(wp.p));
    } else {
        double span = R + 2.0 * Q.len;
        for (int i = 0; i < nsamples; ++i) {
            double t = (Q.a + Q.b) * 0.5 - span + 2.0 * span * (i + 0.5) / nsamples;
            Vec2 p = set.point_at(t);
            if (dist(p, Q.center) <= R) sup1 = std::max(sup1, line.dist(p));
        }
    }
    double sup2 = 0.0;
    // sample the line inside B*_Q
    double denom = std::sqrt(1.0 + line.slope * line.slope);
    for (int i = 0; i < nsamples; ++i) {
        double u = -R + 2.0 * R * (i + 0.5) / nsamples;  // arclength along the line
        double zx = Q.center.x + u / denom;
        Vec2 y{zx, line.eval(zx)};
        if (dist(y, Q.center) <= R) sup2 = std::max(sup2, set.distance(y));
    }
    return sup1 + sup2;
}

}  // namespace

CoronaDecomposition build_corona(const DyadicGrid& grid, double eta, double K, int samples) {
    CoronaDecomposition c;
    c.eta = eta;
    c.K = K;
    c.regime_of.assign(grid.size(), -1);

    std::deque<int> fresh;  // cubes that must start a new regime
    for (int q : grid.top_cubes()) fresh.push_back(q);

    while (!fresh.empty()) {
        int root = fresh.front();
        fresh.pop_front();
        RegimeLine line = fit_line(grid, root, K, samples);
        if (bilateral_gap(grid, root, line, K, samples) >= eta * grid.cube(root).len) {
            // root itself is bad; restart at its children
            c.bad.push_back(root);
            auto [cb, ce] = grid.children(root);
            for (int ch = cb; ch < ce; ++ch) fresh.push_back(ch);
            continue;
        }
        int regime_idx = static_cast<int>(c.regimes.size());
        c.regimes.push_back({root, line, {}});
        // grow the coherent regime: children join only all-in
        std::deque<int> grow{root};
        while (!grow.empty()) {
            int q = grow.front();
            grow.pop_front();
            c.regimes[regime_idx].cubes.push_back(q);
            c.regime_of[q] = regime_idx;
            auto [cb, ce] = grid.children(q);
            if (cb == ce) continue;
            bool all_ok = true;
            for (int ch = cb; ch < ce; ++ch) {
                if (bilateral_gap(grid, ch, line, K, samples) >= eta * grid.cube(ch).len) {
                    all_ok = false;
                    break;
                }
            }
            if (all_ok) {
                for (int ch = cb; ch < ce; ++ch) grow.push_back(ch);
            } else {
                // coherency: all children leave the regime; violators restart
                // below themselves, the rest root new regimes
                for (int ch = cb; ch < ce; ++ch) fresh.push_back(ch);
            }
        }
    }
    return c;
}

double CoronaDecomposition::packing_ratio(const DyadicGrid& grid, int q) const {
    double sum = 0.0;
    grid.descendants(q, [&](int id) {
        if (regime_of[id] < 0)
            sum += grid.cube(id).sigma;
        else if (regimes[regime_of[id]].root == id)
            sum += grid.cube(id).sigma;
    });
    return sum / grid.cube(q).sigma;
}

double CoronaDecomposition::max_packing_ratio(const DyadicGrid& grid) const {
    double best = 0.0;
    for (int q = 0; q < grid.size(); ++q) best = std::max(best, packing_ratio(grid, q));
    return best;
}

void CoronaDecomposition::dump(std::ostream& os, const DyadicGrid& grid) const {
    os << "{\n  \"regimes\": [\n";
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        const auto& S = regimes[i];
        const DyadicCube& rq = grid.cube(S.root);
        os << "    {\"root\": [" << rq.k << "," << rq.j << "], \"slope\": " << S.line.slope
           << ", \"offset\": " << S.line.offset << ", \"cubes\": " << S.cubes.size() << "}"
           << (i + 1 < regimes.size() ? ",\n" : "\n");
    }
    os << "  ],\n  \"bad_count\": " << bad.size() << "\n}\n";
}

// ---------------------------------------------------------------------------
// WhitneyDyadicStructure
// ---------------------------------------------------------------------------

WhitneyDyadicStructure WhitneyDyadicStructure::build(const DyadicGrid& grid,
                                                     const WhitneyDecomposition& w,
                                                     StructureMode mode, StructureParams params,
                                                     DomainMode domain,
                                                     const CoronaDecomposition* corona) {
    if (!(params.eta > 0.0 && params.eta < 1.0)) throw std::invalid_argument("eta must be in (0,1)");
    if (!(params.K > 1.0)) throw std::invalid_argument("K must exceed 1");
    if (!(params.tau > 0.0 && params.tau <= kTau0 / 4.0))
        throw std::invalid_argument("tau must be in (0, tau0/4]");
    if (mode == StructureMode::ur && corona == nullptr)
        throw std::invalid_argument("ur mode requires a corona decomposition");
    WhitneyDyadicStructure s;
    s.grid_ = &grid;
    s.whitney_ = &w;
    s.mode_ = mode;
    s.params_ = params;
    s.domain_ = domain;
    s.corona_ = corona;
    return s;
}

bool WhitneyDyadicStructure::domain_ok(int id) const {
    if (domain_ == DomainMode::complement) return true;
    return grid_->set().in_domain(whitney_->center(id), domain_);
}

void WhitneyDyadicStructure::for_each_w0(int q, const std::function<void(int)>& fn) const {
    const DyadicCube& Q = grid_->cube(q);
    double lQ = Q.len;
    double smin = std::pow(params_.eta, 0.25) * lQ;
    double smax = std::sqrt(params_.K) * lQ;
    double dmax = std::sqrt(params_.K) * lQ;
    int e_lo = static_cast<int>(std::ceil(-std::log2(smax) - 1e-9));
    int e_hi = static_cast<int>(std::floor(-std::log2(smin) + 1e-9));
    Box query = Q.bbox.expanded(dmax);
    double diamQ = Q.bbox.diam();
    whitney_->for_cubes_near(query, e_lo, e_hi, [&](int id) {
        if (!domain_ok(id)) return;
        Box b = whitney_->box(id);
        double lb = Q.bbox.dist_to(b);
        if (lb > dmax) return;
        // dist(I,Q) <= dist(I, bbox(Q)) + diam(Q); only borderline cases need
        // the exact oracle
        if (lb + diamQ > dmax && grid_->dist_to_box(q, b) > dmax) return;
        fn(id);
    });
}

bool WhitneyDyadicStructure::in_w0(int q, int id) const {
    const DyadicCube& Q = grid_->cube(q);
    double lQ = Q.len;
    double s = whitney_->side(id);
    if (s < std::pow(params_.eta, 0.25) * lQ - 1e-15 || s > std::sqrt(params_.K) * lQ + 1e-15)
        return false;
    if (!domain_ok(id)) return false;
    return grid_->dist_to_box(q, whitney_->box(id)) <= std::sqrt(params_.K) * lQ;
}

int WhitneyDyadicStructure::side_of_box(const Box& b, const RegimeLine& line) const {
    Vec2 c = b.center();
    return (c.y - line.eval(c.x)) >= 0.0 ? +1 : -1;
}

std::vector<int> WhitneyDyadicStructure::members_with_connectors(int q, int side) const {
    const DyadicCube& Q = grid_->cube(q);
    double lQ = Q.len;

    const RegimeLine* line = nullptr;
    int parent = -1;
    if (mode_ == StructureMode::cad) {
        parent = grid_->cube(q).parent;
    } else if (mode_ == StructureMode::ur) {
        int r = corona_->regime_of[q];
        if (r < 0) {
            // bad cube: W_Q = W0_Q
            std::vector<int> out;
            for_each_w0(q, [&](int id) { out.push_back(id); });
            return out;
        }
        if (side == 0) {
            // W_Q is the union of the two one-sided families; the halves are
            // chained within themselves, never across the graph
            std::vector<int> both = members_with_connectors(q, +1);
            std::vector<int> neg = members_with_connectors(q, -1);
            both.insert(both.end(), neg.begin(), neg.end());
            std::sort(both.begin(), both.end());
            both.erase(std::unique(both.begin(), both.end()), both.end());
            return both;
        }
        line = &corona_->regimes[r].line;
        int p = grid_->cube(q).parent;
        if (p >= 0 && corona_->regime_of[p] == r) parent = p;  // parent within S, else Q itself
    }

    auto side_ok = [&](int id) {
        if (line == nullptr || side == 0) return true;
        return side_of_box(whitney_->box(id), *line) == side;
    };

    std::vector<int> members;
    for_each_w0(q, [&](int id) {
        if (side_ok(id)) members.push_back(id);
    });
    if (parent >= 0) {
        for_each_w0(parent, [&](int id) {
            if (side_ok(id)) members.push_back(id);
        });
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
    }
    if (members.empty())
        throw std::runtime_error("empty W_Q member set (eta/K misconfiguration) at cube id " +
                                 std::to_string(q));

    // Harnack-chain augmentation: flood from the corkscrew cube over touching
    // members; BFS through admissible non-member cubes joins the stragglers.
    auto member_index = [&](int id) -> int {
        auto it = std::lower_bound(members.begin(), members.end(), id);
        if (it == members.end() || *it != id) return -1;
        return static_cast<int>(it - members.begin());
    };
    double floor_side = 0.5 * std::sqrt(params_.eta) * lQ;
    double reach = (2.0 * std::sqrt(params_.K) + 4.0) * lQ;
    auto admissible = [&](int id) {
        if (member_index(id) >= 0) return true;
        double s = whitney_->side(id);
        if (s < floor_side || s > reach) return false;
        if (!domain_ok(id)) return false;
        if (line != nullptr && side != 0 && side_of_box(whitney_->box(id), *line) != side) return false;
        return Q.bbox.dist_to(whitney_->box(id)) <= reach;
    };

    // seed: member cube whose center is nearest x_Q
    int seed = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < members.size(); ++i) {
        double d = dist(whitney_->center(members[i]), Q.center);
        if (d < bd - 1e-15) {
            bd = d;
            seed = static_cast<int>(i);
        }
    }

    std::vector<char> reached(members.size(), 0);
    std::deque<int> bfs{seed};
    reached[seed] = 1;
    while (!bfs.empty()) {
        int idx = bfs.front();
        bfs.pop_front();
        whitney_->neighbors(members[idx], [&](int nb) {
            int j = member_index(nb);
            if (j < 0 || reached[j]) return;
            reached[j] = 1;
            bfs.push_back(j);
        });
    }
    std::vector<int> stragglers;
    for (std::size_t i = 0; i < members.size(); ++i)
        if (!reached[i]) stragglers.push_back(members[i]);
    if (stragglers.empty()) return members;

    // BFS over the admissible pocket from the reached set; connect stragglers
    // along parent chains.
    std::unordered_map<int, int> came;  // cube -> predecessor
    std::deque<int> q2;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!reached[i]) continue;
        came[members[i]] = members[i];
        q2.push_back(members[i]);
    }
    std::size_t expansions = 0;
    while (!q2.empty() && expansions < 200000) {
        int id = q2.front();
        q2.pop_front();
        ++expansions;
        whitney_->neighbors(id, [&](int nb) {
            if (came.count(nb) || !admissible(nb)) return;
            came[nb] = id;
            q2.push_back(nb);
        });
    }
    std::set<int> out(members.begin(), members.end());
    for (int sid : stragglers) {
        auto it = came.find(sid);
        if (it == came.end())
            throw std::runtime_error("harnack chain not found within budget at cube id " +
                                     std::to_string(q));
        int cur = sid;
        while (came[cur] != cur) {
            out.insert(cur);
            cur = came[cur];
        }
    }
    return {out.begin(), out.end()};
}

std::vector<int> WhitneyDyadicStructure::wq(int q, int side) const {
    if (mode_ == StructureMode::adr) {
        std::vector<int> out;
        for_each_w0(q, [&](int id) { out.push_back(id); });
        if (out.empty())
            throw std::runtime_error("empty W0_Q (eta/K misconfiguration) at cube id " +
                                     std::to_string(q));
        return out;
    }
    return members_with_connectors(q, side);
}

Vec2 WhitneyDyadicStructure::corkscrew_point(int q, int side) const {
    const DyadicCube& Q = grid_->cube(q);
    const RegimeLine* line = nullptr;
    if (mode_ == StructureMode::ur && corona_ != nullptr) {
        int r = corona_->regime_of[q];
        if (r >= 0) line = &corona_->regimes[r].line;
    }
    int best = -1;
    double bd = kInf;
    for_each_w0(q, [&](int id) {
        Box b = whitney_->box(id);
        if (line != nullptr) {
            if (side_of_box(b, *line) != side) return;
        } else if (domain_ == DomainMode::complement && grid_->set().kind() != SetKind::four_corners) {
            // graph/polygon complement: side +1 means above / outside
            Vec2 c = b.center();
            bool above = grid_->set().kind() == SetKind::polygon
                             ? !static_cast<const PolygonSet&>(grid_->set()).point_inside(c)
                             : c.y > static_cast<const GraphSet&>(grid_->set()).psi(c.x);
            if ((side > 0) != above) return;
        }
        double d = dist(whitney_->center(id), Q.center);
        if (d < bd - 1e-15) {
            bd = d;
            best = id;
        }
    });
    if (best < 0)
        throw std::runtime_error("no corkscrew cube on requested side at cube id " + std::to_string(q));
    return whitney_->center(best);
}

Region WhitneyDyadicStructure::region_from_cubes(const std::vector<int>& qs, double tau) const {
    std::set<int> ids;
    for (int q : qs) {
        for (int id : wq(q)) ids.insert(id);
    }
    std::vector<Box> boxes;
    boxes.reserve(ids.size());
    for (int id : ids) boxes.push_back(whitney_->box(id).dilated(tau));
    return Region(std::move(boxes));
}

Region WhitneyDyadicStructure::whitney_region(int q, bool fat) const {
    std::vector<Box> boxes;
    for (int id : wq(q)) boxes.push_back(whitney_->box(id).dilated(fat ? 2 * params_.tau : params_.tau));
    return Region(std::move(boxes));
}

Region WhitneyDyadicStructure::carleson_box(int q) const {
    std::vector<int> qs;
    grid_->descendants(q, [&](int id) { qs.push_back(id); });
    return region_from_cubes(qs, params_.tau);
}

int t_delta_generation(double r) {
    return static_cast<int>(std::floor(-std::log2(200.0 * r) + 1e-12));
}

Region WhitneyDyadicStructure::carleson_box_ball(const Vec2& x, double r) const {
    if (!(r > 0.0) || (std::isfinite(grid_->set().diam()) && r >= grid_->set().diam()))
        throw std::invalid_argument("carleson_box_ball: need 0 < r < diam(E)");
    int k = std::clamp(t_delta_generation(r), grid_->kmin(), grid_->kmax());
    auto [b, e] = grid_->generation(k);
    std::vector<int> qs;
    for (int id = b; id < e; ++id) {
        // Q cap 2*Delta nonempty: some boundary mass of Q within B(x, 2r)
        const DyadicCube& Q = grid_->cube(id);
        if (Q.bbox.dist_to(x) > 2.0 * r) continue;
        double inball = 0.0;
        const AmbientSet& set = grid_->set();
        if (set.kind() == SetKind::four_corners)
            inball = static_cast<const FourCornersSet&>(set).measure_ball_cells(
                x, 2.0 * r, static_cast<std::int64_t>(Q.a), static_cast<std::int64_t>(Q.b));
        else if (set.kind() == SetKind::polygon)
            inball = static_cast<const PolygonSet&>(set).arclength_in_ball(x, 2.0 * r, Q.a, Q.b);
        else
            inball = static_cast<const GraphSet&>(set).arclength_in_ball(x, 2.0 * r, Q.a, Q.b);
        if (inball > 0.0) {
            grid_->descendants(id, [&](int d) { qs.push_back(d); });
        }
    }
    return region_from_cubes(qs, params_.tau);
}

std::pair<Region, std::vector<int>> WhitneyDyadicStructure::sawtooth(const std::vector<int>& F,
                                                                     int q0) const {
    // F must be pairwise disjoint cubes under q0
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (!grid_->is_descendant(F[i], q0))
            throw std::invalid_argument("sawtooth: F must lie under Q0");
        for (std::size_t j = i + 1; j < F.size(); ++j) {
            const DyadicCube& a = grid_->cube(F[i]);
            const DyadicCube& b = grid_->cube(F[j]);
            if (a.a < b.b && b.a < a.b)
                throw std::invalid_argument("sawtooth: overlapping family rejected");
        }
    }
    std::vector<int> keep;
    std::function<void(int)> walk = [&](int id) {
        for (int f : F)
            if (f == id) return;  // prune the subtree below each Q_j
        keep.push_back(id);
        auto [cb, ce] = grid_->children(id);
        for (int c = cb; c < ce; ++c) walk(c);
    };
    walk(q0);
    return {region_from_cubes(keep, params_.tau), keep};
}

Region WhitneyDyadicStructure::cone(double param_x) const {
    std::vector<int> qs;
    for (int k = grid_->kmin(); k <= grid_->kmax(); ++k) {
        int id = grid_->find(k, param_x);
        if (id >= 0) qs.push_back(id);
    }
    return region_from_cubes(qs, params_.tau);
}

Region WhitneyDyadicStructure::cone_local(double param_x, int q) const {
    std::vector<int> qs;
    const DyadicCube& Q = grid_->cube(q);
    for (int k = Q.k; k <= grid_->kmax(); ++k) {
        int id = grid_->find(k, param_x);
        if (id >= 0 && grid_->is_descendant(id, q)) qs.push_back(id);
    }
    return region_from_cubes(qs, params_.tau);
}

bool WhitneyDyadicStructure::cone_contains(double param_x, const Vec2& Y, int q_local,
                                           bool fat) const {
    double tau = fat ? 2 * params_.tau : params_.tau;
    // candidate Whitney cubes whose dilate can contain Y
    std::vector<int> cands;
    int home = whitney_->containing_cube(Y);
    if (home >= 0) {
        cands.push_back(home);
        whitney_->neighbors(home, [&](int nb) {
            if (whitney_->box(nb).dilated(tau).contains(Y)) cands.push_back(nb);
        });
    }
    if (cands.empty()) return false;
    int k_from = q_local >= 0 ? grid_->cube(q_local).k : grid_->kmin();
    for (int k = k_from; k <= grid_->kmax(); ++k) {
        int q = grid_->find(k, param_x);
        if (q < 0) continue;
        if (q_local >= 0 && !grid_->is_descendant(q, q_local)) continue;
        for (int id : cands) {
            if (!whitney_->box(id).dilated(tau).contains(Y)) continue;
            if (mode_ == StructureMode::adr) {
                if (in_w0(q, id)) return true;
            } else {
                auto mem = wq(q);
                if (std::binary_search(mem.begin(), mem.end(), id)) return true;
            }
        }
    }
    return false;
}

bool WhitneyDyadicStructure::carleson_contains(int q, const Vec2& Y, bool fat) const {
    double tau = fat ? 2 * params_.tau : params_.tau;
    std::vector<int> cands;
    int home = whitney_->containing_cube(Y);
    if (home >= 0) {
        if (whitney_->box(home).dilated(tau).contains(Y)) cands.push_back(home);
        whitney_->neighbors(home, [&](int nb) {
            if (whitney_->box(nb).dilated(tau).contains(Y)) cands.push_back(nb);
        });
    }
    if (cands.empty()) return false;
    const DyadicCube& Q = grid_->cube(q);
    for (int id : cands) {
        double t = grid_->set().nearest_param(whitney_->center(id));
        for (int k = Q.k; k <= grid_->kmax(); ++k) {
            int qq = grid_->find(k, t);
            for (int off = -1; off <= 1; ++off) {
                int cand = qq;
                if (off != 0 && qq >= 0) {
                    auto [gb, ge] = grid_->generation(k);
                    cand = qq + off;
                    if (cand < gb || cand >= ge) continue;
                }
                if (cand < 0 || !grid_->is_descendant(cand, q)) continue;
                if (mode_ == StructureMode::adr) {
                    if (in_w0(cand, id)) return true;
                } else {
                    auto mem = wq(cand);
                    if (std::binary_search(mem.begin(), mem.end(), id)) return true;
                }
            }
        }
    }
    return false;
}

std::pair<Region, Region> WhitneyDyadicStructure::regime_domains(int regime) const {
    if (mode_ != StructureMode::ur || corona_ == nullptr)
        throw std::runtime_error("regime_domains requires a ur-mode structure");
    const StoppingRegime& S = corona_->regimes[regime];
    std::set<int> plus, minus;
    for (int q : S.cubes) {
        for (int id : wq(q, +1)) plus.insert(id);
        for (int id : wq(q, -1)) minus.insert(id);
    }
    std::vector<Box> bp, bm;
    for (int id : plus) bp.push_back(whitney_->box(id).dilated(params_.tau));
    for (int id : minus) bm.push_back(whitney_->box(id).dilated(params_.tau));
    return {Region(std::move(bp)), Region(std::move(bm))};
}

double WhitneyDyadicStructure::whitney2_constant(int q) const {
    const DyadicCube& Q = grid_->cube(q);
    double lQ = Q.len;
    double eta_h = std::sqrt(params_.eta);
    double K_h = std::sqrt(params_.K);
    double C = 1.0;
    for (int id : wq(q)) {
        double s = whitney_->side(id);
        C = std::max(C, eta_h * lQ / s);
        C = std::max(C, s / (K_h * lQ));
        C = std::max(C, grid_->dist_to_box(q, whitney_->box(id)) / (K_h * lQ));
    }
    return C;
}

bool trad_cone_contains(const AmbientSet& set, const Vec2& x, double kappa, const Vec2& Y,
                        double r) {
    double d = dist(Y, x);
    if (d >= r) return false;
    return d <= (1.0 + kappa) * set.distance(Y);
}

// ---------------------------------------------------------------------------
// Big pieces of Lipschitz subdomains
// ---------------------------------------------------------------------------

LipschitzSubdomain big_pieces_subdomain(const DyadicGrid& grid, int q, double height_factor) {
    const AmbientSet& set = grid.set();
    if (set.kind() != SetKind::flat && set.kind() != SetKind::graph)
        throw std::invalid_argument("big_pieces_subdomain: graph-kind sets only");
    const auto& g = static_cast<const GraphSet&>(set);
    const DyadicCube& Q = grid.cube(q);
    LipschitzSubdomain sub;
    sub.q = q;
    sub.param_a = Q.a;
    sub.param_b = Q.b;
    sub.height = height_factor * Q.len;

    // boundary: the graph piece, its lift by +h, and the two vertical sides
    std::vector<double> knots{Q.a};
    for (const Vec2& bp : g.breakpoints())
        if (bp.x > Q.a && bp.x < Q.b) knots.push_back(bp.x);
    knots.push_back(Q.b);
    double M = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        Vec2 p0{knots[i - 1], g.psi(knots[i - 1])};
        Vec2 p1{knots[i], g.psi(knots[i])};
        sub.boundary.push_back({p0, p1});
        sub.boundary.push_back({{p0.x, p0.y + sub.height}, {p1.x, p1.y + sub.height}});
        M = std::max(M, std::abs((p1.y - p0.y) / (p1.x - p0.x)));
    }
    sub.boundary.push_back({{Q.a, g.psi(Q.a)}, {Q.a, g.psi(Q.a) + sub.height}});
    sub.boundary.push_back({{Q.b, g.psi(Q.b)}, {Q.b, g.psi(Q.b) + sub.height}});
    sub.M = M;
    sub.m = 1;
    sub.C0 = sub.height / Q.len;

    // overlap: the bottom face lies on E; measure it against sigma(Q)
    double bottom = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        double dx = knots[i] - knots[i - 1];
        double dy = g.psi(knots[i]) - g.psi(knots[i - 1]);
        bottom += std::hypot(dx, dy);
    }
    sub.theta = bottom / Q.sigma;
    return sub;
}

bool LipschitzSubdomain::contains(const Vec2& p, const GraphSet& g) const {
    if (p.x <= param_a || p.x >= param_b) return false;
    double base = g.psi(p.x);
    return p.y > base && p.y < base + height;
}

double LipschitzSubdomain::boundary_dist(const Vec2& p) const {
    double best = kInf;
    for (const Segment& s : boundary) best = std::min(best, s.dist_to(p));
    return best;
}

std::vector<WeightedPoint> LipschitzSubdomain::boundary_sample(int count) const {
    double L = 0.0;
    for (const Segment& s : boundary) L += s.length();
    std::vector<WeightedPoint> out;
    double h = L / count;
    double acc = 0.0;
    std::size_t seg = 0;
    double seg_end = boundary[0].length();
    for (int i = 0; i < count; ++i) {
        double target = (i + 0.5) * h;
        while (seg + 1 < boundary.size() && target > seg_end) {
            acc = seg_end;
            ++seg;
            seg_end += boundary[seg].length();
        }
        const Segment& s = boundary[seg];
        double local = std::clamp((target - acc) / std::max(s.length(), 1e-300), 0.0, 1.0);
        out.push_back({s.a + (s.b - s.a) * local, h, target});
    }
    return out;
}

double LipschitzSubdomain::corkscrew_audit(const DyadicGrid& grid, int depth_cap) const {
    const auto& g = static_cast<const GraphSet&>(grid.set());
    double worst = 0.0;
    grid.descendants(q, [&](int id) {
        const DyadicCube& Qp = grid.cube(id);
        if (Qp.k > depth_cap) return;
        double scale = std::min(height * 0.5, Qp.len * 0.5);
        Vec2 y = Qp.center;
        Vec2 Y{y.x, y.y + scale};
        double d = std::min(boundary_dist(Y), g.distance(Y));
        if (d <= 0) {
            worst = kInf;
            return;
        }
        worst = std::max(worst, Qp.len / d);
    });
    return worst;
}

}  // namespace cmelab
