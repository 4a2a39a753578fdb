#include "cmelab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cmelab/rng.hpp"

namespace cmelab {

namespace {

double pow2(int k) { return std::ldexp(1.0, k); }

}  // namespace

DyadicGrid DyadicGrid::build(const AmbientSet& set, int k_min, int k_max, double win_lo,
                             double win_hi) {
    if (k_max - k_min > 24) throw std::invalid_argument("build_grid: k_max - k_min must be <= 24");
    DyadicGrid g;
    g.set_ = &set;

    const SetKind kind = set.kind();
    if (kind == SetKind::flat || kind == SetKind::graph) {
        if (!(win_hi > win_lo)) throw std::invalid_argument("build_grid: graph sets need a window");
        // snap window to the k_min lattice
        double h = pow2(-k_min);
        win_lo = std::floor(win_lo / h) * h;
        win_hi = std::ceil(win_hi / h) * h;
    } else if (kind == SetKind::polygon) {
        const auto& poly = static_cast<const PolygonSet&>(set);
        double P = poly.perimeter();
        int k_root = -static_cast<int>(std::ceil(std::log2(P)));
        k_min = std::max(k_min, k_root);
        if (pow2(-k_min) < P && k_min == k_root) k_min = k_root;  // single-root convention
        win_lo = 0.0;
        win_hi = P;
    } else {  // four_corners
        const auto& fc = static_cast<const FourCornersSet&>(set);
        k_min = std::max(k_min, 0);
        k_max = std::min(k_max, 2 * fc.level());
        win_lo = 0.0;
        win_hi = static_cast<double>(fc.num_cells());
    }
    g.k_min_ = k_min;
    g.k_max_ = k_max;
    g.gen_begin_.assign(k_max - k_min + 2, 0);

    if (kind == SetKind::flat || kind == SetKind::graph) {
        const auto& graph = static_cast<const GraphSet&>(set);
        for (int k = k_min; k <= k_max; ++k) {
            g.gen_begin_[k - k_min] = static_cast<int>(g.cubes_.size());
            double len = pow2(-k);
            std::int64_t j0 = static_cast<std::int64_t>(std::llround(win_lo / len));
            std::int64_t j1 = static_cast<std::int64_t>(std::llround(win_hi / len));
            for (std::int64_t j = j0; j < j1; ++j) {
                DyadicCube c;
                c.k = k;
                c.j = j;
                c.a = j * len;
                c.b = (j + 1) * len;
                c.len = len;
                c.center = graph.point_at((c.a + c.b) * 0.5);
                c.r_ball = len * 0.25;
                c.sigma = graph.arclength_in_ball(c.center, 1e9, c.a, c.b);  // full arclength
                c.bbox = graph.bbox_param(c.a, c.b);
                g.cubes_.push_back(c);
            }
        }
    } else if (kind == SetKind::polygon) {
        const auto& poly = static_cast<const PolygonSet&>(set);
        double P = poly.perimeter();
        for (int k = k_min; k <= k_max; ++k) {
            g.gen_begin_[k - k_min] = static_cast<int>(g.cubes_.size());
            double len = pow2(-k);
            std::int64_t nj = static_cast<std::int64_t>(std::ceil(P / len - 1e-12));
            for (std::int64_t j = 0; j < nj; ++j) {
                DyadicCube c;
                c.k = k;
                c.j = j;
                c.a = j * len;
                c.b = std::min((j + 1) * len, P);
                c.len = len;
                double mid = (c.a + c.b) * 0.5;
                c.center = poly.point_at(mid);
                c.sigma = c.b - c.a;  // arclength parameterization
                c.bbox = poly.bbox_param(c.a, c.b);
                // largest rho = len/2^m (m=2..8) with Delta(x_Q, 2 rho) inside Q
                c.r_ball = 0.0;
                for (int m = 2; m <= 8; ++m) {
                    double rho = len * std::ldexp(1.0, -m);
                    double inside = poly.arclength_in_ball(c.center, 2.0 * rho, c.a, c.b);
                    double total = poly.measure_ball(c.center, 2.0 * rho);
                    if (c.b - c.a >= P - 1e-12 || inside >= total - 1e-12) {
                        c.r_ball = rho;
                        break;
                    }
                }
                if (c.r_ball == 0.0) c.r_ball = len / 256.0;
                g.cubes_.push_back(c);
            }
        }
    } else {
        const auto& fc = static_cast<const FourCornersSet&>(set);
        std::int64_t ncells = fc.num_cells();
        for (int k = k_min; k <= k_max; ++k) {
            g.gen_begin_[k - k_min] = static_cast<int>(g.cubes_.size());
            double len = pow2(-k);
            // generation k holds level-d squares: d = ceil(k/2)
            int d = (k + 1) / 2;
            std::int64_t nsq = 1;
            for (int i = 0; i < d; ++i) nsq *= 4;
            std::int64_t span = ncells / nsq;
            double side = std::pow(0.25, d);
            for (std::int64_t j = 0; j < nsq; ++j) {
                DyadicCube c;
                c.k = k;
                c.j = j;
                c.a = static_cast<double>(j * span);
                c.b = static_cast<double>((j + 1) * span);
                c.len = len;
                std::int64_t mid = j * span + span / 2;
                if (span == 1) mid = j * span;
                Vec2 o = fc.cell_origin(mid);
                c.center = {o.x + fc.cell_side() * 0.5, o.y + fc.cell_side() * 0.5};
                c.r_ball = side * 0.25;
                c.sigma = static_cast<double>(span) / static_cast<double>(ncells);
                c.bbox = fc.bbox_cells(j * span, (j + 1) * span);
                g.cubes_.push_back(c);
            }
        }
    }
    g.gen_begin_[k_max - k_min + 1] = static_cast<int>(g.cubes_.size());

    // Parent / child links. Children of a generation-k cube are exactly the
    // generation-(k+1) cubes whose member range nests inside.
    for (int k = k_min; k < k_max; ++k) {
        auto [b0, e0] = g.generation(k);
        auto [b1, e1] = g.generation(k + 1);
        int child = b1;
        for (int id = b0; id < e0; ++id) {
            DyadicCube& q = g.cubes_[id];
            while (child < e1 && g.cubes_[child].a < q.a) ++child;
            q.child_begin = child;
            int c = child;
            while (c < e1 && g.cubes_[c].b <= q.b + 1e-12 && g.cubes_[c].a >= q.a - 1e-12) {
                g.cubes_[c].parent = id;
                ++c;
            }
            q.child_end = c;
            child = c;
        }
    }
    return g;
}

std::pair<int, int> DyadicGrid::generation(int k) const {
    if (k < k_min_ || k > k_max_) return {0, 0};
    return {gen_begin_[k - k_min_], gen_begin_[k - k_min_ + 1]};
}

std::vector<int> DyadicGrid::top_cubes() const {
    auto [b, e] = generation(k_min_);
    std::vector<int> out;
    for (int i = b; i < e; ++i) out.push_back(i);
    return out;
}

int DyadicGrid::parent(int id) const {
    int p = cubes_[id].parent;
    if (p < 0) throw std::runtime_error("parent of a top-generation cube");
    return p;
}

void DyadicGrid::descendants(int id, const std::function<void(int)>& fn) const {
    fn(id);
    const DyadicCube& q = cubes_[id];
    for (int c = q.child_begin; c < q.child_end; ++c) descendants(c, fn);
}

bool DyadicGrid::is_descendant(int id, int ancestor) const {
    const DyadicCube& q = cubes_[id];
    const DyadicCube& a = cubes_[ancestor];
    return q.k >= a.k && q.a >= a.a - 1e-12 && q.b <= a.b + 1e-12;
}

int DyadicGrid::find(int k, double t) const {
    auto [b, e] = generation(k);
    if (b == e) return -1;
    // cubes ordered by a; binary search
    int lo = b, hi = e - 1;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (cubes_[mid].a <= t)
            lo = mid;
        else
            hi = mid - 1;
    }
    return (t >= cubes_[lo].a && t < cubes_[lo].b) ? lo : -1;
}

std::pair<int, int> DyadicGrid::leaf_span(int id) const {
    const DyadicCube& q = cubes_[id];
    auto [b, e] = generation(k_max_);
    int lo = b, hi = e;
    // binary search leaf range [q.a, q.b)
    int l = b, r = e;
    while (l < r) {
        int mid = (l + r) / 2;
        if (cubes_[mid].a < q.a - 1e-12)
            l = mid + 1;
        else
            r = mid;
    }
    lo = l;
    l = b;
    r = e;
    while (l < r) {
        int mid = (l + r) / 2;
        if (cubes_[mid].a < q.b - 1e-12)
            l = mid + 1;
        else
            r = mid;
    }
    hi = l;
    return {lo, hi};
}

double DyadicGrid::dist_to_box(int id, const Box& b) const {
    const DyadicCube& q = cubes_[id];
    switch (set_->kind()) {
        case SetKind::flat:
        case SetKind::graph:
            return static_cast<const GraphSet&>(*set_).distance_box_param(b, q.a, q.b);
        case SetKind::polygon:
            return static_cast<const PolygonSet&>(*set_).distance_box_param(b, q.a, q.b);
        case SetKind::four_corners:
            return static_cast<const FourCornersSet&>(*set_).distance_box_cells(
                b, static_cast<std::int64_t>(q.a), static_cast<std::int64_t>(q.b));
    }
    return kInf;
}

bool DyadicGrid::surface_ball_inside(int id, double rho) const {
    const DyadicCube& q = cubes_[id];
    double total = set_->measure_ball(q.center, rho);
    double inside = 0.0;
    switch (set_->kind()) {
        case SetKind::flat:
        case SetKind::graph:
            inside = static_cast<const GraphSet&>(*set_).arclength_in_ball(q.center, rho, q.a, q.b);
            break;
        case SetKind::polygon:
            inside = static_cast<const PolygonSet&>(*set_).arclength_in_ball(q.center, rho, q.a, q.b);
            break;
        case SetKind::four_corners:
            inside = static_cast<const FourCornersSet&>(*set_).measure_ball_cells(
                q.center, rho, static_cast<std::int64_t>(q.a), static_cast<std::int64_t>(q.b));
            break;
    }
    return inside >= total * (1.0 - 1e-9) - 1e-15;
}

double DyadicGrid::cube_ball_C(int id) const {
    const DyadicCube& q = cubes_[id];
    double far = q.bbox.max_dist_to(q.center);
    return far / q.r_ball;
}

void DyadicGrid::dump_csv(std::ostream& os) const {
    os << "k,j,xq_x,xq_y,r_ball,parent_k,parent_j\n";
    char buf[256];
    for (const DyadicCube& q : cubes_) {
        if (q.parent >= 0) {
            const DyadicCube& p = cubes_[q.parent];
            std::snprintf(buf, sizeof buf, "%d,%lld,%.17g,%.17g,%.17g,%d,%lld\n", q.k,
                          static_cast<long long>(q.j), q.center.x, q.center.y, q.r_ball, p.k,
                          static_cast<long long>(p.j));
        } else {
            std::snprintf(buf, sizeof buf, "%d,%lld,%.17g,%.17g,%.17g,,\n", q.k,
                          static_cast<long long>(q.j), q.center.x, q.center.y, q.r_ball);
        }
        os << buf;
    }
}

std::uint64_t DyadicGrid::geometry_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const DyadicCube& q : cubes_) {
        h = fnv1a(&q.k, sizeof q.k, h);
        h = fnv1a(&q.j, sizeof q.j, h);
        h = fnv1a(&q.center, sizeof q.center, h);
    }
    return h;
}

double thin_boundary_ratio(const DyadicGrid& grid, int id, double rho, int nodes) {
    const DyadicCube& q = grid.cube(id);
    const AmbientSet& set = grid.set();
    double thresh = rho * q.len;
    double hit = 0.0, total = 0.0;
    if (set.kind() == SetKind::four_corners) {
        const auto& fc = static_cast<const FourCornersSet&>(set);
        std::int64_t lo = static_cast<std::int64_t>(q.a), hi = static_cast<std::int64_t>(q.b);
        std::int64_t span = hi - lo;
        std::int64_t stride = std::max<std::int64_t>(1, span / nodes);
        for (std::int64_t i = lo; i < hi; i += stride) {
            Vec2 o = fc.cell_origin(i);
            Vec2 p{o.x + fc.cell_side() * 0.5, o.y + fc.cell_side() * 0.5};
            double d = fc.distance_cells_complement(p, lo, hi);
            total += 1.0;
            if (d <= thresh) hit += 1.0;
        }
        return total > 0 ? hit / total : 0.0;
    }
    double h = (q.b - q.a) / nodes;
    for (int i = 0; i < nodes; ++i) {
        double t = q.a + (i + 0.5) * h;
        Vec2 p = set.point_at(t);
        double d, w = h;
        if (set.kind() == SetKind::polygon) {
            d = static_cast<const PolygonSet&>(set).distance_param_complement(p, q.a, q.b);
        } else {
            const auto& g = static_cast<const GraphSet&>(set);
            d = g.distance_param_complement(p, q.a, q.b);
            double eps = h * 1e-3;
            double slope = (g.psi(t + eps) - g.psi(t - eps)) / (2 * eps);
            w = h * std::sqrt(1.0 + slope * slope);
        }
        total += w;
        if (d <= thresh) hit += w;
    }
    return total > 0 ? hit / total : 0.0;
}

std::vector<double> dyadic_maximal(const DyadicGrid& grid, int q0, const std::vector<double>& leaf_values,
                                   double p) {
    if (!(p > 0)) throw std::invalid_argument("dyadic_maximal: p must be positive");
    auto [l0, l1] = grid.leaf_span(q0);
    int nl = l1 - l0;
    if (nl <= 0 || static_cast<int>(leaf_values.size()) != nl)
        throw std::invalid_argument("dyadic_maximal: leaf value count mismatch");
    std::vector<double> out(nl, 0.0);
    // one bottom-up sweep for the |f|^p masses, one top-down for running maxima
    std::vector<double> mass(grid.size(), 0.0), sig(grid.size(), 0.0);
    std::function<void(int)> up = [&](int id) {
        const DyadicCube& q = grid.cube(id);
        if (q.k == grid.kmax()) {
            mass[id] = std::pow(std::abs(leaf_values[id - l0]), p) * q.sigma;
            sig[id] = q.sigma;
            return;
        }
        auto [cb, ce] = grid.children(id);
        for (int c = cb; c < ce; ++c) {
            up(c);
            mass[id] += mass[c];
            sig[id] += sig[c];
        }
    };
    std::function<void(int, double)> down = [&](int id, double best) {
        double avg = sig[id] > 0 ? std::pow(mass[id] / sig[id], 1.0 / p) : 0.0;
        best = std::max(best, avg);
        const DyadicCube& q = grid.cube(id);
        if (q.k == grid.kmax()) {
            out[id - l0] = best;
            return;
        }
        auto [cb, ce] = grid.children(id);
        for (int c = cb; c < ce; ++c) down(c, best);
    };
    up(q0);
    down(q0, 0.0);
    return out;
}

NetGrid build_net_grid(const std::vector<WeightedPoint>& points, int k_min, int k_max) {
    NetGrid g;
    auto less_lex = [&](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    };
    std::vector<int> prev_assign(points.size(), -1);
    for (int k = k_min; k <= k_max; ++k) {
        g.gen_begin.push_back(static_cast<int>(g.cubes.size()));
        double sep = pow2(-k);
        // greedy net in input order
        std::vector<int> net;
        for (std::size_t i = 0; i < points.size(); ++i) {
            bool ok = true;
            for (int nidx : net)
                if (dist(points[i].p, points[nidx].p) < sep) {
                    ok = false;
                    break;
                }
            if (ok) net.push_back(static_cast<int>(i));
        }
        int base = static_cast<int>(g.cubes.size());
        for (int nidx : net) g.cubes.push_back({k, points[nidx].p, {}, -1});
        // assign each sample to nearest net point, lexicographic tie-break
        std::vector<int> assign(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best = -1;
            double bd = kInf;
            for (std::size_t n = 0; n < net.size(); ++n) {
                double d = dist(points[i].p, points[net[n]].p);
                const Vec2& cand = points[net[n]].p;
                if (d < bd - 1e-15 ||
                    (std::abs(d - bd) <= 1e-15 && best >= 0 &&
                     less_lex(cand, g.cubes[base + best].net_point))) {
                    bd = d;
                    best = static_cast<int>(n);
                }
            }
            assign[i] = best;
            g.cubes[base + best].members.push_back(static_cast<int>(i));
            // Christ hierarchy: parent of this sample's fine cube = its coarse cube
            if (k > k_min) g.cubes[base + best].parent = prev_assign[i] >= 0 ? prev_assign[i] : -1;
        }
        for (std::size_t i = 0; i < points.size(); ++i)
            prev_assign[i] = base + assign[i];
    }
    g.gen_begin.push_back(static_cast<int>(g.cubes.size()));
    return g;
}

}  // namespace cmelab
