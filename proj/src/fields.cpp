#include "cmelab/fields.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cmelab/parallel.hpp"
#include "cmelab/rng.hpp"

namespace cmelab {

namespace {

std::pair<double, double> zpow(double x, double y, int k) {
    // (x + iy)^k by repeated multiplication
    double re = 1.0, im = 0.0;
    for (int i = 0; i < k; ++i) {
        double nre = re * x - im * y;
        double nim = re * y + im * x;
        re = nre;
        im = nim;
    }
    return {re, im};
}

}  // namespace

ScalarField catalog_field(const std::string& name, const std::vector<double>& params) {
    ScalarField f;
    f.name = name;
    if (name == "coordinate") {
        int axis = params.empty() ? 1 : static_cast<int>(params[0]);
        f.u = [axis](const Vec2& p) { return axis == 0 ? p.x : p.y; };
        f.grad = [axis](const Vec2&) { return axis == 0 ? Vec2{1, 0} : Vec2{0, 1}; };
        f.domain_tag = "plane";
    } else if (name == "re_power" || name == "im_power") {
        int k = params.empty() ? 2 : static_cast<int>(params[0]);
        bool re_part = name == "re_power";
        f.u = [k, re_part](const Vec2& p) {
            auto [re, im] = zpow(p.x, p.y, k);
            return re_part ? re : im;
        };
        f.grad = [k, re_part](const Vec2& p) {
            auto [re, im] = zpow(p.x, p.y, k - 1);
            // d(Re z^k)/dx = k Re z^{k-1}, d/dy = -k Im z^{k-1}
            if (re_part) return Vec2{k * re, -k * im};
            return Vec2{k * im, k * re};
        };
        f.domain_tag = "plane";
    } else if (name == "poisson_interval") {
        double a = params.size() > 0 ? params[0] : -1.0;
        double b = params.size() > 1 ? params[1] : 1.0;
        constexpr double inv_pi = 0.3183098861837907;
        f.u = [a, b, inv_pi](const Vec2& p) {
            return inv_pi * (std::atan2(b - p.x, p.y) - std::atan2(a - p.x, p.y));
        };
        f.grad = [a, b, inv_pi](const Vec2& p) {
            double db = (b - p.x) * (b - p.x) + p.y * p.y;
            double da = (a - p.x) * (a - p.x) + p.y * p.y;
            return Vec2{inv_pi * (p.y / da - p.y / db),
                        inv_pi * ((p.x - b) / db - (p.x - a) / da)};
        };
        f.domain_tag = "upper_half_plane";
    } else if (name == "log_potential") {
        double x0 = params.size() > 0 ? params[0] : 0.0;
        double y0 = params.size() > 1 ? params[1] : -1.0;
        f.u = [x0, y0](const Vec2& p) { return std::log(std::hypot(p.x - x0, p.y - y0)); };
        f.grad = [x0, y0](const Vec2& p) {
            double dx = p.x - x0, dy = p.y - y0;
            double r2 = dx * dx + dy * dy;
            return Vec2{dx / r2, dy / r2};
        };
        f.domain_tag = "plane_minus_pole";
    } else {
        throw std::invalid_argument("catalog_field: unknown name " + name);
    }
    return f;
}

double harmonic_residual(const ScalarField& f, const Vec2& X, double h) {
    double lap = f.u({X.x + h, X.y}) + f.u({X.x - h, X.y}) + f.u({X.x, X.y + h}) +
                 f.u({X.x, X.y - h}) - 4.0 * f.u(X);
    return lap / (h * h);
}

// ---------------------------------------------------------------------------
// Walk on spheres
// ---------------------------------------------------------------------------

DomainOracle complement_oracle(const AmbientSet& set) {
    return {[&set](const Vec2& p) { return set.distance(p); },
            [&set](const Vec2& p) { return set.nearest_point(p); }};
}

DomainOracle region_oracle(const Region& region) {
    const RegionBoundary& rb = region.boundary();
    return {[&rb](const Vec2& p) { return rb.dist(p); },
            [&rb](const Vec2& p) {
                double best = kInf;
                Vec2 arg = p;
                for (const Segment& s : rb.segments) {
                    Vec2 q = s.closest_point(p);
                    double d = dist(p, q);
                    if (d < best) {
                        best = d;
                        arg = q;
                    }
                }
                return arg;
            }};
}

WosResult wos_evaluate(const DomainOracle& dom, const std::function<double(const Vec2&)>& g,
                       const Vec2& X, int budget, double eps_shell, std::uint64_t seed,
                       int step_cap) {
    if (!(eps_shell > 0.0)) throw std::invalid_argument("wos_evaluate: eps_shell must be positive");
    if (!(dom.distance(X) > 0.0)) throw std::invalid_argument("wos_evaluate: X must be interior");
    double sum = 0.0, sumsq = 0.0;
    int kept = 0, excluded = 0;
    for (int i = 0; i < budget; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        Vec2 p = X;
        bool ok = false;
        for (int step = 0; step < step_cap; ++step) {
            double d = dom.distance(p);
            if (d <= eps_shell) {
                ok = true;
                break;
            }
            double theta = rng.uniform(0.0, 6.283185307179586);
            p = {p.x + d * std::cos(theta), p.y + d * std::sin(theta)};
        }
        if (!ok) {
            ++excluded;
            continue;
        }
        double v = g(dom.nearest(p));
        sum += v;
        sumsq += v * v;
        ++kept;
    }
    WosResult res;
    res.budget = budget;
    res.exclusion_rate = static_cast<double>(excluded) / budget;
    if (kept > 0) {
        res.value = sum / kept;
        double var = std::max(0.0, sumsq / kept - res.value * res.value);
        res.stderr_ = std::sqrt(var / kept);
    }
    return res;
}

ScalarField wos_field(const DomainOracle& dom, std::function<double(const Vec2&)> g, int budget,
                      double eps_shell, std::uint64_t seed) {
    ScalarField f;
    f.name = "wos";
    f.domain_tag = "solver";
    auto eval = [dom, g, budget, eps_shell, seed](const Vec2& p) {
        return wos_evaluate(dom, g, p, budget, eps_shell,
                            seed ^ fnv1a(&p, sizeof p))
            .value;
    };
    f.u = eval;
    f.grad = [dom, eval](const Vec2& p) {
        double h = dom.distance(p) / 64.0;
        return Vec2{(eval({p.x + h, p.y}) - eval({p.x - h, p.y})) / (2 * h),
                    (eval({p.x, p.y + h}) - eval({p.x, p.y - h})) / (2 * h)};
    };
    return f;
}

// ---------------------------------------------------------------------------
// Cube data tables
// ---------------------------------------------------------------------------

CubeDataTable CubeDataTable::build(const WhitneyDyadicStructure& s, const ScalarField* G,
                                   const ScalarField* H, int quad_level, int workers) {
    const WhitneyDecomposition& w = s.whitney();
    const DyadicGrid& grid = s.grid();
    double tau = s.params().tau;
    int nw = w.size();
    int mnodes = 1 << quad_level;

    // Per-Whitney-box summaries. The squared-field integral runs over the
    // piece I*(tau) minus the dilates of lower-id touching neighbors: the
    // pieces partition the union, so cube sums equal the region integral.
    // Sups of H run over the dilated node sets plus corners.
    std::vector<double> bI(nw, 0.0), bI_hat(nw, 0.0);
    std::vector<float> hminI(nw, 0.0f), hmaxI(nw, 0.0f), hminIh(nw, 0.0f), hmaxIh(nw, 0.0f);

    auto clip_minus = [](std::vector<Box>& rects, const Box& cut) {
        std::vector<Box> out;
        for (const Box& r : rects) {
            if (!(r.lo.x < cut.hi.x && cut.lo.x < r.hi.x && r.lo.y < cut.hi.y &&
                  cut.lo.y < r.hi.y)) {
                out.push_back(r);
                continue;
            }
            if (r.lo.y < cut.lo.y) out.push_back({r.lo, {r.hi.x, cut.lo.y}});
            if (cut.hi.y < r.hi.y) out.push_back({{r.lo.x, cut.hi.y}, r.hi});
            double mid_lo = std::max(r.lo.y, cut.lo.y), mid_hi = std::min(r.hi.y, cut.hi.y);
            if (r.lo.x < cut.lo.x) out.push_back({{r.lo.x, mid_lo}, {cut.lo.x, mid_hi}});
            if (cut.hi.x < r.hi.x) out.push_back({{cut.hi.x, mid_lo}, {r.hi.x, mid_hi}});
        }
        rects = std::move(out);
    };

    auto integral_pieces = [&](const std::vector<Box>& pieces, double ref_side) {
        double sum = 0.0;
        for (const Box& b : pieces) {
            int nx = std::clamp(static_cast<int>(std::lround(mnodes * b.width() / ref_side)), 1,
                                4 * mnodes);
            int ny = std::clamp(static_cast<int>(std::lround(mnodes * b.height() / ref_side)), 1,
                                4 * mnodes);
            double hx = b.width() / nx, hy = b.height() / ny;
            double part = 0.0;
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix) {
                    double gv = G->u({b.lo.x + (ix + 0.5) * hx, b.lo.y + (iy + 0.5) * hy});
                    part += gv * gv;  // n = 1: dist^{1-n} = 1
                }
            sum += part * hx * hy;
        }
        return sum;
    };
    auto range_over = [&](const Box& b, float& flo, float& fhi) {
        double h = b.width() / mnodes;
        double lo = kInf, hi = -kInf;
        for (int iy = 0; iy < mnodes; ++iy)
            for (int ix = 0; ix < mnodes; ++ix) {
                double hv = H->u({b.lo.x + (ix + 0.5) * h, b.lo.y + (iy + 0.5) * h});
                lo = std::min(lo, hv);
                hi = std::max(hi, hv);
            }
        for (const Vec2& c : {b.lo, b.hi, Vec2{b.lo.x, b.hi.y}, Vec2{b.hi.x, b.lo.y}}) {
            double hv = H->u(c);
            lo = std::min(lo, hv);
            hi = std::max(hi, hv);
        }
        flo = static_cast<float>(lo);
        fhi = static_cast<float>(hi);
    };

    parallel_for(nw, workers, [&](int id) {
        Box plain = w.box(id);
        if (G != nullptr) {
            std::vector<int> lower;
            w.neighbors(id, [&](int nb) {
                if (nb < id) lower.push_back(nb);
            });
            std::vector<Box> thin{plain.dilated(tau)}, fat{plain.dilated(2 * tau)};
            for (int nb : lower) {
                clip_minus(thin, w.box(nb).dilated(tau));
                clip_minus(fat, w.box(nb).dilated(2 * tau));
            }
            bI[id] = integral_pieces(thin, plain.width());
            bI_hat[id] = integral_pieces(fat, plain.width());
        }
        if (H != nullptr) {
            range_over(plain.dilated(tau), hminI[id], hmaxI[id]);
            range_over(plain.dilated(2 * tau), hminIh[id], hmaxIh[id]);
        }
    });

    CubeDataTable table;
    table.s_ = &s;
    table.data_.assign(grid.size(), {});
    parallel_for(grid.size(), workers, [&](int q) {
        CubeData& d = table.data_[q];
        auto fold = [&](int id) {
            d.beta += bI[id];
            d.beta_hat += bI_hat[id];
            d.hmin = std::min(d.hmin, static_cast<double>(hminI[id]));
            d.hmax = std::max(d.hmax, static_cast<double>(hmaxI[id]));
            d.hmin_hat = std::min(d.hmin_hat, static_cast<double>(hminIh[id]));
            d.hmax_hat = std::max(d.hmax_hat, static_cast<double>(hmaxIh[id]));
            ++d.nodes;
        };
        if (s.mode() == StructureMode::adr) {
            s.for_each_w0(q, fold);
        } else {
            for (int id : s.wq(q)) fold(id);
        }
    });
    for (int q = 0; q < grid.size(); ++q)
        if (table.data_[q].nodes == 0)
            throw std::runtime_error("cube_data: empty W_Q at cube id " + std::to_string(q));
    return table;
}

void CubeDataTable::dump_csv(std::ostream& os) const {
    os << "cube,beta,beta_hat,m,m_hat\n";
    char buf[200];
    for (std::size_t q = 0; q < data_.size(); ++q) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", q, data_[q].beta,
                      data_[q].beta_hat, m(static_cast<int>(q)), mhat(static_cast<int>(q)));
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Interior checks
// ---------------------------------------------------------------------------

namespace {

double box_integral(const std::function<double(const Vec2&)>& f, const Box& b, int mnodes) {
    double h = b.width() / mnodes;
    double sum = 0.0;
    for (int iy = 0; iy < mnodes; ++iy)
        for (int ix = 0; ix < mnodes; ++ix)
            sum += f({b.lo.x + (ix + 0.5) * h, b.lo.y + (iy + 0.5) * h});
    return sum * h * h;
}

double box_sup(const std::function<double(const Vec2&)>& f, const Box& b, int mnodes) {
    double h = b.width() / mnodes;
    double best = -kInf;
    for (int iy = 0; iy < mnodes; ++iy)
        for (int ix = 0; ix < mnodes; ++ix)
            best = std::max(best, f({b.lo.x + (ix + 0.5) * h, b.lo.y + (iy + 0.5) * h}));
    for (const Vec2& c : {b.lo, b.hi, Vec2{b.lo.x, b.hi.y}, Vec2{b.hi.x, b.lo.y}})
        best = std::max(best, f(c));
    return best;
}

}  // namespace

double check_interior(const ScalarField& f, const Box& I, InteriorCheck which, double p,
                      int quad_level) {
    int m = 1 << quad_level;
    double side = I.width();
    Box I2 = I.scaled(2.0);
    switch (which) {
        case InteriorCheck::moser: {
            double c = box_integral([&](const Vec2& x) { return f.u(x); }, I, m) / I.area();
            double lhs = box_sup([&](const Vec2& x) { return std::abs(f.u(x) - c); }, I, m);
            double rhs = std::sqrt(box_integral(
                             [&](const Vec2& x) {
                                 double d = f.u(x) - c;
                                 return d * d;
                             },
                             I2, 2 * m) /
                         (side * side));
            if (rhs == 0.0) return 0.0;
            return lhs / rhs;
        }
        case InteriorCheck::reverse_holder: {
            double lhs = std::pow(box_integral([&](const Vec2& x) { return std::pow(f.grad(x).norm(), p); },
                                               I, m) /
                                      (side * side),
                                  1.0 / p);
            double rhs = std::sqrt(
                box_integral([&](const Vec2& x) { return f.grad(x).norm2(); }, I2, 2 * m) /
                (side * side));
            if (rhs == 0.0) return 0.0;
            return lhs / rhs;
        }
        case InteriorCheck::caccioppoli: {
            double lhs = std::sqrt(
                box_integral([&](const Vec2& x) { return f.grad(x).norm2(); }, I, m));
            double rhs = box_sup([&](const Vec2& x) { return std::abs(f.u(x)); }, I2, 2 * m);
            if (rhs == 0.0) return 0.0;
            return lhs / rhs;
        }
    }
    return 0.0;
}

}  // namespace cmelab
