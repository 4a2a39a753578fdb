#include "cmelab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cmelab/rng.hpp"

namespace cmelab {

std::string BallFamily::describe() const {
    std::ostringstream os;
    os << centers.size() << " centers x " << radii.size() << " dyadic radii";
    if (!radii.empty()) os << " in [" << radii.front() << "," << radii.back() << "]";
    return os.str();
}

BallFamily make_ball_family(const AmbientSet& set, int ncenters, double r_lo, double r_hi,
                            double param_lo, double param_hi) {
    BallFamily fam;
    auto pts = set.sample_points(ncenters, param_lo, param_hi);
    for (const auto& wp : pts) fam.centers.push_back(wp.p);
    for (double r = r_lo; r <= r_hi * (1.0 + 1e-12); r *= 2.0) fam.radii.push_back(r);
    return fam;
}

namespace {

// Polar midpoint quadrature of F2(Y) * dist(Y,E) over B(x,r) cap Omega, n = 1.
double ball_carleson_integral(const std::function<double(const Vec2&)>& F2, const AmbientSet& set,
                              DomainMode domain, const Vec2& x, double r, int quad_level,
                              int* nodes_out) {
    int n_theta = 1 << quad_level;       // angular nodes
    int n_rho = std::max(16, n_theta / 4);
    double sum = 0.0;
    double h_t = 6.283185307179586 / n_theta;
    double h_r = r / n_rho;
    for (int i = 0; i < n_rho; ++i) {
        double rho = (i + 0.5) * h_r;
        for (int j = 0; j < n_theta; ++j) {
            double th = (j + 0.5) * h_t;
            Vec2 p{x.x + rho * std::cos(th), x.y + rho * std::sin(th)};
            if (!set.in_domain(p, domain)) continue;
            sum += F2(p) * set.distance(p) * rho;
        }
    }
    if (nodes_out) *nodes_out += n_rho * n_theta;
    return sum * h_t * h_r;
}

}  // namespace

FunctionalResult cme(const std::function<double(const Vec2&)>& F2, const AmbientSet& set,
                     DomainMode domain, const BallFamily& family, int quad_level) {
    FunctionalResult res;
    res.name = "cme";
    res.family = family.describe();
    for (const Vec2& x : family.centers) {
        for (double r : family.radii) {
            double v = ball_carleson_integral(F2, set, domain, x, r, quad_level,
                                              &res.quadrature_nodes) /
                       r;  // n = 1
            if (v > res.value) {
                res.value = v;
                res.witness = {x, r, -1};
            }
        }
    }
    return res;
}

FunctionalResult cme0(const std::function<double(const Vec2&)>& F2, const AmbientSet& set,
                      const std::vector<Vec2>& samples, int quad_level) {
    FunctionalResult res;
    res.name = "cme0";
    int n_theta = 1 << quad_level;
    int n_rho = std::max(8, n_theta / 4);
    for (const Vec2& X : samples) {
        double d = set.distance(X);
        if (!(d > 0.0)) continue;
        double R = d * 0.5;
        double sum = 0.0;
        double h_t = 6.283185307179586 / n_theta, h_r = R / n_rho;
        for (int i = 0; i < n_rho; ++i) {
            double rho = (i + 0.5) * h_r;
            for (int j = 0; j < n_theta; ++j) {
                double th = (j + 0.5) * h_t;
                sum += F2({X.x + rho * std::cos(th), X.y + rho * std::sin(th)}) * rho;
            }
        }
        res.quadrature_nodes += n_rho * n_theta;
        double v = sum * h_t * h_r;  // n = 1: dist(X)^{1-n} = 1
        if (v > res.value) {
            res.value = v;
            res.witness = {X, R, -1};
        }
    }
    return res;
}

BallFamily witness_balls(const AmbientSet& set, const std::vector<Vec2>& samples) {
    BallFamily fam;
    for (const Vec2& X : samples) {
        double d = set.distance(X);
        if (!(d > 0.0)) continue;
        fam.centers.push_back(set.nearest_point(X));
        fam.radii.push_back(1.5 * d);
    }
    return fam;
}

FunctionalResult cme_dyadic(const CubeDataTable& table, std::vector<double>* per_cube) {
    const DyadicGrid& grid = table.structure().grid();
    FunctionalResult res;
    res.name = "cme_dyadic";
    std::vector<double> sums(grid.size(), 0.0);
    // bottom-up accumulation of sum_{Q' <= Q} sigma(Q') beta(Q')
    for (int k = grid.kmax(); k >= grid.kmin(); --k) {
        auto [b, e] = grid.generation(k);
        for (int id = b; id < e; ++id) {
            sums[id] += grid.cube(id).sigma * table.beta(id);
            auto [cb, ce] = grid.children(id);
            for (int c = cb; c < ce; ++c) sums[id] += sums[c];
        }
    }
    for (int id = 0; id < grid.size(); ++id) {
        double v = sums[id] / grid.cube(id).sigma;
        if (v > res.value) {
            res.value = v;
            res.witness = {grid.cube(id).center, grid.cube(id).len, id};
        }
    }
    if (per_cube) *per_cube = std::move(sums);
    return res;
}

std::vector<double> area_sq_leaves(const CubeDataTable& table, int q, bool fat) {
    const DyadicGrid& grid = table.structure().grid();
    auto [l0, l1] = grid.leaf_span(q);
    std::vector<double> out(l1 - l0, 0.0);
    // DFS carrying the running ancestor sum
    std::function<void(int, double)> walk = [&](int id, double acc) {
        acc += fat ? table.beta_hat(id) : table.beta(id);
        auto [cb, ce] = grid.children(id);
        if (grid.cube(id).k == grid.kmax()) {
            out[id - l0] = acc;
            return;
        }
        for (int c = cb; c < ce; ++c) walk(c, acc);
    };
    walk(q, 0.0);
    return out;
}

std::vector<double> ntmax_leaves(const CubeDataTable& table, int q, bool fat, double shift) {
    const DyadicGrid& grid = table.structure().grid();
    auto [l0, l1] = grid.leaf_span(q);
    std::vector<double> out(l1 - l0, 0.0);
    std::function<void(int, double, double)> walk = [&](int id, double lo, double hi) {
        const CubeData& d = table.at(id);
        if (fat) {
            lo = std::min(lo, d.hmin_hat);
            hi = std::max(hi, d.hmax_hat);
        } else {
            lo = std::min(lo, d.hmin);
            hi = std::max(hi, d.hmax);
        }
        if (grid.cube(id).k == grid.kmax()) {
            out[id - l0] = std::max(hi - shift, shift - lo);
            return;
        }
        auto [cb, ce] = grid.children(id);
        for (int c = cb; c < ce; ++c) walk(c, lo, hi);
    };
    walk(q, kInf, -kInf);
    return out;
}

TradFunctionals trad_functionals(const ScalarField& u, const AmbientSet& set, DomainMode domain,
                                 const Vec2& x, double kappa, double r, int n_rho, int n_theta) {
    TradFunctionals out;
    double h_t = 6.283185307179586 / n_theta, h_r = r / n_rho;
    double S2 = 0.0, A2 = 0.0, N = 0.0;
    for (int i = 0; i < n_rho; ++i) {
        double rho = (i + 0.5) * h_r;
        for (int j = 0; j < n_theta; ++j) {
            double th = (j + 0.5) * h_t;
            Vec2 p{x.x + rho * std::cos(th), x.y + rho * std::sin(th)};
            if (!set.in_domain(p, domain)) continue;
            double d = set.distance(p);
            if (rho > (1.0 + kappa) * d) continue;
            double w = rho * h_t * h_r;  // n = 1: dist^{1-n} = 1
            S2 += u.grad(p).norm2() * w;
            A2 += u.u(p) * u.u(p) * w;
            N = std::max(N, std::abs(u.u(p)));
            ++out.nodes;
        }
    }
    // axis rays so exact cone tips participate in the sup
    for (int i = 0; i <= n_rho; ++i) {
        double rho = i * h_r;
        for (double th : {1.5707963267948966, 0.7853981633974483, 2.356194490192345}) {
            Vec2 p{x.x + rho * std::cos(th), x.y + rho * std::sin(th)};
            if (rho == 0.0 || !set.in_domain(p, domain)) continue;
            if (rho > (1.0 + kappa) * set.distance(p)) continue;
            N = std::max(N, std::abs(u.u(p)));
        }
    }
    out.S = std::sqrt(S2);
    out.A = std::sqrt(A2);
    out.N = N;
    return out;
}

ApertureRatios aperture_ratio(const ScalarField& u, const AmbientSet& set, DomainMode domain,
                              double kappa1, double kappa2, double q,
                              const std::vector<Vec2>& samples, double r) {
    double n1 = 0.0, n2 = 0.0, a1 = 0.0, a2 = 0.0;
    for (const Vec2& x : samples) {
        TradFunctionals f1 = trad_functionals(u, set, domain, x, kappa1, r);
        TradFunctionals f2 = trad_functionals(u, set, domain, x, kappa2, r);
        n1 += std::pow(f1.N, q);
        n2 += std::pow(f2.N, q);
        a1 += std::pow(f1.A, q);
        a2 += std::pow(f2.A, q);
    }
    ApertureRatios out;
    if (n2 > 0) out.n_ratio_12 = std::pow(n1 / n2, 1.0 / q);
    if (n1 > 0) out.n_ratio_21 = std::pow(n2 / n1, 1.0 / q);
    if (a2 > 0) out.a_ratio = std::pow(a1 / a2, 1.0 / q);
    return out;
}

// ---------------------------------------------------------------------------
// eps-approximability
// ---------------------------------------------------------------------------

EpsApproxReport eps_approx_check_piecewise(const ScalarField& u, const WhitneyDecomposition& w,
                                           const std::vector<double>& phi_values,
                                           const AmbientSet& set, DomainMode domain, double eps,
                                           const BallFamily& family,
                                           const std::vector<Vec2>& interior_samples) {
    if (static_cast<int>(phi_values.size()) != w.size())
        throw std::invalid_argument("eps_approx_check_piecewise: need one value per Whitney cube");
    EpsApproxReport rep;
    rep.eps = eps;
    for (const Vec2& X : interior_samples) {
        int id = w.containing_cube(X);
        if (id < 0) continue;
        rep.sup_gap = std::max(rep.sup_gap, std::abs(u.u(X) - phi_values[id]));
    }
    // |grad phi| is a measure on interior faces: |jump| x face length. For each
    // ball, accumulate jump mass of faces inside.
    for (const Vec2& x : family.centers) {
        for (double r : family.radii) {
            double mass = 0.0;
            Box query{{x.x - r, x.y - r}, {x.x + r, x.y + r}};
            auto [e0, e1] = w.scale_exp_range();
            w.for_cubes_near(query, e0, e1, [&](int id) {
                Box bi = w.box(id);
                w.neighbors(id, [&](int nb) {
                    if (nb < id) return;  // each face once
                    Box bj = w.box(nb);
                    // shared face: overlap segment of the touching edges
                    double jump = std::abs(phi_values[id] - phi_values[nb]);
                    if (jump == 0.0) return;
                    double lox = std::max(bi.lo.x, bj.lo.x), hix = std::min(bi.hi.x, bj.hi.x);
                    double loy = std::max(bi.lo.y, bj.lo.y), hiy = std::min(bi.hi.y, bj.hi.y);
                    double len = 0.0;
                    Vec2 mid;
                    if (std::abs(lox - hix) < 1e-14 && hiy > loy) {
                        len = hiy - loy;
                        mid = {lox, (loy + hiy) * 0.5};
                    } else if (std::abs(loy - hiy) < 1e-14 && hix > lox) {
                        len = hix - lox;
                        mid = {(lox + hix) * 0.5, loy};
                    }
                    if (len <= 0.0 || dist(mid, x) > r) return;
                    if (!set.in_domain(mid, domain)) return;
                    mass += jump * len;
                });
            });
            rep.c_eps = std::max(rep.c_eps, mass / r);
        }
    }
    rep.verdict = rep.sup_gap < eps;
    return rep;
}

EpsApproxReport eps_approx_check(const ScalarField& u, const ScalarField& phi,
                                 const AmbientSet& set, DomainMode domain, double eps,
                                 const BallFamily& family, const std::vector<Vec2>& interior_samples,
                                 int quad_level) {
    EpsApproxReport rep;
    rep.eps = eps;
    for (const Vec2& X : interior_samples)
        rep.sup_gap = std::max(rep.sup_gap, std::abs(u.u(X) - phi.u(X)));
    int n_theta = 1 << quad_level;
    int n_rho = std::max(16, n_theta / 4);
    for (const Vec2& x : family.centers) {
        for (double r : family.radii) {
            double sum = 0.0;
            double h_t = 6.283185307179586 / n_theta, h_r = r / n_rho;
            for (int i = 0; i < n_rho; ++i) {
                double rho = (i + 0.5) * h_r;
                for (int j = 0; j < n_theta; ++j) {
                    double th = (j + 0.5) * h_t;
                    Vec2 p{x.x + rho * std::cos(th), x.y + rho * std::sin(th)};
                    if (!set.in_domain(p, domain)) continue;
                    sum += phi.grad(p).norm() * rho;
                }
            }
            rep.c_eps = std::max(rep.c_eps, sum * h_t * h_r / r);
        }
    }
    rep.verdict = rep.sup_gap < eps;
    return rep;
}

// ---------------------------------------------------------------------------
// Riesz probe
// ---------------------------------------------------------------------------

namespace {

// (1/pi) x/|x|^2 with the quintic smoothstep cutoff Phi(|x|/eps) on [1,2];
// the 1/pi normalization makes the flat-line operator norm exactly 1.
Vec2 riesz_kernel(const Vec2& d, double eps) {
    double r = d.norm();
    if (r <= eps) return {0.0, 0.0};
    double cut = 1.0;
    double rho = r / eps;
    if (rho < 2.0) {
        double s = rho - 1.0;
        cut = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    }
    double scale = cut / (3.141592653589793 * r * r);
    return {d.x * scale, d.y * scale};
}

}  // namespace

Vec2 riesz_apply_at(const std::vector<WeightedPoint>& samples, const std::vector<double>& f,
                    double eps, std::size_t index) {
    const Vec2 x = samples[index].p;
    double sx = 0.0, sy = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        if (j == index) continue;
        Vec2 k = riesz_kernel(x - samples[j].p, eps);
        double w = f[j] * samples[j].w;
        sx += k.x * w;
        sy += k.y * w;
    }
    return {sx, sy};
}

RieszProbe riesz_probe(const AmbientSet& set, const std::vector<WeightedPoint>& samples,
                       const std::vector<double>& f, const std::vector<double>& eps_list,
                       int ensemble, std::uint64_t seed) {
    (void)set;
    const std::size_t n = samples.size();
    if (f.size() != n) throw std::invalid_argument("riesz_probe: sample/f size mismatch");
    double min_gap = kInf;
    for (std::size_t i = 1; i < n; ++i) min_gap = std::min(min_gap, dist(samples[i].p, samples[i - 1].p));
    RieszProbe out;
    std::vector<std::vector<double>> fs;
    fs.push_back(f);
    for (int e = 0; e < ensemble; ++e) {
        RngStream rng(seed, 100 + e);
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
        fs.push_back(std::move(g));
    }
    for (double eps : eps_list) {
        if (eps < min_gap)
            throw std::invalid_argument("riesz_probe: eps below the sample spacing");
        double best = 0.0;
        for (const auto& g : fs) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                Vec2 t = riesz_apply_at(samples, g, eps, i);
                num += (t.x * t.x + t.y * t.y) * samples[i].w;
                den += g[i] * g[i] * samples[i].w;
            }
            if (den > 0) best = std::max(best, std::sqrt(num / den));
        }
        out.eps.push_back(eps);
        out.norm_estimate.push_back(best);
        out.sup_norm = std::max(out.sup_norm, best);
    }
    return out;
}

}  // namespace cmelab
