#include "cmelab/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmelab {

namespace {

double leaf_lq_norm(const DyadicGrid& grid, int q0, const std::vector<double>& vals, double q) {
    auto [l0, l1] = grid.leaf_span(q0);
    double sum = 0.0;
    for (int l = l0; l < l1; ++l) sum += std::pow(std::abs(vals[l - l0]), q) * grid.cube(l).sigma;
    return std::pow(sum, 1.0 / q);
}

}  // namespace

LevelSetFamily maximal_cubes(const DyadicGrid& grid, int q0, const std::function<bool(int)>& pred,
                             double alpha) {
    LevelSetFamily fam;
    fam.alpha = alpha;
    std::function<void(int)> walk = [&](int id) {
        if (pred(id)) {
            fam.cubes.push_back(id);
            fam.covered_sigma += grid.cube(id).sigma;
            return;
        }
        auto [cb, ce] = grid.children(id);
        for (int c = cb; c < ce; ++c) walk(c);
    };
    walk(q0);
    return fam;
}

LevelSetFamily maximal_cubes_values(const DyadicGrid& grid, int q0,
                                    const std::vector<double>& leaf_values, double alpha) {
    auto [l0, l1] = grid.leaf_span(q0);
    if (static_cast<int>(leaf_values.size()) != l1 - l0)
        throw std::invalid_argument("maximal_cubes_values: leaf count mismatch");
    // a cube qualifies iff every leaf below exceeds alpha
    return maximal_cubes(
        grid, q0,
        [&](int id) {
            auto [a, b] = grid.leaf_span(id);
            if (a == b) return false;
            for (int l = a; l < b; ++l)
                if (!(leaf_values[l - l0] > alpha)) return false;
            return true;
        },
        alpha);
}

LevelSetFamily maximal_cubes_density(const DyadicGrid& grid, int q0,
                                     const std::vector<char>& leaf_in, double beta) {
    auto [l0, l1] = grid.leaf_span(q0);
    if (static_cast<int>(leaf_in.size()) != l1 - l0)
        throw std::invalid_argument("maximal_cubes_density: leaf count mismatch");
    return maximal_cubes(
        grid, q0,
        [&](int id) {
            if (id == q0) return false;  // proper subcubes per the stopping argument
            auto [a, b] = grid.leaf_span(id);
            double in = 0.0, tot = 0.0;
            for (int l = a; l < b; ++l) {
                tot += grid.cube(l).sigma;
                if (leaf_in[l - l0]) in += grid.cube(l).sigma;
            }
            return tot > 0 && in / tot > beta;
        },
        beta);
}

// ---------------------------------------------------------------------------
// John-Nirenberg
// ---------------------------------------------------------------------------

double jn_constant(double alpha, double p) {
    return p / alpha * std::pow(1.0 / std::log(1.0 / alpha), p) * std::tgamma(p);
}

namespace {

JnCertificate jn_core(const DyadicGrid& grid, int q0,
                      const std::function<double(int)>& beta_of, double alpha, double p,
                      double n_cap) {
    JnCertificate cert;
    cert.alpha = alpha;
    cert.p = p;
    cert.c_alpha_p = jn_constant(alpha, p);

    // per-Q distributions of A^Q on its leaves; collect them once
    struct QData {
        int q;
        std::vector<double> a;       // A^Q per leaf
        std::vector<double> sigma;   // leaf measures
        double sigma_q;
    };
    std::vector<QData> qs;
    // enumerate all cubes under q0
    grid.descendants(q0, [&](int q) {
        QData d;
        d.q = q;
        auto [a0, a1] = grid.leaf_span(q);
        d.a.assign(a1 - a0, 0.0);
        d.sigma.assign(a1 - a0, 0.0);
        d.sigma_q = grid.cube(q).sigma;
        std::function<void(int, double)> walk = [&](int id, double acc) {
            acc += beta_of(id);
            if (grid.cube(id).k == grid.kmax()) {
                d.a[id - a0] = std::sqrt(acc);
                d.sigma[id - a0] = grid.cube(id).sigma;
                return;
            }
            auto [cb, ce] = grid.children(id);
            for (int c = cb; c < ce; ++c) walk(c, acc);
        };
        walk(q, 0.0);
        qs.push_back(std::move(d));
    });

    auto hypothesis_holds = [&](double N) {
        for (const QData& d : qs) {
            double bad = 0.0;
            for (std::size_t i = 0; i < d.a.size(); ++i)
                if (d.a[i] > N) bad += d.sigma[i];
            if (bad > alpha * d.sigma_q + 1e-15) return false;
        }
        return true;
    };

    double N = std::ldexp(1.0, -40);
    while (N <= n_cap && !hypothesis_holds(N)) N *= 2.0;
    if (N > n_cap) throw std::runtime_error("jn_certify: hypothesis unsatisfiable below the N cap");
    cert.n_meas = N;

    // Xi(t) on a t grid and the exponential bound with the proof constant
    double rate = std::log(1.0 / alpha) / N;
    for (int j = 0; j <= 40; ++j) {
        double t = j * N / 4.0;
        double xi = 0.0;
        for (const QData& d : qs) {
            double bad = 0.0;
            for (std::size_t i = 0; i < d.a.size(); ++i)
                if (d.a[i] > t) bad += d.sigma[i];
            xi = std::max(xi, bad / d.sigma_q);
        }
        cert.xi_t.push_back(t);
        cert.xi.push_back(xi);
        if (xi > (1.0 / alpha) * std::exp(-rate * t) + 1e-12) ++cert.xi_violations;
    }

    for (const QData& d : qs) {
        double avg = 0.0;
        for (std::size_t i = 0; i < d.a.size(); ++i) avg += std::pow(d.a[i], p) * d.sigma[i];
        avg /= d.sigma_q;
        cert.sup_avg_p = std::max(cert.sup_avg_p, avg);
    }
    cert.moment_ok = cert.sup_avg_p <= cert.c_alpha_p * std::pow(N, p) * (1.0 + 1e-12);
    return cert;
}

}  // namespace

JnCertificate jn_certify(const CubeDataTable& table, int q0, double alpha, double p, double n_cap,
                         bool fat) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("jn_certify: alpha in (0,1)");
    if (!(p > 0.0)) throw std::invalid_argument("jn_certify: p > 0");
    const DyadicGrid& grid = table.structure().grid();
    return jn_core(
        grid, q0, [&](int id) { return fat ? table.beta_hat(id) : table.beta(id); }, alpha, p,
        n_cap);
}

JnCertificate jn_certify_beta(const DyadicGrid& grid, const std::vector<double>& beta, int q0,
                              double alpha, double p, double n_cap) {
    if (static_cast<int>(beta.size()) != grid.size())
        throw std::invalid_argument("jn_certify_beta: need one beta per cube");
    return jn_core(
        grid, q0, [&](int id) { return beta[id]; }, alpha, p, n_cap);
}

// ---------------------------------------------------------------------------
// good-lambda scan
// ---------------------------------------------------------------------------

GoodLambdaFit good_lambda_scan(const CubeDataTable& tableG, const CubeDataTable& tableH,
                               const std::vector<double>& eps_grid,
                               const std::vector<double>& gamma_grid,
                               const std::vector<int>& scope, int n_alpha) {
    const DyadicGrid& grid = tableG.structure().grid();
    GoodLambdaFit fit;

    for (int q : scope) {
        auto [l0, l1] = grid.leaf_span(q);
        auto a2 = area_sq_leaves(tableG, q);
        auto nh = ntmax_leaves(tableH, q, /*fat=*/true);
        std::vector<double> a(a2.size());
        for (std::size_t i = 0; i < a2.size(); ++i) a[i] = std::sqrt(a2[i]);
        double amax = 0.0;
        for (double v : a) amax = std::max(amax, v);
        if (amax <= 0.0) continue;
        for (double eps : eps_grid) {
            for (double gamma : gamma_grid) {
                for (int j = 1; j <= n_alpha; ++j) {
                    double alpha = amax * std::ldexp(1.0, -j);
                    double lhs = 0.0, rhs = 0.0;
                    for (std::size_t i = 0; i < a.size(); ++i) {
                        double sig = grid.cube(l0 + static_cast<int>(i)).sigma;
                        if (a[i] > alpha) rhs += sig;
                        if (a[i] > (1.0 + eps) * alpha && nh[i] <= gamma * alpha) lhs += sig;
                    }
                    if (rhs > 0.0) fit.rows.push_back({eps, gamma, alpha, lhs, rhs});
                }
            }
        }
    }

    // log-regression of the measured ratios over gamma at fixed eps, across
    // the whole (Q, alpha) row cloud. Saturated ratios (>= 1 up to noise) make
    // the display vacuous there and are left to the envelope constant.
    std::map<std::pair<double, double>, double> worst;
    for (const auto& r : fit.rows) {
        double ratio = r.lhs / r.rhs;
        auto key = std::make_pair(r.eps, r.gamma);
        auto it = worst.find(key);
        if (it == worst.end() || ratio > it->second) worst[key] = ratio;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : fit.rows) {
        double ratio = r.lhs / r.rhs;
        if (ratio <= 0.0 || ratio >= 0.95) continue;
        double x = std::log(r.gamma / r.eps);
        double y = std::log(ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2 && sxx * n - sx * sx > 1e-12) {
        fit.theta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        fit.C_fit = std::exp((sy - fit.theta * sx) / n);
    }
    for (const auto& [key, ratio] : worst) {
        if (ratio <= 0.0) continue;
        double envc = ratio / std::pow(key.second / key.first, fit.theta);
        fit.C_env = std::max(fit.C_env, envc);
        if (fit.C_fit > 0)
            fit.worst_fit_excess =
                std::max(fit.worst_fit_excess,
                         ratio / (fit.C_fit * std::pow(key.second / key.first, fit.theta)));
    }
    for (const auto& [key, ratio] : worst) {
        if (ratio > fit.C_env * std::pow(key.second / key.first, fit.theta) * (1.0 + 1e-9))
            ++fit.violations_env;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// A < N ratios and the implication chain
// ---------------------------------------------------------------------------

AqLessNReport aq_less_n_ratios(const CubeDataTable& tableG, const CubeDataTable& tableH,
                               const std::vector<double>& q_list, const std::vector<int>& scope) {
    const DyadicGrid& grid = tableG.structure().grid();
    AqLessNReport rep;
    for (double qe : q_list) {
        AqLessNReport::PerQ row{qe, 0.0, -1, 0};
        for (int q : scope) {
            auto a2 = area_sq_leaves(tableG, q);
            auto nh = ntmax_leaves(tableH, q, true);
            std::vector<double> a(a2.size());
            for (std::size_t i = 0; i < a2.size(); ++i) a[i] = std::sqrt(a2[i]);
            double na = leaf_lq_norm(grid, q, a, qe);
            double nn = leaf_lq_norm(grid, q, nh, qe);
            if (nn == 0.0) {
                if (na > 0.0) ++row.violations;
                continue;
            }
            double ratio = na / nn;
            if (ratio > row.sup_ratio) {
                row.sup_ratio = ratio;
                row.worst_cube = q;
            }
        }
        rep.per_exponent.push_back(row);
    }
    return rep;
}

BqToAdyadic bq_implies_adyadic(const CubeDataTable& tableG, const CubeDataTable& tableH, double q,
                               const std::vector<int>& scope) {
    const DyadicGrid& grid = tableG.structure().grid();
    BqToAdyadic out;
    AqLessNReport rep = aq_less_n_ratios(tableG, tableH, {q}, scope);
    out.c_q = rep.per_exponent[0].sup_ratio;
    for (int id = 0; id < grid.size(); ++id) out.h_inf = std::max(out.h_inf, tableH.mhat(id));
    if (out.c_q == 0.0 || out.h_inf == 0.0) {
        out.ok = true;  // degenerate: G vanishes
        out.hypothesis_ok = true;
        return out;
    }
    double scale = std::pow(2.0, 1.0 / q) * out.c_q * out.h_inf;
    // Chebyshev: the alpha = 1/2 hypothesis for F = G / scale at N = 1
    out.hypothesis_ok = true;
    for (int q0 : scope) {
        grid.descendants(q0, [&](int qq) {
            auto a2 = area_sq_leaves(tableG, qq);
            auto [l0, l1] = grid.leaf_span(qq);
            double bad = 0.0;
            for (std::size_t i = 0; i < a2.size(); ++i)
                if (std::sqrt(a2[i]) / scale > 1.0) bad += grid.cube(l0 + static_cast<int>(i)).sigma;
            if (bad > 0.5 * grid.cube(qq).sigma + 1e-15) out.hypothesis_ok = false;
        });
    }
    // sup_Q avg (A^Q G)^2 = dyadic CME of G exactly (the Fubini identity)
    std::vector<double> per_cube;
    FunctionalResult cd = cme_dyadic(tableG, &per_cube);
    out.lhs = cd.value;
    out.rhs = jn_constant(0.5, 2.0) * scale * scale;
    out.ok = out.hypothesis_ok && out.lhs <= out.rhs * (1.0 + 1e-9);
    return out;
}

// ---------------------------------------------------------------------------
// N < S
// ---------------------------------------------------------------------------

NsReport n_less_s_local(const CubeDataTable& table, const ScalarField& u, double q, int q0,
                        double eps, double gamma) {
    const DyadicGrid& grid = table.structure().grid();
    NsReport rep;
    rep.q_exp = q;
    Vec2 xq = table.structure().corkscrew_point(q0, +1);
    rep.corkscrew_value = u.u(xq);

    auto s2 = area_sq_leaves(table, q0, /*fat=*/true);
    std::vector<double> s(s2.size());
    for (std::size_t i = 0; i < s2.size(); ++i) s[i] = std::sqrt(s2[i]);
    auto nvals = ntmax_leaves(table, q0, false, rep.corkscrew_value);
    auto n0 = ntmax_leaves(table, q0, false, 0.0);

    rep.n_norm = leaf_lq_norm(grid, q0, nvals, q);
    rep.s_norm = leaf_lq_norm(grid, q0, s, q);
    if (rep.s_norm == 0.0) {
        rep.violation = rep.n_norm > 0.0;
        rep.ratio = 0.0;
    } else {
        rep.ratio = rep.n_norm / rep.s_norm;
    }
    rep.ratio_unshifted = rep.s_norm > 0.0 ? leaf_lq_norm(grid, q0, n0, q) / rep.s_norm : 0.0;

    // local good-lambda with the M^D_{Q0,2} gate on S-hat
    auto md = dyadic_maximal(grid, q0, s, 2.0);
    double nmax = 0.0;
    for (double v : nvals) nmax = std::max(nmax, v);
    if (nmax > 0.0) {
        auto [l0, l1] = grid.leaf_span(q0);
        for (int j = 1; j <= 10; ++j) {
            double alpha = nmax * std::ldexp(1.0, -j);
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < nvals.size(); ++i) {
                double sig = grid.cube(l0 + static_cast<int>(i)).sigma;
                if (nvals[i] > alpha) rhs += sig;
                if (nvals[i] > (1.0 + eps) * alpha && md[i] <= gamma * alpha) lhs += sig;
            }
            if (rhs > 0.0) rep.good_lambda_cstar = std::max(rep.good_lambda_cstar, lhs / rhs);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// transference
// ---------------------------------------------------------------------------

double region_cme(const std::function<double(const Vec2&)>& F2, const Region& region, int nballs,
                  int nradii, int quad_level) {
    if (region.empty()) return 0.0;
    const RegionBoundary& rb = region.boundary();
    auto centers = rb.sample(nballs);
    double diam = region.bbox().diam();
    double best = 0.0;
    int n_theta = 1 << quad_level;
    int n_rho = std::max(12, n_theta / 4);
    for (const auto& wp : centers) {
        for (int ri = 0; ri < nradii; ++ri) {
            double r = diam * std::ldexp(1.0, -ri - 1);
            double sum = 0.0;
            double h_t = 6.283185307179586 / n_theta, h_r = r / n_rho;
            for (int i = 0; i < n_rho; ++i) {
                double rho = (i + 0.5) * h_r;
                for (int j = 0; j < n_theta; ++j) {
                    double th = (j + 0.5) * h_t;
                    Vec2 p{wp.p.x + rho * std::cos(th), wp.p.y + rho * std::sin(th)};
                    if (!region.contains(p)) continue;
                    sum += F2(p) * rb.dist(p) * rho;
                }
            }
            best = std::max(best, sum * h_t * h_r / r);
        }
    }
    return best;
}

namespace {

double strip_cme(const std::function<double(const Vec2&)>& F2, const LipschitzSubdomain& sub,
                 const GraphSet& g, int nballs, int nradii, int quad_level) {
    auto centers = sub.boundary_sample(nballs);
    double diam = std::hypot(sub.param_b - sub.param_a, sub.height) * 1.5;
    double best = 0.0;
    int n_theta = 1 << quad_level;
    int n_rho = std::max(12, n_theta / 4);
    for (const auto& wp : centers) {
        for (int ri = 0; ri < nradii; ++ri) {
            double r = diam * std::ldexp(1.0, -ri - 1);
            double sum = 0.0;
            double h_t = 6.283185307179586 / n_theta, h_r = r / n_rho;
            for (int i = 0; i < n_rho; ++i) {
                double rho = (i + 0.5) * h_r;
                for (int j = 0; j < n_theta; ++j) {
                    double th = (j + 0.5) * h_t;
                    Vec2 p{wp.p.x + rho * std::cos(th), wp.p.y + rho * std::sin(th)};
                    if (!sub.contains(p, g)) continue;
                    sum += F2(p) * sub.boundary_dist(p) * rho;
                }
            }
            best = std::max(best, sum * h_t * h_r / r);
        }
    }
    return best;
}

}  // namespace

TransferReport transfer_cme_cad(const std::function<double(const Vec2&)>& F2,
                                const DyadicGrid& grid, const WhitneyDyadicStructure& s,
                                DomainMode domain, const std::vector<int>& catalog_cubes,
                                const BallFamily& global_family) {
    if (catalog_cubes.empty()) throw std::invalid_argument("transfer_cme_cad: empty catalog");
    TransferReport rep;
    rep.lhs = cme(F2, grid.set(), domain, global_family).value;
    const bool graph_kind =
        grid.set().kind() == SetKind::flat || grid.set().kind() == SetKind::graph;
    for (int q : catalog_cubes) {
        if (graph_kind) {
            LipschitzSubdomain sub = big_pieces_subdomain(grid, q, 0.5);
            double v = strip_cme(F2, sub, static_cast<const GraphSet&>(grid.set()), 10, 4, 6);
            rep.catalog.push_back({"strip_q" + std::to_string(q), v});
            rep.rhs = std::max(rep.rhs, v);
        }
        // one-layer sawtooth: int U_Q
        Region uq = s.whitney_region(q, false);
        double v2 = region_cme(F2, uq, 10, 4, 6);
        rep.catalog.push_back({"uq_q" + std::to_string(q), v2});
        rep.rhs = std::max(rep.rhs, v2);
    }
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

TransferReport transfer_cme_ur(const std::function<double(const Vec2&)>& F2,
                               const DyadicGrid& grid, const WhitneyDyadicStructure& s,
                               const CoronaDecomposition& corona, const BallFamily& global_family,
                               const std::vector<Vec2>& interior_samples) {
    TransferReport rep;
    rep.lhs = cme(F2, grid.set(), DomainMode::complement, global_family).value;
    rep.cme0 = cme0(F2, grid.set(), interior_samples).value;
    rep.rhs = rep.cme0;
    for (std::size_t i = 0; i < corona.regimes.size(); ++i) {
        auto [plus, minus] = s.regime_domains(static_cast<int>(i));
        double vp = region_cme(F2, plus, 8, 3, 6);
        double vm = region_cme(F2, minus, 8, 3, 6);
        rep.catalog.push_back({"regime" + std::to_string(i) + "_plus", vp});
        rep.catalog.push_back({"regime" + std::to_string(i) + "_minus", vm});
        rep.rhs = std::max({rep.rhs, vp, vm});
    }
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

CoronaCmeSums corona_cme_sum(const CubeDataTable& table, const CoronaDecomposition& corona, int q0,
                             double cme0_value) {
    const DyadicGrid& grid = table.structure().grid();
    CoronaCmeSums out;
    out.cme0 = cme0_value;
    out.per_regime.assign(corona.regimes.size(), 0.0);
    grid.descendants(q0, [&](int id) {
        double term = grid.cube(id).sigma * table.beta(id);
        int r = corona.regime_of[id];
        if (r < 0) {
            out.sigma1 += term;
            out.packing_sum += grid.cube(id).sigma;
        } else {
            out.per_regime[r] += term;
        }
    });
    if (cme0_value > 0.0 && out.packing_sum > 0.0)
        out.packed_constant = out.sigma1 / (cme0_value * out.packing_sum);
    return out;
}

KpReport kp_restriction_check(const std::function<double(const Vec2&)>& gradA_mag,
                              const AmbientSet& set, const Region& subdomain,
                              const BallFamily& family, int nballs, int quad_level) {
    KpReport rep;
    auto F2 = [&](const Vec2& p) {
        double v = gradA_mag(p);
        return v * v;
    };
    rep.lhs = region_cme(F2, subdomain, nballs, 4, quad_level);
    rep.rhs1 = cme(F2, set, DomainMode::complement, family, quad_level).value;
    // sup |grad A| dist(.,E) over quadrature nodes of the subdomain
    double sup = 0.0;
    for (const Box& b : subdomain.boxes()) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                Vec2 p{b.lo.x + (i + 0.5) * b.width() / 4, b.lo.y + (j + 0.5) * b.height() / 4};
                sup = std::max(sup, gradA_mag(p) * set.distance(p));
            }
    }
    if (!std::isfinite(sup)) throw std::runtime_error("kp_restriction_check: unbounded |grad A| dist");
    rep.rhs2 = sup * sup;
    rep.C = 3.141592653589793;  // max(3^n, c_n) for n = 1
    rep.ok = rep.lhs <= rep.C * (rep.rhs1 + rep.rhs2) * (1.0 + 1e-9);
    return rep;
}

}  // namespace cmelab
