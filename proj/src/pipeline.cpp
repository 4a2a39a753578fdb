#include "cmelab/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmelab/estimators.hpp"
#include "cmelab/fields.hpp"
#include "cmelab/parallel.hpp"
#include "cmelab/scenario.hpp"
#include "cmelab/stopping.hpp"

namespace cmelab {

namespace {

struct Ctx {
    ExperimentConfig cfg;
    Scenario sc;
    int depth;
    int workers;
    std::uint64_t seed;
};

Ctx make_ctx(const ExperimentConfig& cfg) {
    Ctx ctx{cfg, make_scenario(cfg.get("scenario", "name", "flat"), cfg),
            static_cast<int>(cfg.get_int("grid", "depth", 8)),
            static_cast<int>(cfg.get_int("experiment", "workers", 1)),
            static_cast<std::uint64_t>(cfg.get_int("experiment", "seed", 1))};
    return ctx;
}

DyadicGrid build_grid(const Ctx& ctx) {
    int k_min = static_cast<int>(ctx.cfg.get_int("grid", "k_min", 0));
    return DyadicGrid::build(*ctx.sc.set, k_min, ctx.depth, ctx.sc.win_lo, ctx.sc.win_hi);
}

WhitneyDecomposition build_whitney(const Ctx& ctx) {
    int extra = static_cast<int>(ctx.cfg.get_int("grid", "whitney_extra", 3));
    return WhitneyDecomposition::build(*ctx.sc.set, ctx.sc.whitney_window, ctx.depth + extra);
}

StructureParams profile_params(const Ctx& ctx, const std::string& profile) {
    StructureParams p;
    if (profile == "region") {
        p.eta = ctx.cfg.get_num("structure", "region_eta", 1.0 / 256.0);
        p.K = ctx.cfg.get_num("structure", "region_k", 128.0);
    } else {
        p.eta = ctx.cfg.get_num("structure", "eta", 1.0 / 256.0);
        p.K = ctx.cfg.get_num("structure", "k", 16384.0);
    }
    p.tau = ctx.cfg.get_num("structure", "tau", 1.0 / 64.0);
    return p;
}

ScalarField field_from(const ExperimentConfig& cfg) {
    std::string name = cfg.get("field", "name", "coordinate");
    return catalog_field(name, cfg.get_list("field", "params"));
}

ScalarField grad_mag_field(const ScalarField& f) {
    ScalarField g;
    g.name = f.name + "_gradmag";
    auto grad = f.grad;
    g.u = [grad](const Vec2& p) { return grad(p).norm(); };
    g.grad = [](const Vec2&) { return Vec2{0, 0}; };
    g.domain_tag = f.domain_tag;
    return g;
}

std::vector<Vec2> interior_samples(const Ctx& ctx, int m) {
    std::vector<Vec2> out;
    const Box& w = ctx.sc.whitney_window;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            Vec2 p{w.lo.x + (i + 0.5) * w.width() / m, w.lo.y + (j + 0.5) * w.height() / m};
            if (ctx.sc.set->in_domain(p, ctx.sc.domain) && ctx.sc.set->distance(p) > 1e-9)
                out.push_back(p);
        }
    }
    return out;
}

BallFamily default_family(const Ctx& ctx) {
    int ncenters = static_cast<int>(ctx.cfg.get_int("estimate", "ball_centers", 9));
    double r_lo = ctx.cfg.get_num("estimate", "r_lo", 1.0 / 64.0);
    double r_hi = ctx.cfg.get_num("estimate", "r_hi", 1.0);
    if (std::isfinite(ctx.sc.set->diam())) r_hi = std::min(r_hi, ctx.sc.set->diam() / 2.0);
    return make_ball_family(*ctx.sc.set, ncenters, r_lo, r_hi, ctx.sc.win_lo, ctx.sc.win_hi);
}

int pick_q0(const DyadicGrid& grid, const Ctx& ctx) {
    std::int64_t want_j = ctx.cfg.get_int("experiment", "q0_j", 0);
    int want_k = static_cast<int>(ctx.cfg.get_int("experiment", "q0_k", grid.kmin()));
    auto [b, e] = grid.generation(want_k);
    for (int id = b; id < e; ++id)
        if (grid.cube(id).j == want_j) return id;
    return grid.top_cubes().front();
}

void write_text(const std::string& path, const std::string& body) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream f(path, std::ios::binary);
    f << body;
}

// ---------------------------------------------------------------------------

ExperimentReport run_build_geometry(const Ctx& ctx, const std::string& out) {
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);
    rep.add("diam", ctx.sc.set->diam());
    rep.add("cubes", grid.size());

    double r_lo = ctx.cfg.get_num("adr", "r_min", 1.0 / 64.0);
    double r_hi = ctx.cfg.get_num("adr", "r_max", 0.5);
    AdrEstimate adr = estimate_adr(*ctx.sc.set, r_lo, r_hi,
                                   static_cast<int>(ctx.cfg.get_int("adr", "samples", 17)), ctx.seed);
    rep.add("adr_c_lower", adr.c_lower);
    rep.add("adr_c_upper", adr.c_upper);

    // nesting + ball containment audits
    bool nest_ok = true, ball_ok = true;
    double maxC = 0.0;
    for (int id = 0; id < grid.size(); ++id) {
        const DyadicCube& q = grid.cube(id);
        auto [cb, ce] = grid.children(id);
        if (q.k < grid.kmax()) {
            double covered = 0.0;
            for (int c = cb; c < ce; ++c) covered += grid.cube(c).sigma;
            if (std::abs(covered - q.sigma) > 1e-9 * std::max(1.0, q.sigma)) nest_ok = false;
        }
        if (!grid.surface_ball_inside(id, 2.0 * q.r_ball)) ball_ok = false;
        maxC = std::max(maxC, grid.cube_ball_C(id));
    }
    rep.add("cube_ball_C", maxC);
    rep.add_verdict("nesting", nest_ok);
    rep.add_verdict("surface_ball", ball_ok);

    std::ostringstream os;
    grid.dump_csv(os);
    write_text(out + "/grid.csv", os.str());
    write_text(out + "/set.txt", ctx.sc.set->describe() + "\n");
    return rep;
}

ExperimentReport run_decompose(const Ctx& ctx, const std::string& out) {
    ExperimentReport rep;
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), wd.geometry_hash(), ctx.seed);
    rep.add("cubes", wd.size());
    int bad = 0;
    for (int id = 0; id < wd.size(); ++id) {
        Box b = wd.box(id);
        double diam = b.diam();
        double d4 = ctx.sc.set->distance_box(b.dilated(3.0));  // 4I = (1+3)I
        double d1 = wd.dist_E(id);
        if (!(4.0 * diam <= d4 + 1e-12 && d4 <= d1 + 1e-12 && d1 <= 40.0 * diam + 1e-12)) ++bad;
    }
    rep.add("whitney_440_violations", bad);
    rep.add_verdict("whitney_440", bad == 0);
    std::ostringstream os;
    wd.dump_csv(os);
    write_text(out + "/whitney.csv", os.str());
    return rep;
}

ExperimentReport run_corona(const Ctx& ctx, const std::string& out) {
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);
    double eta = ctx.cfg.get_num("corona", "eta", 0.125);
    double K = ctx.cfg.get_num("corona", "k", 8.0);
    CoronaDecomposition c = build_corona(grid, eta, K);
    rep.add("regimes", static_cast<double>(c.regimes.size()));
    rep.add("bad_cubes", static_cast<double>(c.bad.size()));
    rep.add("max_packing_ratio", c.max_packing_ratio(grid));
    std::ostringstream os;
    c.dump(os, grid);
    write_text(out + "/corona.json", os.str());
    return rep;
}

ExperimentReport run_estimate(const Ctx& ctx, const std::string& out) {
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash() ^ wd.geometry_hash(), ctx.seed);

    ScalarField u = field_from(ctx.cfg);
    ScalarField gm = grad_mag_field(u);
    auto F2 = [&gm](const Vec2& p) {
        double v = gm.u(p);
        return v * v;
    };

    BallFamily fam = default_family(ctx);
    auto interior = interior_samples(ctx, 24);
    // append the witness balls so the CME0 comparison is honored on shared runs
    BallFamily wit = witness_balls(*ctx.sc.set, interior);
    BallFamily joint = fam;
    for (std::size_t i = 0; i < wit.centers.size(); ++i) joint.centers.push_back(wit.centers[i]);
    for (double r : wit.radii) joint.radii.push_back(r);

    FunctionalResult c_cme = cme(F2, *ctx.sc.set, ctx.sc.domain, fam);
    FunctionalResult c_cme0 = cme0(F2, *ctx.sc.set, interior);
    // comparison family: per-sample witness ball terms
    double cme_with_witness = c_cme.value;
    for (std::size_t i = 0; i < wit.centers.size(); ++i) {
        BallFamily one;
        one.centers = {wit.centers[i]};
        one.radii = {wit.radii[i]};
        cme_with_witness = std::max(cme_with_witness, cme(F2, *ctx.sc.set, ctx.sc.domain, one).value);
    }

    auto s = WhitneyDyadicStructure::build(grid, wd, StructureMode::adr,
                                           profile_params(ctx, "estimator"), ctx.sc.domain);
    CubeDataTable table = CubeDataTable::build(
        s, &gm, &u, static_cast<int>(ctx.cfg.get_int("estimate", "quad_level", 2)), ctx.workers);
    FunctionalResult c_dyad = cme_dyadic(table);

    rep.add("cme", c_cme.value);
    rep.add("cme_witness_x", c_cme.witness.x.x);
    rep.add("cme_witness_r", c_cme.witness.r);
    rep.add("cme0", c_cme0.value);
    rep.add("cme_dyadic", c_dyad.value);
    rep.add("cme_with_witness", cme_with_witness);
    double denom = c_dyad.value + c_cme0.value;
    rep.add("comparability_C", denom > 0 ? c_cme.value / denom : 0.0);
    rep.add_verdict("cme0_le_3cme", c_cme0.value <= 3.0 * cme_with_witness * (1.0 + 1e-9));

    // traditional functionals at the first family center
    if (!fam.centers.empty()) {
        double r = fam.radii.empty() ? 1.0 : fam.radii.back();
        TradFunctionals tf = trad_functionals(u, *ctx.sc.set, ctx.sc.domain, fam.centers.front(),
                                              1.0, r);
        rep.add("trad_S", tf.S);
        rep.add("trad_A", tf.A);
        rep.add("trad_N", tf.N);

        double k1 = ctx.cfg.get_num("estimate", "aperture_1", 0.5);
        double k2 = ctx.cfg.get_num("estimate", "aperture_2", 2.0);
        ApertureRatios ap = aperture_ratio(u, *ctx.sc.set, ctx.sc.domain, k1, k2,
                                           ctx.cfg.get_num("estimate", "aperture_q", 2.0),
                                           fam.centers, r);
        rep.add("aperture_n_ratio_12", ap.n_ratio_12);
        rep.add("aperture_n_ratio_21", ap.n_ratio_21);
        rep.add("aperture_a_ratio", ap.a_ratio);
    }

    // eps-approximability check with the piecewise whitney average of u
    double eps = ctx.cfg.get_num("estimate", "eps_approx", 0.5);
    if (eps > 0.0) {
        std::vector<double> phi(wd.size());
        for (int id = 0; id < wd.size(); ++id) phi[id] = u.u(wd.center(id));
        EpsApproxReport ea = eps_approx_check_piecewise(u, wd, phi, *ctx.sc.set, ctx.sc.domain,
                                                        eps, fam, interior);
        rep.add("eps_gap", ea.sup_gap);
        rep.add("eps_c", ea.c_eps);
        rep.add_verdict("eps_approx", ea.verdict);
    }

    // optional walk-on-spheres cross check of the field at an interior point
    int budget = static_cast<int>(ctx.cfg.get_int("estimate", "wos_budget", 0));
    if (budget > 0 && !interior.empty()) {
        DomainOracle dom = complement_oracle(*ctx.sc.set);
        Vec2 X = interior[interior.size() / 2];
        WosResult wr = wos_evaluate(
            dom, [&u](const Vec2& p) { return u.u(p); }, X, budget,
            ctx.cfg.get_num("estimate", "wos_eps_shell", 1e-4), ctx.seed);
        rep.add("wos_value", wr.value);
        rep.add("wos_stderr", wr.stderr_);
        rep.add("wos_exclusions", wr.exclusion_rate);
    }

    std::ostringstream os;
    table.dump_csv(os);
    write_text(out + "/table.csv", os.str());
    return rep;
}

ExperimentReport run_jn(const Ctx& ctx, const std::string& out) {
    (void)out;
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);

    ScalarField u = field_from(ctx.cfg);
    ScalarField gm = grad_mag_field(u);
    auto s = WhitneyDyadicStructure::build(grid, wd, StructureMode::adr,
                                           profile_params(ctx, "estimator"), ctx.sc.domain);
    CubeDataTable table = CubeDataTable::build(s, &gm, &u, 2, ctx.workers);
    double alpha = ctx.cfg.get_num("jn", "alpha", 0.5);
    double p = ctx.cfg.get_num("jn", "p", 2.0);
    double cap = ctx.cfg.get_num("jn", "n_cap", 1e30);
    int q0 = pick_q0(grid, ctx);
    JnCertificate cert = jn_certify(table, q0, alpha, p, cap);
    rep.add("n_meas", cert.n_meas);
    rep.add("sup_avg_p", cert.sup_avg_p);
    rep.add("c_alpha_p", cert.c_alpha_p);
    rep.add("xi_violations", cert.xi_violations);
    rep.add_verdict("xi_bound", cert.xi_violations == 0);
    rep.add_verdict("moment_bound", cert.moment_ok);
    return rep;
}

ExperimentReport run_good_lambda(const Ctx& ctx, const std::string& out) {
    (void)out;
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);

    ScalarField u = field_from(ctx.cfg);
    ScalarField gm = grad_mag_field(u);
    auto s = WhitneyDyadicStructure::build(grid, wd, StructureMode::adr,
                                           profile_params(ctx, "estimator"), ctx.sc.domain);
    CubeDataTable table = CubeDataTable::build(s, &gm, &u, 2, ctx.workers);

    std::vector<int> scope = grid.top_cubes();
    std::vector<double> eps_grid = ctx.cfg.get_list("goodlambda", "eps_grid");
    std::vector<double> gamma_grid = ctx.cfg.get_list("goodlambda", "gamma_grid");
    if (eps_grid.empty()) eps_grid = {0.25, 0.5, 1.0};
    if (gamma_grid.empty()) gamma_grid = {0.0625, 0.125, 0.25, 0.5, 1.0, 2.0};
    GoodLambdaFit fit = good_lambda_scan(table, table, eps_grid, gamma_grid, scope);
    rep.add("theta", fit.theta);
    rep.add("C_fit", fit.C_fit);
    rep.add("C_env", fit.C_env);
    rep.add("env_violations", fit.violations_env);
    rep.add_verdict("envelope", fit.violations_env == 0);

    AqLessNReport aq = aq_less_n_ratios(table, table, {1.0, 2.0, 4.0}, scope);
    int viol = 0;
    for (const auto& row : aq.per_exponent) {
        rep.add("aq_ratio_q" + std::to_string(static_cast<int>(row.q_exp)), row.sup_ratio);
        viol += row.violations;
    }
    rep.add_verdict("aq_no_violation", viol == 0);

    BqToAdyadic bq = bq_implies_adyadic(table, table, 2.0, scope);
    rep.add("bq_lhs", bq.lhs);
    rep.add("bq_rhs", bq.rhs);
    rep.add_verdict("bq_implies_adyadic", bq.ok);
    return rep;
}

ExperimentReport run_ns(const Ctx& ctx, const std::string& out) {
    (void)out;
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);

    ScalarField u = field_from(ctx.cfg);
    ScalarField gm = grad_mag_field(u);
    StructureMode mode = ctx.sc.domain == DomainMode::complement ? StructureMode::adr
                                                                 : StructureMode::cad;
    auto s = WhitneyDyadicStructure::build(grid, wd, mode, profile_params(ctx, "region"),
                                           ctx.sc.domain);
    CubeDataTable table = CubeDataTable::build(s, &gm, &u, 2, ctx.workers);
    double q = ctx.cfg.get_num("ns", "q", 4.0);
    int q0 = pick_q0(grid, ctx);
    NsReport ns = n_less_s_local(table, u, q, q0, ctx.cfg.get_num("ns", "eps", 1.0),
                                 ctx.cfg.get_num("ns", "gamma", 0.125));
    rep.add("ratio", ns.ratio);
    rep.add("ratio_unshifted", ns.ratio_unshifted);
    rep.add("n_norm", ns.n_norm);
    rep.add("s_norm", ns.s_norm);
    rep.add("good_lambda_cstar", ns.good_lambda_cstar);
    rep.add("corkscrew_value", ns.corkscrew_value);
    rep.add_verdict("no_violation", !ns.violation);
    return rep;
}

ExperimentReport run_transference(const Ctx& ctx, const std::string& out) {
    ExperimentReport rep;
    DyadicGrid grid = build_grid(ctx);
    WhitneyDecomposition wd = build_whitney(ctx);
    rep.set_provenance(ctx.cfg.hash(), grid.geometry_hash(), ctx.seed);

    ScalarField u = field_from(ctx.cfg);
    ScalarField gm = grad_mag_field(u);
    auto F2 = [&gm](const Vec2& p) {
        double v = gm.u(p);
        return v * v;
    };
    BallFamily fam = default_family(ctx);
    auto interior = interior_samples(ctx, 20);

    // CAD mode with the big-pieces + one-layer-sawtooth catalog
    bool graph_kind = ctx.sc.set->kind() == SetKind::flat || ctx.sc.set->kind() == SetKind::graph;
    if (graph_kind || ctx.sc.set->kind() == SetKind::polygon) {
        auto s = WhitneyDyadicStructure::build(grid, wd, StructureMode::cad,
                                               profile_params(ctx, "region"), ctx.sc.domain);
        int cat_k = static_cast<int>(ctx.cfg.get_int("transference", "catalog_k", 2));
        cat_k = std::clamp(cat_k, grid.kmin(), grid.kmax());
        auto [b, e] = grid.generation(cat_k);
        std::vector<int> catalog;
        for (int id = b; id < e && static_cast<int>(catalog.size()) < 6; ++id) catalog.push_back(id);
        TransferReport tr = transfer_cme_cad(F2, grid, s, ctx.sc.domain, catalog, fam);
        rep.add("cad_lhs", tr.lhs);
        rep.add("cad_rhs", tr.rhs);
        rep.add("cad_ratio", tr.ratio);
    }

    // UR mode against the corona regimes
    CoronaDecomposition corona = build_corona(grid, ctx.cfg.get_num("corona", "eta", 0.125),
                                              ctx.cfg.get_num("corona", "k", 8.0));
    auto sur = WhitneyDyadicStructure::build(grid, wd, StructureMode::ur,
                                             profile_params(ctx, "region"), DomainMode::complement,
                                             &corona);
    TransferReport ur = transfer_cme_ur(F2, grid, sur, corona, fam, interior);
    rep.add("ur_lhs", ur.lhs);
    rep.add("ur_rhs", ur.rhs);
    rep.add("ur_ratio", ur.ratio);
    rep.add("ur_cme0", ur.cme0);

    CubeDataTable table = CubeDataTable::build(sur, &gm, &u, 2, ctx.workers);
    int q0 = pick_q0(grid, ctx);
    CoronaCmeSums sums = corona_cme_sum(table, corona, q0, ur.cme0);
    rep.add("sigma1", sums.sigma1);
    rep.add("packing_sum", sums.packing_sum);
    rep.add("packed_constant", sums.packed_constant);
    rep.add("regimes", static_cast<double>(corona.regimes.size()));

    // restriction inequality for the coefficient-gradient functional on a
    // carleson-box subdomain
    if (graph_kind) {
        auto scad = WhitneyDyadicStructure::build(grid, wd, StructureMode::cad,
                                                  profile_params(ctx, "region"), ctx.sc.domain);
        Region sub = scad.carleson_box(q0);
        const AmbientSet& set = *ctx.sc.set;
        double cap = ctx.cfg.get_num("transference", "kp_cap", 0.01);
        auto gradA = [&set, cap](const Vec2& p) {
            return 1.0 / std::max(set.distance(p), cap);
        };
        KpReport kp = kp_restriction_check(gradA, set, sub, fam);
        rep.add("kp_lhs", kp.lhs);
        rep.add("kp_rhs1", kp.rhs1);
        rep.add("kp_rhs2", kp.rhs2);
        rep.add_verdict("kp_restriction", kp.ok);
        std::ostringstream ros;
        sub.dump_csv(ros);
        write_text(out + "/region.csv", ros.str());
    }
    return rep;
}

ExperimentReport run_riesz(const Ctx& ctx, const std::string& out) {
    (void)out;
    ExperimentReport rep;
    rep.set_provenance(ctx.cfg.hash(), 0, ctx.seed);
    int n = static_cast<int>(ctx.cfg.get_int("riesz", "samples", 2048));
    auto samples = ctx.sc.set->sample_points(n, ctx.sc.win_lo * 4, ctx.sc.win_hi * 4);
    std::vector<double> f(samples.size(), 1.0);
    std::vector<double> eps_list = ctx.cfg.get_list("riesz", "eps_list");
    if (eps_list.empty())
        for (int j = 2; j <= 8; ++j) eps_list.push_back(std::ldexp(1.0, -j));
    std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
    RieszProbe probe =
        riesz_probe(*ctx.sc.set, samples, f, eps_list,
                    static_cast<int>(ctx.cfg.get_int("riesz", "ensemble", 8)), ctx.seed);
    rep.add("sup_norm", probe.sup_norm);
    for (std::size_t i = 0; i < probe.eps.size(); ++i)
        rep.add("norm_eps_" + std::to_string(i), probe.norm_estimate[i]);
    // odd-kernel cancellation at the central sample
    Vec2 t = riesz_apply_at(samples, f, eps_list.front(), samples.size() / 2);
    rep.add("odd_symmetry_residual", std::hypot(t.x, t.y));
    return rep;
}

}  // namespace

ExperimentReport run_pipeline(const std::string& subcommand, const ExperimentConfig& cfg,
                              const std::string& out_dir) {
    Ctx ctx = make_ctx(cfg);
    if (subcommand == "build-geometry") return run_build_geometry(ctx, out_dir);
    if (subcommand == "decompose") return run_decompose(ctx, out_dir);
    if (subcommand == "corona") return run_corona(ctx, out_dir);
    if (subcommand == "estimate") return run_estimate(ctx, out_dir);
    if (subcommand == "jn") return run_jn(ctx, out_dir);
    if (subcommand == "good-lambda") return run_good_lambda(ctx, out_dir);
    if (subcommand == "ns") return run_ns(ctx, out_dir);
    if (subcommand == "transference") return run_transference(ctx, out_dir);
    if (subcommand == "riesz") return run_riesz(ctx, out_dir);
    throw std::invalid_argument("unknown subcommand: " + subcommand);
}

}  // namespace cmelab
