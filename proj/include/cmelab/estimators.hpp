#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmelab/fields.hpp"
#include "cmelab/structures.hpp"

namespace cmelab {

struct Witness {
    Vec2 x;
    double r = 0.0;
    int cube = -1;
};

struct FunctionalResult {
    std::string name;
    double value = 0.0;
    Witness witness;
    int quadrature_nodes = 0;
    std::string family;  // documented sample-family density
};

/// Deterministic family of boundary balls: centers from the point sampler,
/// dyadic radii in [r_lo, r_hi].
struct BallFamily {
    std::vector<Vec2> centers;
    std::vector<double> radii;
    std::string describe() const;
};
BallFamily make_ball_family(const AmbientSet& set, int ncenters, double r_lo, double r_hi,
                            double param_lo = 0.0, double param_hi = 0.0);

/// sup over the family of r^-n iint_{B cap Omega} F2 * dist dY.
FunctionalResult cme(const std::function<double(const Vec2&)>& F2, const AmbientSet& set,
                     DomainMode domain, const BallFamily& family, int quad_level = 9);

/// sup_X dist(X)^{1-n} iint_{B(X, dist(X)/2)} F2; the witness balls needed by
/// the CME0 <= 2 (3/2)^n CME comparison are centered at the nearest boundary
/// points and can be appended to a family via `witness_balls`.
FunctionalResult cme0(const std::function<double(const Vec2&)>& F2, const AmbientSet& set,
                      const std::vector<Vec2>& samples, int quad_level = 8);
BallFamily witness_balls(const AmbientSet& set, const std::vector<Vec2>& samples);

/// sup_Q (1/sigma(Q)) sum_{Q' in D_Q} sigma(Q') beta_{Q'}; the overlap-counted
/// dyadic Carleson norm. Also exposes the per-cube partial sums.
FunctionalResult cme_dyadic(const CubeDataTable& table, std::vector<double>* per_cube = nullptr);

/// A^Q(x)^2 per leaf of Q: overlap-counted sums of beta along the ancestor
/// chain from the leaf up to Q. Order matches grid.leaf_span(q).
std::vector<double> area_sq_leaves(const CubeDataTable& table, int q, bool fat = false);
/// N^Q(x) per leaf of Q: sup |H - c| over the local cone, via per-cube ranges.
std::vector<double> ntmax_leaves(const CubeDataTable& table, int q, bool fat = false,
                                 double shift = 0.0);

struct TradFunctionals {
    double S = 0.0;       // square function (grad-based)
    double A = 0.0;       // area integral of the supplied integrand
    double N = 0.0;       // non-tangential sup
    int nodes = 0;
};
/// Truncated traditional-cone functionals at x with aperture kappa, by polar
/// midpoint quadrature on B(x, r).
TradFunctionals trad_functionals(const ScalarField& u, const AmbientSet& set, DomainMode domain,
                                 const Vec2& x, double kappa, double r, int n_rho = 192,
                                 int n_theta = 768);

struct ApertureRatios {
    double n_ratio_12 = 0.0;  // ||N_k1||_q / ||N_k2||_q
    double n_ratio_21 = 0.0;
    double a_ratio = 0.0;     // ||A_k1||_q / ||A_k2||_q, k1 < k2 direction
};
ApertureRatios aperture_ratio(const ScalarField& u, const AmbientSet& set, DomainMode domain,
                              double kappa1, double kappa2, double q,
                              const std::vector<Vec2>& samples, double r);

struct EpsApproxReport {
    double sup_gap = 0.0;  // ||u - phi||_inf over interior samples
    double c_eps = 0.0;    // measured Carleson constant of |grad phi|
    bool verdict = false;
    double eps = 0.0;
};
/// Checker with phi piecewise constant on Whitney boxes (values per cube id);
/// |grad phi| integrates to face-jump length sums.
EpsApproxReport eps_approx_check_piecewise(const ScalarField& u, const WhitneyDecomposition& w,
                                           const std::vector<double>& phi_values,
                                           const AmbientSet& set, DomainMode domain, double eps,
                                           const BallFamily& family,
                                           const std::vector<Vec2>& interior_samples);
/// Checker for a differentiable candidate phi.
EpsApproxReport eps_approx_check(const ScalarField& u, const ScalarField& phi,
                                 const AmbientSet& set, DomainMode domain, double eps,
                                 const BallFamily& family, const std::vector<Vec2>& interior_samples,
                                 int quad_level = 8);

struct RieszProbe {
    std::vector<double> eps;
    std::vector<double> norm_estimate;  // Rayleigh-quotient estimates per eps
    double sup_norm = 0.0;
};
/// Truncated Riesz transform probe on E-samples: kernel (1/pi) x/|x|^2 with a
/// quintic smoothstep cutoff on [1,2]; Rayleigh quotients over the supplied f
/// plus a Rademacher ensemble.
RieszProbe riesz_probe(const AmbientSet& set, const std::vector<WeightedPoint>& samples,
                       const std::vector<double>& f, const std::vector<double>& eps_list,
                       int ensemble = 8, std::uint64_t seed = 7);
/// Single evaluation T_eps f (x) for tests; index picks the sample playing x.
Vec2 riesz_apply_at(const std::vector<WeightedPoint>& samples, const std::vector<double>& f,
                    double eps, std::size_t index);

}  // namespace cmelab
