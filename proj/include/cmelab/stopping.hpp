#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmelab/estimators.hpp"
#include "cmelab/fields.hpp"
#include "cmelab/structures.hpp"

namespace cmelab {

struct LevelSetFamily {
    double alpha = 0.0;
    std::vector<int> cubes;
    double covered_sigma = 0.0;
};

/// Maximal cubes under q0 satisfying an inherited predicate (parent fails).
LevelSetFamily maximal_cubes(const DyadicGrid& grid, int q0, const std::function<bool(int)>& pred,
                             double alpha = 0.0);
/// Maximal cubes whose leaves all exceed alpha; the union reproduces the
/// level set of the per-leaf values exactly.
LevelSetFamily maximal_cubes_values(const DyadicGrid& grid, int q0,
                                    const std::vector<double>& leaf_values, double alpha);
/// Stopping cubes of the density condition sigma(E cap Q)/sigma(Q) > beta.
LevelSetFamily maximal_cubes_density(const DyadicGrid& grid, int q0,
                                     const std::vector<char>& leaf_in, double beta);

struct JnCertificate {
    double alpha = 0.0;
    double p = 0.0;
    double n_meas = 0.0;             // smallest dyadic N passing the hypothesis
    std::vector<double> xi_t;        // t grid
    std::vector<double> xi;          // measured Xi(t)
    int xi_violations = 0;           // against alpha^-1 exp(-log(1/alpha) t / N)
    double sup_avg_p = 0.0;          // sup_Q avg_Q (A^Q)^p
    double c_alpha_p = 0.0;          // p alpha^-1 (1/log(1/alpha))^p Gamma(p)
    bool moment_ok = false;
};

double jn_constant(double alpha, double p);

/// John-Nirenberg certificate for the A^Q data of `table` below q0. Throws if
/// no dyadic N <= n_cap satisfies the level-set hypothesis.
JnCertificate jn_certify(const CubeDataTable& table, int q0, double alpha, double p,
                         double n_cap = 1e30, bool fat = false);
/// Same engine against externally supplied per-cube beta values (cascades).
JnCertificate jn_certify_beta(const DyadicGrid& grid, const std::vector<double>& beta, int q0,
                              double alpha, double p, double n_cap = 1e30);

struct GoodLambdaFit {
    double theta = 0.0;
    double C_fit = 0.0;
    double C_env = 0.0;       // envelope constant: zero violations by construction
    int violations_env = 0;
    double worst_fit_excess = 0.0;  // max ratio/(C_fit (gamma/eps)^theta)
    struct Row {
        double eps, gamma, alpha, lhs, rhs;
    };
    std::vector<Row> rows;
};

GoodLambdaFit good_lambda_scan(const CubeDataTable& tableG, const CubeDataTable& tableH,
                               const std::vector<double>& eps_grid,
                               const std::vector<double>& gamma_grid,
                               const std::vector<int>& scope, int n_alpha = 10);

struct AqLessNReport {
    struct PerQ {
        double q_exp;
        double sup_ratio;
        int worst_cube;
        int violations;  // zero denominator with nonzero numerator
    };
    std::vector<PerQ> per_exponent;
};
AqLessNReport aq_less_n_ratios(const CubeDataTable& tableG, const CubeDataTable& tableH,
                               const std::vector<double>& q_list, const std::vector<int>& scope);

struct BqToAdyadic {
    double c_q = 0.0;        // measured sup ratio at exponent q
    double h_inf = 0.0;
    double lhs = 0.0;        // ||G||_CME-dyadic
    double rhs = 0.0;        // C_{1/2,2} (2^{1/q} c_q h_inf)^2
    bool hypothesis_ok = false;  // Chebyshev level sets verified at alpha=1/2
    bool ok = false;
};
/// The (B)^D => (A)^D implication chain with measured constants.
BqToAdyadic bq_implies_adyadic(const CubeDataTable& tableG, const CubeDataTable& tableH, double q,
                               const std::vector<int>& scope);

struct NsReport {
    double q_exp = 0.0;
    double ratio = 0.0;        // ||N(u - u(X+))||_q / ||S-hat u||_q
    double ratio_unshifted = 0.0;
    double n_norm = 0.0;
    double s_norm = 0.0;
    bool violation = false;    // zero S with nonzero N
    double good_lambda_cstar = 0.0;  // measured C* over the alpha sweep at (eps, gamma)
    double corkscrew_value = 0.0;    // u(X^+_{Q0})
};
NsReport n_less_s_local(const CubeDataTable& table, const ScalarField& u, double q, int q0,
                        double eps = 1.0, double gamma = 0.125);

struct SubdomainCme {
    std::string name;
    double value = 0.0;
};
struct TransferReport {
    double lhs = 0.0;  // global CME of F
    double rhs = 0.0;  // sup over the catalog (CAD) or max{CME0, sup regimes} (UR)
    double ratio = 0.0;
    double cme0 = 0.0;
    std::vector<SubdomainCme> catalog;
};

/// CME of F2 with the subdomain's own boundary distance, over balls centered
/// on the subdomain boundary.
double region_cme(const std::function<double(const Vec2&)>& F2, const Region& region, int nballs,
                  int nradii, int quad_level = 7);

TransferReport transfer_cme_cad(const std::function<double(const Vec2&)>& F2,
                                const DyadicGrid& grid, const WhitneyDyadicStructure& s,
                                DomainMode domain, const std::vector<int>& catalog_cubes,
                                const BallFamily& global_family);
TransferReport transfer_cme_ur(const std::function<double(const Vec2&)>& F2,
                               const DyadicGrid& grid, const WhitneyDyadicStructure& s,
                               const CoronaDecomposition& corona,
                               const BallFamily& global_family,
                               const std::vector<Vec2>& interior_samples);

struct CoronaCmeSums {
    double sigma1 = 0.0;              // bad-cube sum
    std::vector<double> per_regime;   // regime-grouped sums
    double packing_sum = 0.0;         // sigma over bad cubes under q0
    double cme0 = 0.0;
    double packed_constant = 0.0;     // sigma1 / (cme0 * packing_sum)
};
CoronaCmeSums corona_cme_sum(const CubeDataTable& table, const CoronaDecomposition& corona, int q0,
                             double cme0_value);

struct KpReport {
    double lhs = 0.0;   // CME of grad A on the subdomain
    double rhs1 = 0.0;  // CME of grad A on the complement of E
    double rhs2 = 0.0;  // sup |grad A| dist(.,E) squared
    double C = 0.0;
    bool ok = false;
};
KpReport kp_restriction_check(const std::function<double(const Vec2&)>& gradA_mag,
                              const AmbientSet& set, const Region& subdomain,
                              const BallFamily& family, int nballs = 12, int quad_level = 7);

}  // namespace cmelab
