#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cmelab/structures.hpp"

namespace cmelab {

struct ScalarField {
    std::string name;
    std::function<double(const Vec2&)> u;
    std::function<Vec2(const Vec2&)> grad;
    std::string domain_tag;  // validity region of the closed forms
};

/// Closed-form harmonic catalog. Names: coordinate, re_power, im_power,
/// poisson_interval, log_potential.
ScalarField catalog_field(const std::string& name, const std::vector<double>& params = {});

/// 5-point-stencil Laplacian residual at X, normalized by h^2.
double harmonic_residual(const ScalarField& f, const Vec2& X, double h);

// ---------------------------------------------------------------------------
// Walk on spheres
// ---------------------------------------------------------------------------

struct DomainOracle {
    std::function<double(const Vec2&)> distance;
    std::function<Vec2(const Vec2&)> nearest;
};

DomainOracle complement_oracle(const AmbientSet& set);
DomainOracle region_oracle(const Region& region);

struct WosResult {
    double value = 0.0;
    double stderr_ = 0.0;
    double exclusion_rate = 0.0;
    int budget = 0;
};

WosResult wos_evaluate(const DomainOracle& dom, const std::function<double(const Vec2&)>& g,
                       const Vec2& X, int budget, double eps_shell, std::uint64_t seed,
                       int step_cap = 10000);

/// Field backed by the solver; the gradient comes from central differences
/// with h = dist(X)/64, which keeps the stencil interior.
ScalarField wos_field(const DomainOracle& dom, std::function<double(const Vec2&)> g, int budget,
                      double eps_shell, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Per-cube quadrature summaries
// ---------------------------------------------------------------------------

struct CubeData {
    double beta = 0.0;      // integral of G^2 dist^{1-n} over U_Q
    double beta_hat = 0.0;  // same over the fattened region
    double hmin = kInf;     // range of H over U_Q nodes (for shifted sups)
    double hmax = -kInf;
    double hmin_hat = kInf;
    double hmax_hat = -kInf;
    std::uint32_t nodes = 0;
};

/// Per dyadic cube summaries of a pair of fields over the Whitney regions.
/// One streaming pass: per-Whitney-box integrals are precomputed with
/// overlap-corrected node weights, then folded over each W_Q.
class CubeDataTable {
public:
    static CubeDataTable build(const WhitneyDyadicStructure& s, const ScalarField* G,
                               const ScalarField* H, int quad_level = 2, int workers = 1);

    const WhitneyDyadicStructure& structure() const { return *s_; }
    const CubeData& at(int q) const { return data_[q]; }
    double beta(int q) const { return data_[q].beta; }
    double beta_hat(int q) const { return data_[q].beta_hat; }
    /// sup |H| over U_Q nodes (shift c subtracts a constant first).
    double m(int q, double c = 0.0) const {
        const CubeData& d = data_[q];
        if (d.nodes == 0) return 0.0;
        return std::max(d.hmax - c, c - d.hmin);
    }
    double mhat(int q, double c = 0.0) const {
        const CubeData& d = data_[q];
        if (d.nodes == 0) return 0.0;
        return std::max(d.hmax_hat - c, c - d.hmin_hat);
    }
    void dump_csv(std::ostream& os) const;

private:
    const WhitneyDyadicStructure* s_ = nullptr;
    std::vector<CubeData> data_;
};

enum class InteriorCheck { moser, reverse_holder, caccioppoli };

/// Smallest constant making the interior display hold on quadrature nodes.
double check_interior(const ScalarField& f, const Box& I, InteriorCheck which, double p = 4.0,
                      int quad_level = 4);

}  // namespace cmelab
