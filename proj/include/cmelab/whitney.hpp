#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "cmelab/ambient.hpp"
#include "cmelab/dyadic.hpp"
#include "cmelab/geom.hpp"

namespace cmelab {

constexpr double kTau0 = 0.0625;  // tau_0 = 2^-4

/// Whitney decomposition of (a window of) R^2 \ E into closed dyadic boxes
/// satisfying 4 diam(I) <= dist(4I, E) <= dist(I, E) <= 40 diam(I).
/// Cubes are stored per scale, sorted by (iy, ix); ids are stable.
class WhitneyDecomposition {
public:
    static WhitneyDecomposition build(const AmbientSet& set, const Box& window, int depth);

    const AmbientSet& set() const { return *set_; }
    const Box& window() const { return window_; }
    int depth() const { return depth_; }
    int size() const { return static_cast<int>(ix_.size()); }

    double side(int id) const { return std::ldexp(1.0, -static_cast<int>(exp_[id])); }
    int scale_exp(int id) const { return exp_[id]; }
    Box box(int id) const {
        double s = side(id);
        Vec2 lo{ix_[id] * s, iy_[id] * s};
        return {lo, {lo.x + s, lo.y + s}};
    }
    double dist_E(int id) const { return dist_[id]; }
    Vec2 center(int id) const { return box(id).center(); }

    /// Unique cube whose half-open normalization contains X; -1 outside coverage.
    int containing_cube(const Vec2& X) const;
    /// Visit cubes that share a boundary point with `id`.
    void neighbors(int id, const std::function<void(int)>& fn) const;
    /// Visit cubes with scale exponent in [e_lo, e_hi] whose box intersects `query`.
    void for_cubes_near(const Box& query, int e_lo, int e_hi, const std::function<void(int)>& fn) const;

    std::pair<int, int> scale_exp_range() const { return {e_min_, e_max_}; }

    void dump_csv(std::ostream& os) const;
    std::uint64_t geometry_hash() const;

private:
    const AmbientSet* set_ = nullptr;
    Box window_;
    int depth_ = 0;
    int e_min_ = 0, e_max_ = 0;

    // parallel arrays, grouped by scale exponent then sorted by (iy, ix)
    std::vector<std::int32_t> ix_, iy_;
    std::vector<std::int8_t> exp_;
    std::vector<double> dist_;
    std::vector<int> scale_begin_;  // per exponent offset (index e - e_min_)
    std::vector<std::int32_t> row_lo_, row_hi_;  // per-scale iy range (clamps queries)

    friend struct WhitneyBuilder;
    std::pair<int, int> scale_span(int e) const;
    int find_at_scale(int e, std::int64_t ix, std::int64_t iy) const;
};

/// Concentric dilate (1+tau)I; tau must lie in (0, tau_0].
Box dilate(const Box& I, double tau);

/// Nearest dyadic cube to Whitney cube `id` with l(Q) = l(I); smallest (k, j)
/// among minimizers.
int nearest_dyadic(const WhitneyDecomposition& w, int id, const DyadicGrid& grid);

}  // namespace cmelab
