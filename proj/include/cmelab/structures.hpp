#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "cmelab/ambient.hpp"
#include "cmelab/dyadic.hpp"
#include "cmelab/geom.hpp"
#include "cmelab/whitney.hpp"

namespace cmelab {

// ---------------------------------------------------------------------------
// Regions: finite unions of dilated Whitney boxes with exact boundaries.
// ---------------------------------------------------------------------------

/// Exact rectilinear boundary of a union of axis-aligned boxes, as a segment
/// soup with total length and a length-measure sampler.
struct RegionBoundary {
    std::vector<Segment> segments;
    double length = 0.0;

    double dist(const Vec2& p) const;
    /// Deterministic midpoint sample of the length measure sigma*.
    std::vector<WeightedPoint> sample(int count) const;

private:
    struct SegIndex {
        Box bbox;
        double cell = 1.0;
        int nx = 0, ny = 0;
        std::vector<std::vector<int>> buckets;
    };
    mutable std::shared_ptr<SegIndex> index_;
    void build_index() const;
};

RegionBoundary region_boundary(const std::vector<Box>& boxes);

class Region {
public:
    Region() = default;
    explicit Region(std::vector<Box> boxes);

    const std::vector<Box>& boxes() const { return boxes_; }
    const Box& bbox() const { return bbox_; }
    bool empty() const { return boxes_.empty(); }

    /// Membership in the closed union.
    bool contains(const Vec2& p) const;
    /// Membership in int(union): closed-union member not on the boundary.
    bool contains_interior(const Vec2& p) const;

    const RegionBoundary& boundary() const;
    /// Overlap-counted total box area.
    double area_boxsum() const;
    /// Rectangle list followed by the boundary polyline segments.
    void dump_csv(std::ostream& os) const;

private:
    std::vector<Box> boxes_;
    Box bbox_;
    // uniform bucket index for membership queries
    int nx_ = 0, ny_ = 0;
    double cell_ = 0.0;
    std::vector<std::vector<int>> buckets_;
    mutable std::shared_ptr<RegionBoundary> boundary_;
};

// ---------------------------------------------------------------------------
// Corona decomposition (bilateral, graph-like sets)
// ---------------------------------------------------------------------------

/// Approximating line z -> slope*z + offset in graph coordinates.
struct RegimeLine {
    double slope = 0.0;
    double offset = 0.0;
    double eval(double z) const { return slope * z + offset; }
    double dist(const Vec2& p) const {
        return std::abs(p.y - slope * p.x - offset) / std::sqrt(1.0 + slope * slope);
    }
};

struct StoppingRegime {
    int root = -1;  // Q(S)
    RegimeLine line;
    std::vector<int> cubes;  // coherent set, includes root
};

struct CoronaDecomposition {
    std::vector<StoppingRegime> regimes;
    std::vector<int> bad;               // B
    std::vector<int> regime_of;         // per cube id: regime index or -1 (bad)
    double eta = 0.0;
    double K = 0.0;

    bool is_bad(int id) const { return regime_of[id] < 0; }
    /// Carleson packing ratio at Q: (sum of sigma over regime roots under Q
    /// plus sigma over bad cubes under Q) / sigma(Q).
    double packing_ratio(const DyadicGrid& grid, int q) const;
    double max_packing_ratio(const DyadicGrid& grid) const;
    void dump(std::ostream& os, const DyadicGrid& grid) const;
};

/// Top-down stopping time with total-least-squares line fits against the
/// bilateral condition at threshold eta * l(Q).
CoronaDecomposition build_corona(const DyadicGrid& grid, double eta, double K, int samples = 64);

// ---------------------------------------------------------------------------
// Whitney-dyadic structure
// ---------------------------------------------------------------------------

enum class StructureMode { adr, cad, ur };

struct StructureParams {
    double eta = 1.0 / 256.0;  // 2^-8
    double K = 16384.0;        // 2^14
    double tau = 1.0 / 64.0;   // 2^-6, within (0, tau0/4]
};

/// The family {W_Q}: eq-3.1 base family W0_Q plus mode-dependent augmentation.
/// Member sets are enumerated on demand (never stored densely); regions are
/// materialized per request. Immutable after build.
class WhitneyDyadicStructure {
public:
    static WhitneyDyadicStructure build(const DyadicGrid& grid, const WhitneyDecomposition& w,
                                        StructureMode mode, StructureParams params,
                                        DomainMode domain = DomainMode::complement,
                                        const CoronaDecomposition* corona = nullptr);

    const DyadicGrid& grid() const { return *grid_; }
    const WhitneyDecomposition& whitney() const { return *whitney_; }
    StructureMode mode() const { return mode_; }
    const StructureParams& params() const { return params_; }
    DomainMode domain() const { return domain_; }
    const CoronaDecomposition* corona() const { return corona_; }

    /// Base family W0_Q (eq. 3.1 filter); visits Whitney ids in increasing order.
    void for_each_w0(int q, const std::function<void(int)>& fn) const;
    bool in_w0(int q, int whitney_id) const;
    /// Augmented family W_Q per the structure mode. side: +1/-1 restricts to a
    /// UR half (ignored otherwise).
    std::vector<int> wq(int q, int side = 0) const;

    /// Deterministic "center" corkscrew X_Q^side: center of the chosen base
    /// cube nearest to x_Q on the requested side.
    Vec2 corkscrew_point(int q, int side = +1) const;

    Region whitney_region(int q, bool fat = false) const;       // U_Q / hat-U_Q
    Region carleson_box(int q) const;                            // T_Q
    Region carleson_box_ball(const Vec2& x, double r) const;     // T_Delta
    /// Discrete local sawtooth D_{F,Q0} and its region Omega_{F,Q0}.
    std::pair<Region, std::vector<int>> sawtooth(const std::vector<int>& F, int q0) const;
    Region cone(double param_x) const;                           // Gamma(x)
    Region cone_local(double param_x, int q) const;              // Gamma^Q(x)
    /// Streaming membership test for the (optionally fattened) dyadic cone.
    bool cone_contains(double param_x, const Vec2& Y, int q_local = -1, bool fat = false) const;
    /// Streaming membership in T_Q without materializing the region: looks for
    /// Q' under q (near the boundary point closest to Y) owning a Whitney
    /// dilate that contains Y.
    bool carleson_contains(int q, const Vec2& Y, bool fat = false) const;
    /// Omega_S'^± for a regime (ur mode).
    std::pair<Region, Region> regime_domains(int regime) const;

    /// Largest violation factor of the eq-2.whitney2 bounds over W_Q (1 = tight).
    double whitney2_constant(int q) const;

    /// Whitney cubes on a given side of the regime's graph line (ur mode).
    int side_of_box(const Box& b, const RegimeLine& line) const;

private:
    const DyadicGrid* grid_ = nullptr;
    const WhitneyDecomposition* whitney_ = nullptr;
    StructureMode mode_ = StructureMode::adr;
    StructureParams params_;
    DomainMode domain_ = DomainMode::complement;
    const CoronaDecomposition* corona_ = nullptr;

    bool domain_ok(int whitney_id) const;
    std::vector<int> members_with_connectors(int q, int side) const;
    Region region_from_cubes(const std::vector<int>& qs, double tau) const;
};

/// Traditional cone predicate |Y - x| <= (1+kappa) dist(Y, E), truncated at r.
bool trad_cone_contains(const AmbientSet& set, const Vec2& x, double kappa, const Vec2& Y,
                        double r = kInf);

/// The unique k with 2^{-k-1} < 200 r <= 2^{-k}.
int t_delta_generation(double r);

// ---------------------------------------------------------------------------
// Big pieces of Lipschitz subdomains
// ---------------------------------------------------------------------------

/// Graph-strip subdomain above Q with boundary containing sigma(Q)-many of E.
struct LipschitzSubdomain {
    int q = -1;
    double height = 0.0;
    double theta = 0.0;        // sigma(dOmega_Q cap Q) / sigma(Q)
    double M = 0.0;            // Lipschitz character triple
    int m = 1;
    double C0 = 0.0;
    std::vector<Segment> boundary;
    double param_a = 0.0, param_b = 0.0;

    bool contains(const Vec2& p, const GraphSet& g) const;
    double boundary_dist(const Vec2& p) const;
    std::vector<WeightedPoint> boundary_sample(int count) const;
    /// Measured corkscrew constant over descendants at scales >= floor.
    double corkscrew_audit(const DyadicGrid& grid, int depth_cap) const;
};

LipschitzSubdomain big_pieces_subdomain(const DyadicGrid& grid, int q, double height_factor = 0.5);

}  // namespace cmelab
