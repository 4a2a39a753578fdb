#include <cmath>

#include "cmelab/ambient.hpp"
#include "cmelab/rng.hpp"
#include "doctest.h"

using namespace cmelab;

TEST_CASE("flat line distance and measure") {
    auto flat = make_flat_line();
    CHECK(flat->kind() == SetKind::flat);
    CHECK(flat->distance({0.3, -0.7}) == doctest::Approx(0.7));
    CHECK(flat->distance({1e3, 0.0}) == doctest::Approx(0.0));
    // sigma(Delta(x, r)) = 2r exactly
    for (double r : {0.1, 0.5, 2.0})
        CHECK(flat->measure_ball({0.25, 0.0}, r) == doctest::Approx(2.0 * r).epsilon(1e-12));
}

TEST_CASE("absolute-value graph distance") {
    // oracle: dense minimization over the two segments, frozen: sqrt(2)/2
    auto g = make_graph_set({{-4.0, 4.0}, {0.0, 0.0}, {4.0, 4.0}});
    CHECK(g->lipschitz_bound() == doctest::Approx(1.0));
    CHECK(g->distance({0.0, 1.0}) == doctest::Approx(0.70710678118654757).epsilon(1e-12));
}

TEST_CASE("graph measure stays within the slope bounds") {
    auto g = make_graph_set({{-4.0, 4.0}, {0.0, 0.0}, {4.0, 4.0}});
    double M = 1.0;
    auto pts = g->sample_points(13, -2.0, 2.0);
    for (const auto& wp : pts) {
        for (double r : {0.05, 0.2, 0.4}) {
            double ratio = g->measure_ball(wp.p, r) / r;
            CHECK(ratio >= 2.0 / std::sqrt(1.0 + M * M) - 1e-9);
            CHECK(ratio <= 2.0 * std::sqrt(1.0 + M * M) + 1e-9);
        }
    }
}

TEST_CASE("rejects non-monotone breakpoints") {
    CHECK_THROWS_AS(make_graph_set({{0.0, 0.0}, {0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_graph_set({{1.0, 0.0}, {0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("polygon: unit square oracles") {
    auto sq = make_polygon_set({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK(sq->distance({0.5, 0.5}) == doctest::Approx(0.5));
    CHECK(sq->diam() == doctest::Approx(std::sqrt(2.0)));
    CHECK(sq->total_measure() == doctest::Approx(4.0));
    // two edge stubs of length 0.1 at the corner
    CHECK(sq->measure_ball({0.0, 0.0}, 0.1) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(static_cast<PolygonSet&>(*sq).point_inside({0.5, 0.5}));
    CHECK(!static_cast<PolygonSet&>(*sq).point_inside({1.5, 0.5}));
}

TEST_CASE("self intersecting polygon rejected") {
    CHECK_THROWS_AS(make_polygon_set({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("four corners: level 1 geometry") {
    auto fc = make_four_corners(1);
    // nearest boundary point of the lower-left square to the center is (1/4,1/4)
    CHECK(fc->distance({0.5, 0.5}) == doctest::Approx(std::sqrt(2.0) / 4.0).epsilon(1e-12));
    CHECK(fc->total_measure() == doctest::Approx(1.0));
    CHECK(static_cast<FourCornersSet&>(*fc).num_cells() == 4);
    // total mass reachable from the middle
    CHECK(fc->measure_ball({0.125, 0.125}, 2.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("four corners: measure monotone and normalized") {
    auto fc = make_four_corners(3);
    Vec2 x = fc->nearest_point({0.0, 0.0});
    double prev = 0.0;
    for (double r : {0.01, 0.05, 0.2, 0.5, 1.0, 2.0}) {
        double m = fc->measure_ball(x, r);
        CHECK(m >= prev - 1e-12);
        prev = m;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("distance oracles are 1-Lipschitz on random pairs") {
    auto flat = make_flat_line();
    auto g = make_graph_set({{-4, 4}, {0, 0}, {4, 4}});
    auto fc = make_four_corners(3);
    auto sq = make_polygon_set({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    RngStream rng(42, 0);
    const AmbientSet* sets[] = {flat.get(), g.get(), fc.get(), sq.get()};
    for (const AmbientSet* s : sets) {
        for (int i = 0; i < 20000; ++i) {
            Vec2 a{rng.uniform(-2, 2), rng.uniform(-2, 2)};
            Vec2 b{rng.uniform(-2, 2), rng.uniform(-2, 2)};
            double lhs = std::abs(s->distance(a) - s->distance(b));
            CHECK(lhs <= dist(a, b) + 1e-10);
        }
    }
}

TEST_CASE("adr estimates") {
    auto flat = make_flat_line();
    AdrEstimate est = estimate_adr(*flat, 1.0 / 64, 0.5, 17);
    CHECK(est.c_lower == doctest::Approx(2.0).epsilon(0.01));
    CHECK(est.c_upper == doctest::Approx(2.0).epsilon(0.01));

    auto g = make_graph_set({{-4, 4}, {0, 0}, {4, 4}});
    AdrEstimate eg = estimate_adr(*g, 1.0 / 64, 0.5, 17);
    CHECK(eg.c_lower >= std::sqrt(2.0) * 0.98);
    CHECK(eg.c_upper <= 2.0 * std::sqrt(2.0) * 1.02);

    CHECK_THROWS_AS(estimate_adr(*flat, 0.5, 0.25, 4), std::invalid_argument);
}

TEST_CASE("adr estimate level stability on four corners") {
    auto f6 = make_four_corners(6);
    auto f7 = make_four_corners(7);
    AdrEstimate e6 = estimate_adr(*f6, 1.0 / 256, 0.25, 9);
    AdrEstimate e7 = estimate_adr(*f7, 1.0 / 256, 0.25, 9);
    CHECK(e6.c_upper / e6.c_lower < 1e3);
    CHECK(std::abs(e6.c_lower - e7.c_lower) <= 0.1 * e6.c_lower);
    CHECK(std::abs(e6.c_upper - e7.c_upper) <= 0.1 * e6.c_upper);
}

TEST_CASE("corkscrew points") {
    auto flat = make_flat_line();
    CorkscrewResult c = corkscrew(*flat, {0, 0}, 1.0, Side::plus);
    CHECK(c.point.x == doctest::Approx(0.0));
    CHECK(c.point.y == doctest::Approx(0.5));
    CHECK(c.constant == doctest::Approx(2.0));
    CHECK(c.at_published_constant);

    auto g = make_graph_set({{-4, 4}, {0, 0}, {4, 4}});
    CorkscrewResult cg = corkscrew(*g, {0, 0}, 1.0, Side::plus);
    CHECK(cg.at_published_constant);
    CHECK(g->distance(cg.point) >= 1.0 / (2.0 * std::sqrt(2.0)) - 1e-12);
    CHECK(dist(cg.point, {0, 0}) < 1.0);

    auto fc = make_four_corners(4);
    CorkscrewResult cf = corkscrew(*fc, {0.0, 0.0}, 0.25, Side::any);
    CHECK(cf.at_published_constant);
    CHECK(fc->distance(cf.point) >= 0.25 / 16.0 - 1e-12);
    CHECK(dist(cf.point, {0.0, 0.0}) < 0.25);
}
