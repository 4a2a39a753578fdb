#include <cmath>
#include <set>
#include <sstream>

#include "cmelab/dyadic.hpp"
#include "cmelab/rng.hpp"
#include "doctest.h"

using namespace cmelab;

namespace {

void check_partition(const DyadicGrid& g) {
    for (int id = 0; id < g.size(); ++id) {
        const DyadicCube& q = g.cube(id);
        if (q.k == g.kmax()) continue;
        auto [cb, ce] = g.children(id);
        REQUIRE(ce > cb);
        double lo = g.cube(cb).a;
        double hi = g.cube(ce - 1).b;
        CHECK(lo == doctest::Approx(q.a).epsilon(1e-14));
        CHECK(hi == doctest::Approx(q.b).epsilon(1e-14));
        double sig = 0.0;
        for (int c = cb; c < ce; ++c) {
            CHECK(g.cube(c).parent == id);
            sig += g.cube(c).sigma;
        }
        CHECK(sig == doctest::Approx(q.sigma).epsilon(1e-12));
    }
}

}  // namespace

TEST_CASE("flat grid is the standard dyadic mesh") {
    auto flat = make_flat_line();
    DyadicGrid g = DyadicGrid::build(*flat, 0, 6, -1.0, 1.0);
    auto [b, e] = g.generation(0);
    CHECK(e - b == 2);
    CHECK(g.cube(b).a == doctest::Approx(-1.0));
    const DyadicCube& q = g.cube(g.find(0, 0.5));
    CHECK(q.center.x == doctest::Approx(0.5));
    CHECK(q.r_ball == doctest::Approx(0.25));
    // children of [0,1) are [0,1/2) and [1/2,1)
    auto [cb, ce] = g.children(g.find(0, 0.5));
    CHECK(ce - cb == 2);
    CHECK(g.cube(cb).a == doctest::Approx(0.0));
    CHECK(g.cube(cb).b == doctest::Approx(0.5));
    check_partition(g);
}

TEST_CASE("descendant count on the flat line is a full binary tree") {
    auto flat = make_flat_line();
    DyadicGrid g = DyadicGrid::build(*flat, 0, 5, 0.0, 1.0);
    int q0 = g.find(0, 0.25);
    int count = 0;
    g.descendants(q0, [&](int) { ++count; });
    CHECK(count == (1 << 6) - 1);  // depth 5 below the root
    CHECK_THROWS_AS(g.parent(q0), std::runtime_error);
}

TEST_CASE("graph grid nesting and containment at depth") {
    auto g = make_graph_set({{-4, 4}, {0, 0}, {4, 4}});
    DyadicGrid grid = DyadicGrid::build(*g, 0, 8, -1.0, 1.0);
    check_partition(grid);
    // surface ball containment Delta(x_Q, 2 r_Q) subset Q for every cube
    for (int id = 0; id < grid.size(); ++id)
        CHECK(grid.surface_ball_inside(id, 2.0 * grid.cube(id).r_ball));
    // measured C of Q subset Delta(x_Q, C r_Q)
    for (int id = 0; id < grid.size(); ++id) CHECK(grid.cube_ball_C(id) <= 2.0 * std::sqrt(2.0) * 1.01);
}

TEST_CASE("four corners grid aligns with the replication levels") {
    auto fc = make_four_corners(3);
    DyadicGrid g = DyadicGrid::build(*fc, 0, 6, 0, 0);
    auto [b6, e6] = g.generation(6);
    CHECK(e6 - b6 == 64);  // level-3 squares at generation 2L
    const auto& fcs = static_cast<const FourCornersSet&>(*fc);
    for (int id = b6; id < e6; ++id) {
        const DyadicCube& q = g.cube(id);
        CHECK(q.b - q.a == doctest::Approx(1.0));  // one leaf cell each
        CHECK(q.r_ball == doctest::Approx(fcs.cell_side() / 4.0));
        CHECK(g.surface_ball_inside(id, 2.0 * q.r_ball));
    }
    // each cube at a replication generation has exactly 4 children
    auto [b1, e1] = g.generation(1);
    CHECK(e1 - b1 == 4);
    auto [b0, e0] = g.generation(0);
    CHECK(e0 - b0 == 1);
    auto [cb, ce] = g.children(b0);
    CHECK(ce - cb == 4);
    // pass-through generations have singleton children
    auto [cb1, ce1] = g.children(b1);
    CHECK(ce1 - cb1 == 1);
    check_partition(g);
}

TEST_CASE("polygon grid covers the perimeter with one root") {
    auto sq = make_polygon_set({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    DyadicGrid g = DyadicGrid::build(*sq, -2, 4, 0, 0);
    auto tops = g.top_cubes();
    CHECK(tops.size() == 1);
    CHECK(g.cube(tops[0]).sigma == doctest::Approx(4.0));
    check_partition(g);
    for (int id = 0; id < g.size(); ++id)
        CHECK(g.surface_ball_inside(id, 2.0 * g.cube(id).r_ball));
}

TEST_CASE("thin boundary ratio") {
    auto flat = make_flat_line();
    DyadicGrid g = DyadicGrid::build(*flat, 0, 4, 0.0, 1.0);
    int q0 = g.find(0, 0.5);
    // two end strips of length rho * l(Q): ratio 1/4 at rho = 1/8
    CHECK(thin_boundary_ratio(g, q0, 0.125, 4096) == doctest::Approx(0.25).epsilon(2e-3));
    // monotone to zero
    double prev = 1.0;
    for (double rho : {0.25, 0.125, 0.0625, 0.03125}) {
        double v = thin_boundary_ratio(g, q0, rho, 4096);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(prev <= 0.07);
}

TEST_CASE("thin boundary exponent regression on a graph") {
    auto g = make_graph_set({{-4, 4}, {0, 0}, {4, 4}});
    DyadicGrid grid = DyadicGrid::build(*g, 0, 6, -1.0, 1.0);
    int q0 = grid.find(1, 0.3);
    // log-log fit of ratio vs rho over 2^-1..2^-6
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int j = 1; j <= 6; ++j) {
        double rho = std::ldexp(1.0, -j);
        double ratio = thin_boundary_ratio(grid, q0, rho, 8192);
        REQUIRE(ratio > 0.0);
        double x = std::log(rho), y = std::log(ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    double gamma = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(gamma > 0.0);
    // R^2 of the fit
    double mean_y = sy / n, ss_tot = 0, ss_res = 0;
    double intercept = mean_y - gamma * sx / n;
    for (int j = 1; j <= 6; ++j) {
        double rho = std::ldexp(1.0, -j);
        double y = std::log(thin_boundary_ratio(grid, q0, rho, 8192));
        double fit = intercept + gamma * std::log(rho);
        ss_tot += (y - mean_y) * (y - mean_y);
        ss_res += (y - fit) * (y - fit);
    }
    CHECK(1.0 - ss_res / ss_tot >= 0.9);
}

TEST_CASE("dyadic maximal function") {
    auto flat = make_flat_line();
    DyadicGrid g = DyadicGrid::build(*flat, 0, 6, 0.0, 1.0);
    int q0 = g.find(0, 0.5);
    auto [l0, l1] = g.leaf_span(q0);
    int nl = l1 - l0;
    std::vector<double> f(nl, 0.0);
    for (int i = 0; i < nl; ++i)
        if (g.cube(l0 + i).center.x < 0.5) f[i] = 1.0;

    auto m1 = dyadic_maximal(g, q0, f, 1.0);
    auto m2 = dyadic_maximal(g, q0, f, 2.0);
    int at = g.leaf_at(0.75) - l0;
    CHECK(m1[at] == doctest::Approx(0.5));
    CHECK(m2[at] == doctest::Approx(std::sqrt(0.5)));

    // constant f is a fixed point
    std::vector<double> c(nl, 3.25);
    auto mc = dyadic_maximal(g, q0, c, 1.0);
    for (double v : mc) CHECK(v == doctest::Approx(3.25));

    // monotone and dominating
    RngStream rng(5, 0);
    std::vector<double> a(nl), b(nl);
    for (int i = 0; i < nl; ++i) {
        a[i] = rng.uniform();
        b[i] = a[i] + rng.uniform();
    }
    auto ma = dyadic_maximal(g, q0, a, 1.0);
    auto mb = dyadic_maximal(g, q0, b, 1.0);
    for (int i = 0; i < nl; ++i) {
        CHECK(ma[i] <= mb[i] + 1e-12);
        CHECK(ma[i] >= a[i] - 1e-12);
    }
}

TEST_CASE("grid dump is stable and hashable") {
    auto flat = make_flat_line();
    DyadicGrid g1 = DyadicGrid::build(*flat, 0, 4, 0.0, 1.0);
    DyadicGrid g2 = DyadicGrid::build(*flat, 0, 4, 0.0, 1.0);
    std::ostringstream a, b;
    g1.dump_csv(a);
    g2.dump_csv(b);
    CHECK(a.str() == b.str());
    CHECK(g1.geometry_hash() == g2.geometry_hash());
    CHECK(a.str().substr(0, 2) == "k,");
}

TEST_CASE("net grid fallback builds a christ hierarchy") {
    auto flat = make_flat_line();
    auto pts = flat->sample_points(64, 0.0, 1.0);
    NetGrid net = build_net_grid(pts, 0, 4);
    REQUIRE(net.gen_begin.size() >= 2);
    // every generation assigns all samples to some cube
    for (std::size_t g = 0; g + 1 < net.gen_begin.size(); ++g) {
        std::size_t covered = 0;
        for (int c = net.gen_begin[g]; c < net.gen_begin[g + 1]; ++c)
            covered += net.cubes[c].members.size();
        CHECK(covered == pts.size());
    }
    // net separation at generation k is >= 2^-k
    for (std::size_t g = 0; g + 1 < net.gen_begin.size(); ++g) {
        for (int i = net.gen_begin[g]; i < net.gen_begin[g + 1]; ++i)
            for (int j = i + 1; j < net.gen_begin[g + 1]; ++j)
                CHECK(dist(net.cubes[i].net_point, net.cubes[j].net_point) >=
                      std::ldexp(1.0, -net.cubes[i].k) - 1e-12);
    }
}
