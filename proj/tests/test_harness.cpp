#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cmelab/config.hpp"
#include "cmelab/parallel.hpp"
#include "cmelab/pipeline.hpp"
#include "cmelab/report.hpp"
#include "cmelab/scenario.hpp"
#include "doctest.h"

using namespace cmelab;

TEST_CASE("config parse round trip and hashing") {
    std::string text = R"(# comment
[scenario]
name = flat

[grid]
depth = 6
window_lo = -1   # inline comment
window_hi = 1
)";
    ExperimentConfig cfg = ExperimentConfig::parse(text);
    CHECK(cfg.get("scenario", "name") == "flat");
    CHECK(cfg.get_int("grid", "depth", 0) == 6);
    CHECK(cfg.get_num("grid", "window_lo", 0) == doctest::Approx(-1.0));
    CHECK(cfg.get("nope", "nothing", "dflt") == "dflt");

    ExperimentConfig cfg2 = ExperimentConfig::parse(cfg.canonical_dump());
    CHECK(cfg.hash() == cfg2.hash());

    cfg.set("grid", "depth", "8");
    CHECK(cfg.hash() != cfg2.hash());

    CHECK_THROWS_AS(ExperimentConfig::parse("key without equals\n"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::parse("[unclosed\n"), std::invalid_argument);
}

TEST_CASE("scenario registry") {
    auto names = scenario_registry();
    CHECK(names.size() == 5);
    ExperimentConfig cfg = ExperimentConfig::parse("");
    for (const auto& n : names) {
        Scenario sc = make_scenario(n, cfg);
        CHECK(sc.set != nullptr);
        CHECK(sc.name == n);
    }
    CHECK_THROWS_AS(make_scenario("bogus", cfg), std::invalid_argument);
}

TEST_CASE("report serialization and diff") {
    ExperimentReport a;
    a.set_provenance(1, 2, 3);
    a.add("alpha", 0.5);
    a.add("beta", 1.0 / 3.0);
    a.add_verdict("ok", true);
    CHECK(a.all_pass());
    CHECK(a.value("alpha") == 0.5);
    CHECK_THROWS_AS(a.value("nope"), std::out_of_range);

    std::filesystem::create_directories("/tmp/cmelab_test");
    a.write("/tmp/cmelab_test", "rep_a");
    ExperimentReport b = a;
    b.write("/tmp/cmelab_test", "rep_b");
    std::string summary;
    CHECK(ExperimentReport::diff_files("/tmp/cmelab_test/rep_a.csv", "/tmp/cmelab_test/rep_b.csv",
                                       0.0, &summary) == 0);

    ExperimentReport c;
    c.set_provenance(1, 2, 3);
    c.add("alpha", 0.5000001);
    c.add("beta", 1.0 / 3.0);
    c.add_verdict("ok", true);
    c.write("/tmp/cmelab_test", "rep_c");
    CHECK(ExperimentReport::diff_files("/tmp/cmelab_test/rep_a.csv", "/tmp/cmelab_test/rep_c.csv",
                                       0.0, &summary) == 1);
    CHECK(ExperimentReport::diff_files("/tmp/cmelab_test/rep_a.csv", "/tmp/cmelab_test/rep_c.csv",
                                       1e-3, &summary) == 0);
}

TEST_CASE("environment overrides") {
    setenv("CMELAB_GRID_DEPTH", "9", 1);
    ExperimentConfig cfg = ExperimentConfig::parse("[grid]\ndepth = 5\n");
    cfg.apply_env_overrides();
    CHECK(cfg.get_int("grid", "depth", 0) == 9);
    unsetenv("CMELAB_GRID_DEPTH");
}

TEST_CASE("parallel_for is worker-count independent") {
    std::vector<double> a(100), b(100);
    parallel_for(100, 1, [&](int i) { a[i] = std::sqrt(static_cast<double>(i)); });
    parallel_for(100, 4, [&](int i) { b[i] = std::sqrt(static_cast<double>(i)); });
    CHECK(a == b);
}

TEST_CASE("pipeline runs are byte deterministic") {
    std::string text = R"(
[scenario]
name = flat
[grid]
depth = 5
window_lo = 0
window_hi = 1
[field]
name = poisson_interval
params = -1 1
[experiment]
seed = 7
)";
    ExperimentConfig cfg = ExperimentConfig::parse(text);
    ExperimentReport r1 = run_pipeline("estimate", cfg, "/tmp/cmelab_run1");
    ExperimentReport r2 = run_pipeline("estimate", cfg, "/tmp/cmelab_run2");
    CHECK(r1.to_csv() == r2.to_csv());
    // artifacts identical byte for byte
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp("/tmp/cmelab_run1/table.csv") == slurp("/tmp/cmelab_run2/table.csv"));
    CHECK(!slurp("/tmp/cmelab_run1/table.csv").empty());

    // worker count does not change results
    ExperimentConfig cfg4 = cfg;
    cfg4.set("experiment", "workers", "4");
    ExperimentReport r4 = run_pipeline("estimate", cfg4, "/tmp/cmelab_run4");
    CHECK(r4.value("cme") == r1.value("cme"));
    CHECK(r4.value("cme_dyadic") == r1.value("cme_dyadic"));
}

TEST_CASE("pipeline subcommands produce their artifacts") {
    std::string text = R"(
[scenario]
name = flat
[grid]
depth = 5
window_lo = 0
window_hi = 1
)";
    ExperimentConfig cfg = ExperimentConfig::parse(text);
    ExperimentReport g = run_pipeline("build-geometry", cfg, "/tmp/cmelab_geo");
    CHECK(g.all_pass());
    CHECK(std::filesystem::exists("/tmp/cmelab_geo/grid.csv"));
    ExperimentReport d = run_pipeline("decompose", cfg, "/tmp/cmelab_geo");
    CHECK(d.all_pass());
    CHECK(d.value("whitney_440_violations") == 0.0);
    ExperimentReport c = run_pipeline("corona", cfg, "/tmp/cmelab_geo");
    CHECK(c.value("bad_cubes") == 0.0);
    CHECK_THROWS_AS(run_pipeline("bogus", cfg, "/tmp/cmelab_geo"), std::invalid_argument);
}

TEST_CASE("jn pipeline flags an impossible cap") {
    std::string text = R"(
[scenario]
name = flat
[grid]
depth = 5
window_lo = 0
window_hi = 1
[field]
name = poisson_interval
params = -1 1
[jn]
n_cap = 1e-9
)";
    ExperimentConfig cfg = ExperimentConfig::parse(text);
    CHECK_THROWS_AS(run_pipeline("jn", cfg, "/tmp/cmelab_jn"), std::runtime_error);
}
