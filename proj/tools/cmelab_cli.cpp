// Command-line front end: runs the experiment pipelines against a text config
// and writes CSV/JSON artifacts. Exit codes: 0 all verdicts pass, 1 verdict
// failure, 2 input error.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmelab/pipeline.hpp"
#include "cmelab/report.hpp"
#include "cmelab/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cmelab: dyadic/Whitney geometry and Carleson-estimate experiments"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir = "out", old_report, new_report;
    long long seed = -1;
    int workers = -1, depth = -1;
    bool list_scenarios = false;
    double diff_tol = 0.0;

    app.add_flag("--list-scenarios", list_scenarios, "print the scenario registry and exit");

    std::vector<std::string> subs = {"build-geometry", "decompose", "corona",      "estimate",
                                     "jn",             "good-lambda", "ns",          "transference",
                                     "riesz"};
    std::vector<CLI::App*> sub_apps;
    for (const auto& name : subs) {
        CLI::App* s = app.add_subcommand(name, "run the " + name + " pipeline");
        s->add_option("--config", config_path, "experiment config file")->required();
        s->add_option("--out", out_dir, "output directory");
        s->add_option("--seed", seed, "seed override");
        s->add_option("--workers", workers, "worker count override");
        s->add_option("--depth", depth, "grid depth override");
        sub_apps.push_back(s);
    }
    CLI::App* rep_cmd = app.add_subcommand("report", "diff two report CSVs for regression gating");
    rep_cmd->add_option("old", old_report, "baseline report.csv")->required();
    rep_cmd->add_option("new", new_report, "candidate report.csv")->required();
    rep_cmd->add_option("--tol", diff_tol, "relative tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (list_scenarios) {
        for (const auto& name : cmelab::scenario_registry()) std::printf("%s\n", name.c_str());
        return 0;
    }

    try {
        if (rep_cmd->parsed()) {
            std::string summary;
            int diffs = cmelab::ExperimentReport::diff_files(old_report, new_report, diff_tol,
                                                             &summary);
            std::fputs(summary.c_str(), stdout);
            std::printf("%d differing rows\n", diffs);
            return diffs == 0 ? 0 : 1;
        }
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!sub_apps[i]->parsed()) continue;
            cmelab::ExperimentConfig cfg = cmelab::ExperimentConfig::load(config_path);
            cfg.apply_env_overrides();
            if (seed >= 0) cfg.set("experiment", "seed", std::to_string(seed));
            if (workers > 0) cfg.set("experiment", "workers", std::to_string(workers));
            if (depth > 0) cfg.set("grid", "depth", std::to_string(depth));
            cmelab::ExperimentReport rep = cmelab::run_pipeline(subs[i], cfg, out_dir);
            rep.write(out_dir, subs[i]);
            std::printf("%s\n", rep.to_json().c_str());
            return rep.all_pass() ? 0 : 1;
        }
        std::fprintf(stderr, "no subcommand given (try --help)\n");
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
