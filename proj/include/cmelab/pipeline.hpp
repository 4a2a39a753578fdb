#pragma once

#include <string>

#include "cmelab/config.hpp"
#include "cmelab/report.hpp"

namespace cmelab {

/// Runs one experiment subcommand against a config and writes its artifacts
/// (CSV dumps and the named-scalar report) under out_dir. Returns the report.
/// Subcommands: build-geometry, decompose, corona, estimate, jn, good-lambda,
/// ns, transference, riesz.
ExperimentReport run_pipeline(const std::string& subcommand, const ExperimentConfig& cfg,
                              const std::string& out_dir);

}  // namespace cmelab
