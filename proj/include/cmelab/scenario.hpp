#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cmelab/ambient.hpp"
#include "cmelab/config.hpp"
#include "cmelab/geom.hpp"

namespace cmelab {

/// A named geometry setup: the set, the open set experiments run on, grid
/// parameter window and the Whitney window enclosing it.
struct Scenario {
    std::string name;
    std::unique_ptr<AmbientSet> set;
    DomainMode domain = DomainMode::complement;
    double win_lo = 0.0;
    double win_hi = 0.0;
    Box whitney_window;
};

std::vector<std::string> scenario_registry();

/// Built-in scenarios: flat, graph (slope from config), corner-graph,
/// polygon (unit square), four-corners (level from config).
Scenario make_scenario(const std::string& name, const ExperimentConfig& cfg);

}  // namespace cmelab
