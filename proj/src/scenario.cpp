#include "cmelab/scenario.hpp"

#include <stdexcept>

namespace cmelab {

std::vector<std::string> scenario_registry() {
    return {"flat", "graph", "corner-graph", "polygon", "four-corners"};
}

Scenario make_scenario(const std::string& name, const ExperimentConfig& cfg) {
    Scenario sc;
    sc.name = name;
    if (name == "flat") {
        sc.set = make_flat_line();
        sc.domain = DomainMode::above_graph;
        sc.win_lo = cfg.get_num("grid", "window_lo", -1.0);
        sc.win_hi = cfg.get_num("grid", "window_hi", 1.0);
        sc.whitney_window = Box{{4 * sc.win_lo, -4.0}, {4 * sc.win_hi, 4.0}};
    } else if (name == "graph") {
        double slope = cfg.get_num("scenario", "graph_eta", 1.0 / 256.0);
        double W = 4.0;
        // zigzag with slopes +-slope across the window
        std::vector<Vec2> bp;
        for (int i = 0; i <= 4; ++i) {
            double x = -W + 2.0 * W * i / 4.0;
            double y = (i % 2 == 0) ? 0.0 : slope * (W / 2.0);
            bp.push_back({x, y});
        }
        sc.set = make_graph_set(bp);
        sc.domain = DomainMode::above_graph;
        sc.win_lo = cfg.get_num("grid", "window_lo", -1.0);
        sc.win_hi = cfg.get_num("grid", "window_hi", 1.0);
        sc.whitney_window = Box{{4 * sc.win_lo, -4.0}, {4 * sc.win_hi, 4.0}};
    } else if (name == "corner-graph") {
        sc.set = make_graph_set({{-8.0, 0.0}, {0.0, 0.0}, {8.0, 8.0}});
        sc.domain = DomainMode::above_graph;
        sc.win_lo = cfg.get_num("grid", "window_lo", -1.0);
        sc.win_hi = cfg.get_num("grid", "window_hi", 1.0);
        sc.whitney_window = Box{{-4.0, -4.0}, {4.0, 8.0}};
    } else if (name == "polygon") {
        sc.set = make_polygon_set({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
        sc.domain = DomainMode::polygon_interior;
        sc.win_lo = 0.0;
        sc.win_hi = 4.0;
        sc.whitney_window = Box{{-1.0, -1.0}, {2.0, 2.0}};
    } else if (name == "four-corners") {
        int level = static_cast<int>(cfg.get_int("scenario", "four_corners_level", 6));
        sc.set = make_four_corners(level);
        sc.domain = DomainMode::complement;
        sc.win_lo = 0.0;
        sc.win_hi = static_cast<double>(static_cast<const FourCornersSet&>(*sc.set).num_cells());
        sc.whitney_window = Box{{-0.5, -0.5}, {1.5, 1.5}};
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    return sc;
}

}  // namespace cmelab
