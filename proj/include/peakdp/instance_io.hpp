#pragma once

// JSON instance files.
//
//   {
//     "horizon": 2,
//     "peak_price": 30,
//     "setup_cost": 0,
//     "penalty_form": "quadratic",          // or "linear"; default quadratic
//     "a": [1, 1], "b": [20, 20], "d": [1, 1],  // scalars are broadcast
//     "heat_support": [[0.5, 1.0], [2.0]],
//     "heat_prob":    [[0.5, 0.5], [1.0]],
//     "x_init": 0, "y_init": 0,
//     "phase": ["off", "on"],                // optional
//     "grid": {"x_min": -3, "x_max": 3, "dx": 0.5, "u_max": 3}  // optional
//   }
//
// For the linear penalty form "b" and "d" are the slopes above and below 0.

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "peakdp/model.hpp"

namespace peakdp {

struct GridSpec {
    double x_min = -3.0;
    double x_max = 3.0;
    double dx = 0.5;
    double u_max = 3.0;

    Grids build() const { return Grids(x_min, x_max, dx, u_max); }
};

struct Instance {
    ProblemSpec spec;
    std::optional<GridSpec> grid;
    std::optional<StagePhase> phase;
};

Instance instance_from_json(const nlohmann::json& doc);
nlohmann::json instance_to_json(const Instance& instance);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& instance, const std::filesystem::path& path);

}  // namespace peakdp
