#pragma once

// Checks of the structural properties of solved instances: monotonicity and
// discrete convexity of V, the turn-off curve g_t(y) with the three action
// regimes it induces, and (s, S) threshold fits when peaks are free.
//
// Every check reads only solved tables and reports violations instead of
// throwing. Temperature-dependent checks stay inside the boundary-free range
// recorded by the solver; actions and boundaries are compared within one grid
// cell.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakdp/dp.hpp"
#include "peakdp/model.hpp"

namespace peakdp::structure {

struct Violation {
    int t = 0;
    double x = 0.0;
    double y = 0.0;
    double excess = 0.0;
    std::string what;
};

struct CheckReport {
    std::string name;
    bool applicable = true;
    bool passed = true;
    std::string note;
    std::int64_t checked = 0;
    double worst_excess = 0.0;
    std::vector<Violation> violations;

    void add(Violation v);
    nlohmann::json to_json(std::size_t max_listed = 50) const;
};

/// V_t(x, y) <= V_t(x, y') + tol for adjacent y < y', every t and x.
CheckReport check_monotone_in_y(const ValueTable& values, double tol = 1e-12);

/**
Midpoint inequality 2 V(m) <= V(m - d) + V(m + d) + tol for d along both axes
and both diagonals, every t, inside the boundary-free range. Not applicable
(and not certified) when the setup cost is positive.
*/
CheckReport check_discrete_convexity(const ProblemSpec& spec, const ValueTable& values, double tol = 1e-9);

/**
g_t(y) = largest minimizer over x of
f_t(x, y) = E[h_t(x + q) + V_{t+1}(x + q, y)] - a_t x.

f_t is evaluated on the x indices whose successors stay in the boundary-free
range of layer t + 1. A minimizer on the edge of that domain is marked
unreliable.
*/
struct GCurve {
    int t = 0;
    StateRange domain;
    std::vector<int> g_index;     ///< per y index: x-grid index of g_t(y)
    std::vector<double> g;        ///< per y index: g_t(y)
    std::vector<bool> reliable;   ///< per y index

    /// Largest reliable y index z with g_t(z) + z <= x (x given as a grid index); -1 if none.
    int z_star_index(const Grids& grids, int xi) const;
};

/// Requires K = 0; throws ValidationError otherwise.
GCurve extract_g_curve(const ProblemSpec& spec, const Grids& grids, const ValueTable& values, int t);

struct RegimeReport {
    CheckReport check;
    std::int64_t idle_states = 0;       ///< x <= g(y): action 0
    std::int64_t tracking_states = 0;   ///< g(y) < x <= g(y) + y: action x - g(y)
    std::int64_t peak_states = 0;       ///< x > g(y) + y: action in [y, z*]
    std::int64_t above_peak = 0;        ///< peak-regime states whose action exceeds y
    std::int64_t capped = 0;            ///< peak-regime states acting below x - g(y)

    nlohmann::json to_json() const;
};

/// Compares each boundary-free state of stage t against the regimes induced by g.
RegimeReport verify_three_regime(const PolicyTable& policy, const GCurve& g, int t);

/// (s_t, S_t) fitted to a stage of a y-independent policy.
struct ThresholdFit {
    int t = 0;
    bool refused = false;
    std::string diagnostic;
    double s = 0.0;          ///< largest x with action 0
    double S = 0.0;          ///< post-decision level x - u for x > s
    double residual = 0.0;   ///< max |fitted action - table action|

    bool within(double step) const { return !refused && residual <= step + 1e-12; }
    nlohmann::json to_json() const;
};

ThresholdFit fit_threshold(const PolicyTable& policy, int t);

}  // namespace peakdp::structure
