#pragma once

// Backward induction for V_t(x, y) = min_u { c_t(x, u) + E V_{t+1}(x - u + q, max(y, u)) },
// V_{T+1}(x, y) = P y, on the lattice described by Grids; plus an
// independent scenario-tree oracle for tiny instances.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "peakdp/model.hpp"

namespace peakdp {

/// Closed interval of x indices; empty when hi < lo.
struct StateRange {
    int lo = 0;
    int hi = -1;

    bool empty() const { return hi < lo; }
    bool contains(int i) const { return lo <= i && i <= hi; }
};

/// Read-only view of one layer V_t(., .), stored row-major as [y][x].
struct ValueSlice {
    std::span<const double> data;
    int nx = 0;
    int ny = 0;

    double operator()(int xi, int yj) const {
        return data[static_cast<std::size_t>(yj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(xi)];
    }
    std::span<const double> row(int yj) const {
        return data.subspan(static_cast<std::size_t>(yj) * static_cast<std::size_t>(nx), static_cast<std::size_t>(nx));
    }
};

/**
Expected cost-to-go V_t(x, y) for t = 1..T+1 on the grid.

exact_range(t) is the set of x indices whose values never depend on a lookup
clamped at the temperature-grid edge; structural checks restrict themselves
to it.
*/
class ValueTable {
public:
    ValueTable(Grids grids, int horizon);

    const Grids& grids() const { return grids_; }
    int horizon() const { return horizon_; }

    double operator()(int t, int xi, int yj) const { return values_[offset(t, xi, yj)]; }
    double& at(int t, int xi, int yj) { return values_[offset(t, xi, yj)]; }

    ValueSlice layer(int t) const;
    std::span<double> mutable_layer(int t);

    StateRange exact_range(int t) const { return exact_.at(static_cast<std::size_t>(t - 1)); }
    void set_exact_range(int t, StateRange range) { exact_.at(static_cast<std::size_t>(t - 1)) = range; }

    double min_value() const;

private:
    std::size_t offset(int t, int xi, int yj) const;

    Grids grids_;
    int horizon_;
    std::vector<double> values_;
    std::vector<StateRange> exact_;
};

/**
Optimal loads per stage t = 1..T and state (x, y), as grid indices.

u_min is the smallest minimizer (the action the solver commits to) and
u_max the largest; together they bound the argmin set.
*/
class PolicyTable {
public:
    PolicyTable(Grids grids, int horizon);

    const Grids& grids() const { return grids_; }
    int horizon() const { return horizon_; }

    int u_min_index(int t, int xi, int yj) const { return lo_[offset(t, xi, yj)]; }
    int u_max_index(int t, int xi, int yj) const { return hi_[offset(t, xi, yj)]; }
    double action(int t, int xi, int yj) const { return grids_.u(u_min_index(t, xi, yj)); }

    std::span<std::int32_t> mutable_lo(int t);
    std::span<std::int32_t> mutable_hi(int t);

    StateRange exact_range(int t) const { return exact_.at(static_cast<std::size_t>(t - 1)); }
    void set_exact_range(int t, StateRange range) { exact_.at(static_cast<std::size_t>(t - 1)) = range; }

    /// Overwrites one entry; used to build hand-made tables in tests.
    void set(int t, int xi, int yj, int u_lo, int u_hi);

private:
    std::size_t offset(int t, int xi, int yj) const;

    Grids grids_;
    int horizon_;
    std::vector<std::int32_t> lo_;
    std::vector<std::int32_t> hi_;
    std::vector<StateRange> exact_;
};

/// Lookups x - u + q that fell outside the temperature grid and were clamped.
struct BoundaryLog {
    std::int64_t clamped_total = 0;      ///< over every (t, x, y, u, q) of the sweep
    std::int64_t clamped_reachable = 0;  ///< restricted to states reachable from (x_init, y_init)

    /// V_1(x_init, y_init) is unaffected by the grid edges.
    bool clean() const { return clamped_reachable == 0; }
};

struct Solution {
    ValueTable values;
    PolicyTable policy;
    BoundaryLog boundary;

    double initial_value(const ProblemSpec& spec) const;
};

/// Relative tolerance under which two Bellman right-hand sides count as tied.
inline constexpr double kTieTolerance = 1e-10;

/**
Exact backward induction over the grid.

The expectation is the exact weighted sum over each heat support. Successor
temperatures outside [x_min, x_max] are clamped for the table lookup and
counted in the BoundaryLog. Ties go to the smallest load.
*/
Solution solve(const ProblemSpec& spec, const Grids& grids);

/// c_t(x, u) + sum_q p(q) V_{t+1}(clamp(x - u + q), max(y, u)); the per-state reference.
double bellman_rhs(const ProblemSpec& spec, const Grids& grids, ValueSlice next, int t, int xi, int yj, int uk);

/// Re-derives the argmin sets from a solved value table.
PolicyTable policy_from_value(const ProblemSpec& spec, const Grids& grids, const ValueTable& values);

// *******************************************************
// Scenario-tree oracle
// *******************************************************

class InstanceTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Closed-loop decision rule: heat-outcome history (indices of q_1..q_{t-1}) -> load u_t.
struct DecisionRule {
    std::map<std::vector<int>, double> decisions;

    double at(const std::vector<int>& history) const;
    /// Loads u_1..u_T along a path of outcome indices (length T - 1 suffices).
    std::vector<double> along(const std::vector<int>& outcomes, int horizon) const;
};

struct BruteForceResult {
    double cost = 0.0;
    DecisionRule rule;
};

struct BruteForceLimits {
    int max_horizon = 4;
    std::size_t max_support = 3;
    int max_actions = 50;
};

/**
Minimum of the expected total cost over all closed-loop decision rules with
loads on the u-grid, by exhaustive search of the scenario tree.

Temperatures are tracked exactly (no temperature grid, no clamping) and the
cost of each path is the realized trajectory cost. Throws InstanceTooLarge
beyond `limits`.
*/
BruteForceResult brute_force_solve(const ProblemSpec& spec, const Grids& grids, const BruteForceLimits& limits = {});

// *******************************************************
// Export
// *******************************************************

void write_values_csv(const ValueTable& values, std::ostream& out);
void write_policy_csv(const PolicyTable& policy, std::ostream& out);
nlohmann::json values_to_json(const ValueTable& values);
nlohmann::json policy_to_json(const PolicyTable& policy);

}  // namespace peakdp
