#pragma once

// Monte Carlo evaluation of feedback policies. Heat draws come from a
// counter-based stream keyed by (seed, rollout, stage), so every policy
// evaluated with the same seed sees the same draws.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakdp/dp.hpp"
#include "peakdp/model.hpp"

namespace peakdp::sim {

/// A policy returned a load outside [0, u_max].
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Action {
    double u = 0.0;
    bool off_grid = false;  ///< the state had to be snapped to a grid point
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual Action act(int t, double x, double y) const = 0;
    virtual std::string name() const = 0;
};

/// Solver policy; states off the grid are snapped to the nearest grid point.
class TabularPolicy final : public Policy {
public:
    explicit TabularPolicy(PolicyTable table, std::string name = "dp");
    Action act(int t, double x, double y) const override;
    std::string name() const override { return name_; }

private:
    PolicyTable table_;
    std::string name_;
};

class ZeroPolicy final : public Policy {
public:
    Action act(int, double, double) const override { return {}; }
    std::string name() const override { return "zero"; }
};

class FunctionPolicy final : public Policy {
public:
    using Fn = std::function<double(int t, double x, double y)>;
    FunctionPolicy(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
    Action act(int t, double x, double y) const override { return {fn_(t, x, y), false}; }
    std::string name() const override { return name_; }

private:
    std::string name_;
    Fn fn_;
};

/// Uniform in [0, 1) from the keyed stream.
double keyed_uniform(std::uint64_t seed, std::uint64_t rollout, std::uint64_t stage);

/// q_1..q_T for one rollout.
std::vector<double> draw_heat(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t rollout);

/// Heat draws for rollouts 0..N-1, stored row-major [rollout][stage].
struct HeatDraws {
    int horizon = 0;
    std::int64_t rollouts = 0;
    std::uint64_t seed = 0;
    std::vector<double> q;

    static HeatDraws generate(const ProblemSpec& spec, std::int64_t n, std::uint64_t seed);
    std::span<const double> row(std::int64_t r) const {
        return std::span<const double>(q).subspan(static_cast<std::size_t>(r * horizon), static_cast<std::size_t>(horizon));
    }
};

struct RolloutOptions {
    double u_max = std::numeric_limits<double>::infinity();
};

struct RolloutResult {
    Trajectory trajectory;
    CostBreakdown cost;
    int off_grid_steps = 0;
};

/// One realization from (x_init, y_init) under `draws` (length T; values are not checked against the support).
RolloutResult rollout(const ProblemSpec& spec, const Policy& policy, std::span<const double> draws,
                      const RolloutOptions& options = {});

struct SimOptions {
    double u_max = std::numeric_limits<double>::infinity();
    int threads = 1;
};

struct SimResult {
    std::string policy;
    double mean = 0.0;
    double se = 0.0;
    double ordering = 0.0;
    double penalty = 0.0;
    double peak = 0.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::int64_t off_grid = 0;  ///< rollout steps that needed nearest-grid lookup
};

/// Per-rollout totals alongside the summary, for paired comparisons.
struct Evaluation {
    SimResult result;
    std::vector<double> totals;
};

/// Evaluates on pre-generated draws; results do not depend on options.threads.
Evaluation evaluate(const ProblemSpec& spec, const Policy& policy, const HeatDraws& draws, const SimOptions& options = {});

/// N rollouts drawn from the spec's heat distributions with the given seed.
SimResult estimate_cost(const ProblemSpec& spec, const Policy& policy, std::int64_t n, std::uint64_t seed,
                        const SimOptions& options = {});

struct PairedDifference {
    std::string first;
    std::string second;
    double mean = 0.0;            ///< mean of (first - second)
    double paired_se = 0.0;       ///< SE of the per-rollout difference
    double independent_se = 0.0;  ///< sqrt(se_first^2 + se_second^2)
};

struct Comparison {
    std::vector<SimResult> results;
    std::vector<PairedDifference> differences;  ///< every ordered pair i < j
};

/// Evaluates all policies on the same draws. Requires at least two policies.
Comparison compare_policies(const ProblemSpec& spec, std::span<const Policy* const> policies, std::int64_t n,
                            std::uint64_t seed, const SimOptions& options = {});

PairedDifference paired_difference(const Evaluation& first, const Evaluation& second);

/// Deterministic summation (pairwise), independent of how the terms were produced.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error (sample std / sqrt N).
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

void write_results_csv(std::span<const SimResult> results, std::ostream& out);
void write_differences_csv(std::span<const PairedDifference> diffs, std::ostream& out);

}  // namespace peakdp::sim
