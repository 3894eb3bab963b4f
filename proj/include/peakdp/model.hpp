#pragma once

// Problem model for peak-priced refrigeration scheduling: temperature
// dynamics, ordering/penalty costs, per-stage heat distributions and the
// discretization grids shared by the solvers.
//
// Stage indices are 1-based in every public function (t = 1..T), matching the
// way schedules are usually written down; storage is 0-based internally.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace peakdp {

enum class Phase { off, on };

/// Per-stage on/off-peak label, length T.
struct StagePhase {
    std::vector<Phase> labels;

    /// Alternating calendar starting with `first` at stage 1.
    static StagePhase alternating(int horizon, Phase first = Phase::off);
    Phase at(int t) const { return labels.at(static_cast<std::size_t>(t - 1)); }
};

/// Raised for malformed instances, misaligned grids and inconsistent inputs.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct HeatOutcome {
    double value = 0.0;
    double prob = 0.0;
};

/**
Finite-support distribution of the incoming heat for one stage.

The support is sorted ascending with distinct, non-negative values and
probabilities summing to one (within 1e-12).
*/
class HeatDistribution {
public:
    explicit HeatDistribution(std::vector<HeatOutcome> support);

    /// Degenerate distribution with all mass on `value`.
    static HeatDistribution point(double value);

    std::span<const HeatOutcome> support() const { return support_; }
    std::size_t size() const { return support_.size(); }
    double min() const { return support_.front().value; }
    double max() const { return support_.back().value; }
    double mean() const;

    /// Inverse-CDF lookup: index of the outcome selected by `uniform` in [0, 1).
    std::size_t sample_index(double uniform) const;

private:
    std::vector<HeatOutcome> support_;
    std::vector<double> cdf_;
};

enum class PenaltyForm { quadratic, linear };

/**
Set-point deviation penalty h_t.

quadratic: above * x^2 for x >= 0, below * x^2 for x < 0.
linear:    above * x   for x >= 0, below * (-x) for x < 0.
*/
struct PenaltyParams {
    PenaltyForm form = PenaltyForm::quadratic;
    double above = 0.0;
    double below = 0.0;

    static PenaltyParams quadratic(double b, double d) { return {PenaltyForm::quadratic, b, d}; }
    static PenaltyParams linear(double b, double d) { return {PenaltyForm::linear, b, d}; }

    void validate() const;
};

/// Setup cost K (charged whenever the load is positive) and per-stage unit costs a_t.
struct OrderingParams {
    double setup_cost = 0.0;
    std::vector<double> unit_cost;

    void validate(int horizon) const;
};

class ProblemSpec {
public:
    ProblemSpec(int horizon,
                std::vector<HeatDistribution> heat,
                std::vector<PenaltyParams> penalty,
                OrderingParams ordering,
                double peak_price,
                double x_init,
                double y_init);

    int horizon() const { return horizon_; }
    const HeatDistribution& heat(int t) const { return heat_.at(stage_index(t)); }
    const PenaltyParams& penalty(int t) const { return penalty_.at(stage_index(t)); }
    const OrderingParams& ordering() const { return ordering_; }
    double unit_cost(int t) const { return ordering_.unit_cost.at(stage_index(t)); }
    double setup_cost() const { return ordering_.setup_cost; }
    double peak_price() const { return peak_price_; }
    double x_init() const { return x_init_; }
    double y_init() const { return y_init_; }

    /// Largest heat value over all stages.
    double max_heat() const;

    ProblemSpec with_peak_price(double peak_price) const;
    ProblemSpec with_initial_state(double x_init, double y_init) const;

private:
    std::size_t stage_index(int t) const;

    int horizon_;
    std::vector<HeatDistribution> heat_;
    std::vector<PenaltyParams> penalty_;
    OrderingParams ordering_;
    double peak_price_;
    double x_init_;
    double y_init_;
};

/**
Uniform lattice used by the solvers.

Temperatures live on {x_min, x_min + step, ..., x_max} and loads/peaks on
{0, step, ..., u_max}. Sharing one step keeps x - u + q on the lattice, so
every coordinate is stored as an integer number of steps.
*/
class Grids {
public:
    Grids(double x_min, double x_max, double step, double u_max);

    double step() const { return step_; }
    double x_min() const { return step_ * static_cast<double>(x_lo_); }
    double x_max() const { return step_ * static_cast<double>(x_hi_); }
    double u_max() const { return step_ * static_cast<double>(u_steps_); }

    int nx() const { return static_cast<int>(x_hi_ - x_lo_ + 1); }
    int nu() const { return static_cast<int>(u_steps_ + 1); }
    int ny() const { return nu(); }

    double x(int i) const { return step_ * static_cast<double>(x_lo_ + i); }
    double u(int k) const { return step_ * static_cast<double>(k); }
    double y(int j) const { return u(j); }

    /// Index of temperature `x`; throws if `x` is not a grid point.
    int x_index(double x) const;
    /// Index of load/peak `u`; throws if `u` is not a grid point.
    int u_index(double u) const;
    int y_index(double y) const { return u_index(y); }

    /// Index of the zero temperature.
    int zero_index() const { return static_cast<int>(-x_lo_); }

    /// Number of steps represented by `value`; throws if not a multiple of step.
    std::int64_t steps_of(double value, const char* what) const;

    /// Throws unless every heat value, x_init and y_init is grid-aligned.
    void check_alignment(const ProblemSpec& spec) const;

private:
    double step_;
    std::int64_t x_lo_;
    std::int64_t x_hi_;
    std::int64_t u_steps_;
};

double penalty_cost(const PenaltyParams& params, double x);

/// Ordering cost o(u) at stage t: 0 when u == 0, K + a_t u otherwise.
double ordering_cost(const OrderingParams& params, int t, double u);

/// Expected stage cost c_t(x, u) = o_t(u) + E[h_t(x - u + q_t)], summed exactly over the support.
double stage_cost(const ProblemSpec& spec, int t, double x, double u);

struct StepResult {
    double x_next;
    double y_next;
};

StepResult step_dynamics(double x, double y, double u, double q);

struct Trajectory {
    std::vector<double> xs;  ///< x_1 .. x_{T+1}
    std::vector<double> ys;  ///< y_1 .. y_{T+1}
    std::vector<double> us;  ///< u_1 .. u_T
    std::vector<double> qs;  ///< q_1 .. q_T
};

struct CostBreakdown {
    std::vector<double> ordering;  ///< o_t(u_t) per stage
    std::vector<double> penalty;   ///< realized h_t(x_{t+1}) per stage
    double ordering_total = 0.0;
    double penalty_total = 0.0;
    double peak = 0.0;             ///< P * max(y_init, max_t u_t)
    double total = 0.0;            ///< ordering_total + penalty_total + peak
};

/**
Cost of one realized trajectory.

`xs` holds x_1..x_T (x_1 must equal the spec's x_init); the final state
x_{T+1} is implied by the dynamics. Throws ValidationError if the states do
not follow x_{t+1} = x_t - u_t + q_t within 1e-9.
*/
CostBreakdown trajectory_cost(const ProblemSpec& spec,
                              std::span<const double> xs,
                              std::span<const double> us,
                              std::span<const double> qs);

}  // namespace peakdp
