#pragma once

// Analytic policies and values used as exact references for the grid solver:
// the zero-heat absolute-penalty instance solved one and two stages from the
// end, and the one-stage modified threshold rule.

#include <limits>

#include "peakdp/model.hpp"

namespace peakdp::closed_form {

/// Zero heat, h(x) = b|x|, a = 1, K = 0, requires P >= b >= 1.
struct AbsPenaltyParams {
    double b = 1.0;
    double peak_price = 1.0;

    void validate() const;
};

/// Instance with the parameters above, `horizon` stages and the given start state.
ProblemSpec abs_penalty_spec(const AbsPenaltyParams& params, int horizon, double x_init = 0.0, double y_init = 0.0);

/// Optimal load in the last stage.
double last_stage_policy(const AbsPenaltyParams& params, double x, double y);

/// V_T(x, y), the optimal cost of the last stage including the peak charge.
double last_stage_value(const AbsPenaltyParams& params, double x, double y);

/// Optimal load one stage before the end.
double second_last_stage_policy(const AbsPenaltyParams& params, double x, double y);

/// Which case of second_last_stage_policy applies; ordered as evaluated.
enum class SecondLastBranch { idle, track, cap_at_peak, half };
SecondLastBranch second_last_stage_branch(const AbsPenaltyParams& params, double x, double y);

/**
Buffer temperatures of the one-stage modified threshold rule.

lower is the largest minimizer of f(z) = E h(z + q) - a z; upper is the
largest z with P in the subdifferential of f. Either is +infinity when f
never reaches the corresponding slope.
*/
struct OneStepThresholds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Thresholds for stage t of `spec`: closed form for quadratic h with q == 0, otherwise bisection on f'.
OneStepThresholds one_step_thresholds(const ProblemSpec& spec, int t = 1);

/// Same, always by bisection on the left derivative of f (tolerance 1e-10).
OneStepThresholds one_step_thresholds_numeric(const ProblemSpec& spec, int t = 1);

/**
Modified threshold rule, evaluated in this order:
  x - upper  if x >= upper + y
  y          if lower + y <= x <= upper + y
  x - lower  if lower <= x <= lower + y
  0          if x <= lower
*/
double modified_threshold_action(const OneStepThresholds& th, double x, double y);

/// One-stage optimal load for a T = 1, K = 0 instance.
double one_step_policy(const ProblemSpec& spec, double x, double y);

}  // namespace peakdp::closed_form
