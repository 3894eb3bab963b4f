#include "peakdp/closed_form.hpp"

#include <cmath>

namespace peakdp::closed_form {

void AbsPenaltyParams::validate() const {
    if (!(peak_price >= b && b >= 1.0)) throw ValidationError("absolute-penalty instance requires P >= b >= a = 1");
}

ProblemSpec abs_penalty_spec(const AbsPenaltyParams& params, int horizon, double x_init, double y_init) {
    params.validate();
    const auto T = static_cast<std::size_t>(horizon);
    return ProblemSpec(horizon, std::vector<HeatDistribution>(T, HeatDistribution::point(0.0)),
                       std::vector<PenaltyParams>(T, PenaltyParams::linear(params.b, params.b)),
                       OrderingParams{0.0, std::vector<double>(T, 1.0)}, params.peak_price, x_init, y_init);
}

double last_stage_policy(const AbsPenaltyParams& params, double x, double y) {
    params.validate();
    if (x <= 0.0) return 0.0;
    if (x <= y) return x;
    return y;
}

double last_stage_value(const AbsPenaltyParams& params, double x, double y) {
    params.validate();
    const double P = params.peak_price;
    const double b = params.b;
    if (x <= 0.0) return P * y - b * x;
    if (x <= y) return P * y + x;
    return (P + 1.0 - b) * y + b * x;
}

SecondLastBranch second_last_stage_branch(const AbsPenaltyParams& params, double x, double y) {
    params.validate();
    const double P = params.peak_price;
    const double b = params.b;
    if (x <= 0.0) return SecondLastBranch::idle;
    if (x <= y) return SecondLastBranch::track;
    if (x <= 2.0 * y) return SecondLastBranch::cap_at_peak;
    if ((P + 2.0 - 3.0 * b) * y <= (P / 2.0 - 3.0 * b / 2.0 + 1.0) * x) return SecondLastBranch::cap_at_peak;
    return SecondLastBranch::half;
}

double second_last_stage_policy(const AbsPenaltyParams& params, double x, double y) {
    switch (second_last_stage_branch(params, x, y)) {
        case SecondLastBranch::idle: return 0.0;
        case SecondLastBranch::track: return x;
        case SecondLastBranch::cap_at_peak: return y;
        case SecondLastBranch::half: return x / 2.0;
    }
    return 0.0;
}

namespace {

/// Left derivative of h at x.
double penalty_left_slope(const PenaltyParams& h, double x) {
    if (h.form == PenaltyForm::quadratic) return 2.0 * (x > 0.0 ? h.above : h.below) * x;
    return x > 0.0 ? h.above : -h.below;
}

/// sup { z : f'_-(z) <= level } for f(z) = E h(z + q) - a z.
double slope_crossing(const ProblemSpec& spec, int t, double level) {
    const auto& h = spec.penalty(t);
    const double a = spec.unit_cost(t);
    auto slope = [&](double z) {
        double s = 0.0;
        for (const auto& o : spec.heat(t).support()) s += o.prob * penalty_left_slope(h, z + o.value);
        return s - a;
    };

    double hi = 1.0;
    while (slope(hi) <= level) {
        hi *= 2.0;
        if (hi > 1e12) return std::numeric_limits<double>::infinity();
    }
    double lo = -1.0;
    while (slope(lo) > level) {
        lo *= 2.0;
        if (lo < -1e12) throw ValidationError("one-step threshold: slope never drops to the requested level");
    }
    while (hi - lo > 1e-10 * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid) <= level)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

OneStepThresholds one_step_thresholds_numeric(const ProblemSpec& spec, int t) {
    return {slope_crossing(spec, t, 0.0), slope_crossing(spec, t, spec.peak_price())};
}

OneStepThresholds one_step_thresholds(const ProblemSpec& spec, int t) {
    const auto& h = spec.penalty(t);
    const auto& heat = spec.heat(t);
    if (h.form == PenaltyForm::quadratic && heat.size() == 1 && heat.max() == 0.0 && h.above > 0.0) {
        const double a = spec.unit_cost(t);
        return {a / (2.0 * h.above), (a + spec.peak_price()) / (2.0 * h.above)};
    }
    return one_step_thresholds_numeric(spec, t);
}

double modified_threshold_action(const OneStepThresholds& th, double x, double y) {
    if (x >= th.upper + y) return x - th.upper;
    if (x >= th.lower + y) return y;
    if (x >= th.lower) return x - th.lower;
    return 0.0;
}

double one_step_policy(const ProblemSpec& spec, double x, double y) {
    if (spec.horizon() != 1) throw ValidationError("one_step_policy requires a single-stage instance");
    if (spec.setup_cost() != 0.0) throw ValidationError("one_step_policy requires K = 0");
    return modified_threshold_action(one_step_thresholds(spec, 1), x, y);
}

}  // namespace peakdp::closed_form
