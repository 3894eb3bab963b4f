#include "peakdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace peakdp {

namespace {

constexpr double kProbabilitySumTol = 1e-12;
constexpr double kAlignmentTol = 1e-9;
constexpr double kDynamicsTol = 1e-9;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

StagePhase StagePhase::alternating(int horizon, Phase first) {
    StagePhase out;
    out.labels.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
    Phase p = first;
    for (int t = 0; t < horizon; ++t) {
        out.labels.push_back(p);
        p = p == Phase::off ? Phase::on : Phase::off;
    }
    return out;
}

// *******************************************************
// HeatDistribution
// *******************************************************

HeatDistribution::HeatDistribution(std::vector<HeatOutcome> support) : support_(std::move(support)) {
    if (support_.empty()) throw ValidationError("heat distribution has empty support");
    double total = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
        const auto& o = support_[i];
        if (!finite(o.value) || o.value < 0.0)
            throw ValidationError("heat support values must be finite and non-negative");
        if (!finite(o.prob) || o.prob < 0.0 || o.prob > 1.0)
            throw ValidationError("heat probabilities must lie in [0, 1]");
        if (i > 0 && !(support_[i - 1].value < o.value))
            throw ValidationError("heat support must be sorted ascending without duplicates");
        total += o.prob;
    }
    if (std::abs(total - 1.0) > kProbabilitySumTol) {
        std::ostringstream msg;
        msg << "heat probabilities sum to " << total << ", expected 1";
        throw ValidationError(msg.str());
    }
    cdf_.reserve(support_.size());
    double acc = 0.0;
    for (const auto& o : support_) {
        acc += o.prob;
        cdf_.push_back(acc);
    }
}

HeatDistribution HeatDistribution::point(double value) { return HeatDistribution({{value, 1.0}}); }

double HeatDistribution::mean() const {
    double m = 0.0;
    for (const auto& o : support_) m += o.prob * o.value;
    return m;
}

std::size_t HeatDistribution::sample_index(double uniform) const {
    // Last outcome absorbs any rounding shortfall in the cumulative sum.
    for (std::size_t i = 0; i + 1 < cdf_.size(); ++i)
        if (uniform < cdf_[i]) return i;
    return cdf_.size() - 1;
}

// *******************************************************
// Parameters
// *******************************************************

void PenaltyParams::validate() const {
    if (!finite(above) || !finite(below) || above < 0.0 || below < 0.0)
        throw ValidationError("penalty coefficients must be finite and non-negative");
}

void OrderingParams::validate(int horizon) const {
    if (!finite(setup_cost) || setup_cost < 0.0) throw ValidationError("setup cost K must be >= 0");
    if (static_cast<int>(unit_cost.size()) != horizon)
        throw ValidationError("unit cost list must have one entry per stage");
    for (double a : unit_cost)
        if (!finite(a) || a < 0.0) throw ValidationError("unit costs a_t must be >= 0");
}

ProblemSpec::ProblemSpec(int horizon,
                         std::vector<HeatDistribution> heat,
                         std::vector<PenaltyParams> penalty,
                         OrderingParams ordering,
                         double peak_price,
                         double x_init,
                         double y_init)
    : horizon_(horizon),
      heat_(std::move(heat)),
      penalty_(std::move(penalty)),
      ordering_(std::move(ordering)),
      peak_price_(peak_price),
      x_init_(x_init),
      y_init_(y_init) {
    if (horizon_ < 1) throw ValidationError("horizon must be at least 1");
    if (static_cast<int>(heat_.size()) != horizon_)
        throw ValidationError("heat distribution list must have one entry per stage");
    if (static_cast<int>(penalty_.size()) != horizon_)
        throw ValidationError("penalty list must have one entry per stage");
    for (const auto& p : penalty_) p.validate();
    ordering_.validate(horizon_);
    if (!finite(peak_price_) || peak_price_ < 0.0) throw ValidationError("peak price P must be >= 0");
    if (!finite(x_init_)) throw ValidationError("x_init must be finite");
    if (!finite(y_init_) || y_init_ < 0.0) throw ValidationError("y_init must be >= 0");
}

std::size_t ProblemSpec::stage_index(int t) const {
    if (t < 1 || t > horizon_) {
        std::ostringstream msg;
        msg << "stage " << t << " outside 1.." << horizon_;
        throw std::out_of_range(msg.str());
    }
    return static_cast<std::size_t>(t - 1);
}

double ProblemSpec::max_heat() const {
    double m = 0.0;
    for (const auto& h : heat_) m = std::max(m, h.max());
    return m;
}

ProblemSpec ProblemSpec::with_peak_price(double peak_price) const {
    return ProblemSpec(horizon_, heat_, penalty_, ordering_, peak_price, x_init_, y_init_);
}

ProblemSpec ProblemSpec::with_initial_state(double x_init, double y_init) const {
    return ProblemSpec(horizon_, heat_, penalty_, ordering_, peak_price_, x_init, y_init);
}

// *******************************************************
// Grids
// *******************************************************

Grids::Grids(double x_min, double x_max, double step, double u_max) : step_(step) {
    if (!finite(step) || step <= 0.0) throw ValidationError("grid step must be positive");
    if (!finite(x_min) || !finite(x_max) || x_min > 0.0 || x_max < 0.0)
        throw ValidationError("temperature grid must contain 0");
    if (!finite(u_max) || u_max < 0.0) throw ValidationError("u_max must be >= 0");
    x_lo_ = steps_of(x_min, "x_min");
    x_hi_ = steps_of(x_max, "x_max");
    u_steps_ = steps_of(u_max, "u_max");
}

std::int64_t Grids::steps_of(double value, const char* what) const {
    const double r = value / step_;
    const double n = std::nearbyint(r);
    if (!finite(r) || std::abs(r - n) > kAlignmentTol * std::max(1.0, std::abs(r))) {
        std::ostringstream msg;
        msg << what << " = " << value << " is not a multiple of the grid step " << step_;
        throw ValidationError(msg.str());
    }
    return static_cast<std::int64_t>(n);
}

int Grids::x_index(double x) const {
    const auto n = steps_of(x, "temperature");
    if (n < x_lo_ || n > x_hi_) throw ValidationError("temperature outside the grid range");
    return static_cast<int>(n - x_lo_);
}

int Grids::u_index(double u) const {
    const auto n = steps_of(u, "load");
    if (n < 0 || n > u_steps_) throw ValidationError("load/peak outside [0, u_max]");
    return static_cast<int>(n);
}

void Grids::check_alignment(const ProblemSpec& spec) const {
    for (int t = 1; t <= spec.horizon(); ++t)
        for (const auto& o : spec.heat(t).support()) {
            std::ostringstream what;
            what << "heat support value at stage " << t;
            steps_of(o.value, what.str().c_str());
        }
    x_index(spec.x_init());
    y_index(spec.y_init());
}

// *******************************************************
// Costs and dynamics
// *******************************************************

double penalty_cost(const PenaltyParams& params, double x) {
    const double coeff = x >= 0.0 ? params.above : params.below;
    if (params.form == PenaltyForm::quadratic) return coeff * x * x;
    return coeff * std::abs(x);
}

double ordering_cost(const OrderingParams& params, int t, double u) {
    if (u < 0.0) throw std::domain_error("ordering_cost: negative load");
    if (u == 0.0) return 0.0;
    return params.setup_cost + params.unit_cost.at(static_cast<std::size_t>(t - 1)) * u;
}

double stage_cost(const ProblemSpec& spec, int t, double x, double u) {
    const auto& h = spec.penalty(t);
    double expected_penalty = 0.0;
    for (const auto& o : spec.heat(t).support()) expected_penalty += o.prob * penalty_cost(h, x - u + o.value);
    return ordering_cost(spec.ordering(), t, u) + expected_penalty;
}

StepResult step_dynamics(double x, double y, double u, double q) { return {x - u + q, std::max(y, u)}; }

CostBreakdown trajectory_cost(const ProblemSpec& spec,
                              std::span<const double> xs,
                              std::span<const double> us,
                              std::span<const double> qs) {
    const auto T = static_cast<std::size_t>(spec.horizon());
    if (xs.size() != T || us.size() != T || qs.size() != T)
        throw ValidationError("trajectory arrays must have horizon length");
    if (std::abs(xs[0] - spec.x_init()) > kDynamicsTol)
        throw ValidationError("trajectory does not start at x_init");

    CostBreakdown out;
    out.ordering.resize(T);
    out.penalty.resize(T);
    double peak = spec.y_init();
    for (std::size_t s = 0; s < T; ++s) {
        const int t = static_cast<int>(s) + 1;
        if (us[s] < 0.0) throw ValidationError("trajectory contains a negative load");
        const double x_next = xs[s] - us[s] + qs[s];
        if (s + 1 < T && std::abs(xs[s + 1] - x_next) > kDynamicsTol) {
            std::ostringstream msg;
            msg << "trajectory violates the dynamics at stage " << t;
            throw ValidationError(msg.str());
        }
        out.ordering[s] = ordering_cost(spec.ordering(), t, us[s]);
        out.penalty[s] = penalty_cost(spec.penalty(t), x_next);
        out.ordering_total += out.ordering[s];
        out.penalty_total += out.penalty[s];
        peak = std::max(peak, us[s]);
    }
    out.peak = spec.peak_price() * peak;
    out.total = out.ordering_total + out.penalty_total + out.peak;
    return out;
}

}  // namespace peakdp
