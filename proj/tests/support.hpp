#pragma once

// Instance builders and random generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "peakdp/dp.hpp"
#include "peakdp/model.hpp"

namespace testsupport {

using namespace peakdp;

inline ProblemSpec uniform_spec(int T, const HeatDistribution& heat, const PenaltyParams& h, double K, double a, double P,
                                double x_init = 0.0, double y_init = 0.0) {
    const auto n = static_cast<std::size_t>(T);
    return ProblemSpec(T, std::vector<HeatDistribution>(n, heat), std::vector<PenaltyParams>(n, h),
                       OrderingParams{K, std::vector<double>(n, a)}, P, x_init, y_init);
}

/// Zero heat, h = b|x|, a = 1, K = 0.
inline ProblemSpec zero_heat_abs_spec(int T, double b, double P, double x_init = 0.0, double y_init = 0.0) {
    return uniform_spec(T, HeatDistribution::point(0.0), PenaltyParams::linear(b, b), 0.0, 1.0, P, x_init, y_init);
}

/// T = 2, x_init = -2, q = 2, a = 0, K = 0, P = 30, slopes 20 above and 1 below.
inline ProblemSpec peak_carryover_spec(double y_init) {
    return uniform_spec(2, HeatDistribution::point(2.0), PenaltyParams::linear(20.0, 1.0), 0.0, 0.0, 30.0, -2.0, y_init);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Random distribution on multiples of `step` in [0, max_steps * step] with `size` distinct points.
inline HeatDistribution random_heat(std::mt19937_64& rng, double step, int max_steps, int size) {
    std::vector<int> pts(static_cast<std::size_t>(max_steps + 1));
    for (int i = 0; i <= max_steps; ++i) pts[static_cast<std::size_t>(i)] = i;
    std::shuffle(pts.begin(), pts.end(), rng);
    pts.resize(static_cast<std::size_t>(std::min(size, max_steps + 1)));
    std::sort(pts.begin(), pts.end());
    std::vector<double> w;
    for (std::size_t i = 0; i < pts.size(); ++i) w.push_back(uniform(rng, 0.2, 1.0));
    double total = 0.0;
    for (double v : w) total += v;
    std::vector<HeatOutcome> out;
    for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i] * step, w[i] / total});
    return HeatDistribution(std::move(out));
}

struct RandomOptions {
    int min_horizon = 1;
    int max_horizon = 3;
    int min_support = 2;
    int max_support = 3;
    int max_heat_steps = 3;
    bool quadratic = true;
    bool linear = false;        ///< allow the linear form as well
    double setup_cost = 0.0;    ///< > 0: K drawn from [0.5 * K, 1.5 * K]
    double peak_lo = 0.0;
    double peak_hi = 0.0;
    double step = 0.5;
};

inline ProblemSpec random_spec(std::mt19937_64& rng, const RandomOptions& o) {
    const int T = uniform_int(rng, o.min_horizon, o.max_horizon);
    std::vector<HeatDistribution> heat;
    std::vector<PenaltyParams> pen;
    std::vector<double> unit;
    const bool lin = o.linear && (!o.quadratic || uniform_int(rng, 0, 1) == 1);
    for (int t = 0; t < T; ++t) {
        heat.push_back(random_heat(rng, o.step, o.max_heat_steps, uniform_int(rng, o.min_support, o.max_support)));
        const double b = uniform(rng, 2.0, 20.0);
        const double d = uniform(rng, 0.5, 3.0);
        pen.push_back(lin ? PenaltyParams::linear(b, d) : PenaltyParams::quadratic(b, d));
        unit.push_back(uniform(rng, 0.0, 2.0));
    }
    const double K = o.setup_cost > 0.0 ? uniform(rng, 0.5 * o.setup_cost, 1.5 * o.setup_cost) : 0.0;
    const double P = o.peak_hi > o.peak_lo ? uniform(rng, o.peak_lo, o.peak_hi) : o.peak_lo;
    return ProblemSpec(T, std::move(heat), std::move(pen), OrderingParams{K, std::move(unit)}, P, 0.0, 0.0);
}

/// Temperature grid wide enough that the solve from (x_init, y_init) never clamps.
inline Grids clean_grids(const ProblemSpec& spec, double step, double u_max, int margin = 2) {
    const auto U = static_cast<int>(std::llround(u_max / step));
    int qmax = 0;
    for (int t = 1; t <= spec.horizon(); ++t) qmax = std::max(qmax, static_cast<int>(std::llround(spec.heat(t).max() / step)));
    const int x0 = static_cast<int>(std::llround(spec.x_init() / step));
    const int lo = std::min(0, x0 - spec.horizon() * U - margin);
    const int hi = std::max(0, x0 + spec.horizon() * qmax + margin);
    return Grids(lo * step, hi * step, step, u_max);
}

}  // namespace testsupport
