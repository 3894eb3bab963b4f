#include "peakdp/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace peakdp::structure {

void CheckReport::add(Violation v) {
    passed = false;
    worst_excess = std::max(worst_excess, v.excess);
    violations.push_back(std::move(v));
}

nlohmann::json CheckReport::to_json(std::size_t max_listed) const {
    nlohmann::json listed = nlohmann::json::array();
    for (std::size_t i = 0; i < violations.size() && i < max_listed; ++i) {
        const auto& v = violations[i];
        listed.push_back({{"t", v.t}, {"x", v.x}, {"y", v.y}, {"excess", v.excess}, {"what", v.what}});
    }
    return {{"check", name},
            {"applicable", applicable},
            {"passed", passed},
            {"note", note},
            {"checked", checked},
            {"violation_count", violations.size()},
            {"worst_excess", worst_excess},
            {"violations", std::move(listed)}};
}

CheckReport check_monotone_in_y(const ValueTable& values, double tol) {
    CheckReport rep;
    rep.name = "monotone_in_y";
    const auto& g = values.grids();
    for (int t = 1; t <= values.horizon() + 1; ++t)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j + 1 < g.ny(); ++j) {
                ++rep.checked;
                const double excess = values(t, i, j) - values(t, i, j + 1);
                if (excess > tol) rep.add({t, g.x(i), g.y(j), excess, "V decreases in y"});
            }
    return rep;
}

CheckReport check_discrete_convexity(const ProblemSpec& spec, const ValueTable& values, double tol) {
    CheckReport rep;
    rep.name = "discrete_convexity";
    if (spec.setup_cost() > 0.0) {
        rep.applicable = false;
        rep.passed = false;
        rep.note = "not applicable (K>0)";
        return rep;
    }
    const auto& g = values.grids();
    constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    constexpr const char* names[4] = {"x-line", "y-line", "diagonal", "anti-diagonal"};
    for (int t = 1; t <= values.horizon() + 1; ++t) {
        const auto range = values.exact_range(t);
        for (int d = 0; d < 4; ++d) {
            const int dx = dirs[d][0];
            const int dy = dirs[d][1];
            for (int i = range.lo + dx; i + dx <= range.hi; ++i)
                for (int j = 0; j < g.ny(); ++j) {
                    const int jl = j - dy;
                    const int jr = j + dy;
                    if (jl < 0 || jr < 0 || jl >= g.ny() || jr >= g.ny()) continue;
                    ++rep.checked;
                    const double excess = 2.0 * values(t, i, j) - values(t, i - dx, jl) - values(t, i + dx, jr);
                    if (excess > tol) rep.add({t, g.x(i), g.y(j), excess, names[d]});
                }
        }
    }
    return rep;
}

// *******************************************************
// g-curve and regimes
// *******************************************************

int GCurve::z_star_index(const Grids& grids, int xi) const {
    int best = -1;
    for (int j = 0; j < static_cast<int>(g_index.size()); ++j) {
        if (!reliable[static_cast<std::size_t>(j)]) continue;
        // g(z) + z <= x, compared in grid steps: the y index equals its step count.
        if (g_index[static_cast<std::size_t>(j)] + j <= xi) best = j;
    }
    (void)grids;
    return best;
}

GCurve extract_g_curve(const ProblemSpec& spec, const Grids& grids, const ValueTable& values, int t) {
    if (spec.setup_cost() > 0.0) throw ValidationError("g-curve extraction requires K = 0");
    if (t < 1 || t > spec.horizon()) throw ValidationError("stage out of range for g-curve extraction");
    std::vector<int> offsets;
    for (const auto& o : spec.heat(t).support())
        offsets.push_back(static_cast<int>(grids.steps_of(o.value, "heat support value")));
    const int qmin = *std::min_element(offsets.begin(), offsets.end());
    const int qmax = *std::max_element(offsets.begin(), offsets.end());
    const auto next_range = values.exact_range(t + 1);

    GCurve out;
    out.t = t;
    out.domain = {std::max(0, next_range.lo - qmin), std::min(grids.nx() - 1, next_range.hi - qmax)};
    if (next_range.empty() || out.domain.empty()) {
        out.domain = StateRange{};
        out.g_index.assign(static_cast<std::size_t>(grids.ny()), -1);
        out.g.assign(static_cast<std::size_t>(grids.ny()), std::numeric_limits<double>::quiet_NaN());
        out.reliable.assign(static_cast<std::size_t>(grids.ny()), false);
        return out;
    }

    const auto& h = spec.penalty(t);
    const double a = spec.unit_cost(t);
    const auto next = values.layer(t + 1);
    const auto support = spec.heat(t).support();
    std::vector<double> f(static_cast<std::size_t>(grids.nx()));
    for (int j = 0; j < grids.ny(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = out.domain.lo; i <= out.domain.hi; ++i) {
            double acc = 0.0;
            for (std::size_t s = 0; s < support.size(); ++s)
                acc += support[s].prob * (penalty_cost(h, grids.x(i) + support[s].value) + next(i + offsets[s], j));
            f[static_cast<std::size_t>(i)] = acc - a * grids.x(i);
            best = std::min(best, f[static_cast<std::size_t>(i)]);
        }
        const double cutoff = best + kTieTolerance * std::max(1.0, std::abs(best));
        int arg = out.domain.lo;
        for (int i = out.domain.lo; i <= out.domain.hi; ++i)
            if (f[static_cast<std::size_t>(i)] <= cutoff) arg = i;
        out.g_index.push_back(arg);
        out.g.push_back(grids.x(arg));
        out.reliable.push_back(arg > out.domain.lo && arg < out.domain.hi);
    }
    return out;
}

nlohmann::json RegimeReport::to_json() const {
    auto doc = check.to_json();
    doc["idle_states"] = idle_states;
    doc["tracking_states"] = tracking_states;
    doc["peak_states"] = peak_states;
    doc["above_peak"] = above_peak;
    doc["capped"] = capped;
    return doc;
}

RegimeReport verify_three_regime(const PolicyTable& policy, const GCurve& g, int t) {
    RegimeReport rep;
    rep.check.name = "three_regime";
    const auto& grids = policy.grids();
    const int U = grids.nu() - 1;
    const int zero = grids.zero_index();
    const auto range = policy.exact_range(t);
    for (int j = 0; j < grids.ny(); ++j) {
        if (!g.reliable[static_cast<std::size_t>(j)]) continue;
        // Work in grid steps relative to x = 0 so that x, y, u and g share units.
        const int gy = g.g_index[static_cast<std::size_t>(j)] - zero;
        for (int i = range.lo; i <= range.hi; ++i) {
            const int xs = i - zero;
            const int lo = policy.u_min_index(t, i, j);
            const int hi = policy.u_max_index(t, i, j);
            ++rep.check.checked;
            std::ostringstream what;
            if (xs <= gy) {
                ++rep.idle_states;
                if (hi > 1) {
                    what << "idle regime: argmin [" << lo << ", " << hi << "] cells, expected 0";
                    rep.check.add({t, grids.x(i), grids.y(j), grids.u(hi), what.str()});
                }
            } else if (xs <= gy + j) {
                ++rep.tracking_states;
                const int expected = std::min(xs - gy, U);
                const int miss = std::max(std::abs(lo - expected), std::abs(hi - expected));
                if (miss > 1) {
                    what << "tracking regime: argmin [" << lo << ", " << hi << "] cells, expected " << expected;
                    rep.check.add({t, grids.x(i), grids.y(j), grids.u(miss), what.str()});
                }
            } else {
                ++rep.peak_states;
                const int z = g.z_star_index(grids, i);
                if (lo > j) ++rep.above_peak;
                if (lo < std::min(xs - gy, U)) ++rep.capped;
                const int below = j - 1 - lo;
                const int above = z < 0 ? 0 : hi - (std::min(z, U) + 1);
                if (z < 0 || below > 0 || above > 0) {
                    what << "peak regime: argmin [" << lo << ", " << hi << "] cells, expected within [" << j << ", "
                         << z << "]";
                    rep.check.add({t, grids.x(i), grids.y(j), grids.u(std::max({below, above, 1})), what.str()});
                }
            }
        }
    }
    return rep;
}

// *******************************************************
// Threshold fit
// *******************************************************

nlohmann::json ThresholdFit::to_json() const {
    return {{"t", t}, {"refused", refused}, {"diagnostic", diagnostic}, {"s", s}, {"S", S}, {"residual", residual}};
}

ThresholdFit fit_threshold(const PolicyTable& policy, int t) {
    ThresholdFit fit;
    fit.t = t;
    const auto& g = policy.grids();
    const int U = g.nu() - 1;
    const auto range = policy.exact_range(t);
    if (range.empty()) {
        fit.refused = true;
        fit.diagnostic = "no boundary-free states at this stage";
        return fit;
    }
    for (int i = range.lo; i <= range.hi; ++i)
        for (int j = 1; j < g.ny(); ++j)
            if (policy.u_min_index(t, i, j) != policy.u_min_index(t, i, 0)) {
                std::ostringstream msg;
                msg << "policy depends on y at x = " << g.x(i) << ": u(y=0) = " << policy.action(t, i, 0)
                    << ", u(y=" << g.y(j) << ") = " << policy.action(t, i, j);
                fit.refused = true;
                fit.diagnostic = msg.str();
                return fit;
            }

    int s_idx = range.lo - 1;
    for (int i = range.lo; i <= range.hi; ++i)
        if (policy.u_min_index(t, i, 0) == 0) s_idx = i;
    fit.s = g.x(s_idx);

    // Most frequent post-decision level among unclipped active states; ties go low.
    std::map<int, int> counts;
    for (int i = s_idx + 1; i <= range.hi; ++i) {
        const int k = policy.u_min_index(t, i, 0);
        if (k < U) ++counts[i - k];
    }
    if (counts.empty()) {
        fit.refused = true;
        fit.diagnostic = "no unclipped active states above s to determine S";
        return fit;
    }
    int level = counts.begin()->first;
    int most = 0;
    for (auto [lvl, n] : counts)
        if (n > most) {
            most = n;
            level = lvl;
        }
    fit.S = g.x(level);

    for (int i = range.lo; i <= range.hi; ++i) {
        const int fitted = i > s_idx ? std::clamp(i - level, 0, U) : 0;
        fit.residual = std::max(fit.residual, std::abs(g.u(fitted) - policy.action(t, i, 0)));
    }
    return fit;
}

}  // namespace peakdp::structure
