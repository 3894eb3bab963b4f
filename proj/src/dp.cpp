#include "peakdp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "peakdp/format.hpp"
#include "peakdp/kernels.hpp"

namespace peakdp {

// *******************************************************
// Tables
// *******************************************************

ValueTable::ValueTable(Grids grids, int horizon)
    : grids_(std::move(grids)),
      horizon_(horizon),
      values_(static_cast<std::size_t>(horizon + 1) * static_cast<std::size_t>(grids_.nx()) *
                  static_cast<std::size_t>(grids_.ny()),
              0.0),
      exact_(static_cast<std::size_t>(horizon + 1), StateRange{0, grids_.nx() - 1}) {
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
}

std::size_t ValueTable::offset(int t, int xi, int yj) const {
    const auto nx = static_cast<std::size_t>(grids_.nx());
    const auto ny = static_cast<std::size_t>(grids_.ny());
    return (static_cast<std::size_t>(t - 1) * ny + static_cast<std::size_t>(yj)) * nx + static_cast<std::size_t>(xi);
}

ValueSlice ValueTable::layer(int t) const {
    const auto size = static_cast<std::size_t>(grids_.nx()) * static_cast<std::size_t>(grids_.ny());
    return {std::span<const double>(values_).subspan(offset(t, 0, 0), size), grids_.nx(), grids_.ny()};
}

std::span<double> ValueTable::mutable_layer(int t) {
    const auto size = static_cast<std::size_t>(grids_.nx()) * static_cast<std::size_t>(grids_.ny());
    return std::span<double>(values_).subspan(offset(t, 0, 0), size);
}

double ValueTable::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

PolicyTable::PolicyTable(Grids grids, int horizon)
    : grids_(std::move(grids)),
      horizon_(horizon),
      lo_(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(grids_.nx()) *
              static_cast<std::size_t>(grids_.ny()),
          0),
      hi_(lo_.size(), 0),
      exact_(static_cast<std::size_t>(horizon), StateRange{0, grids_.nx() - 1}) {}

std::size_t PolicyTable::offset(int t, int xi, int yj) const {
    const auto nx = static_cast<std::size_t>(grids_.nx());
    const auto ny = static_cast<std::size_t>(grids_.ny());
    return (static_cast<std::size_t>(t - 1) * ny + static_cast<std::size_t>(yj)) * nx + static_cast<std::size_t>(xi);
}

std::span<std::int32_t> PolicyTable::mutable_lo(int t) {
    const auto size = static_cast<std::size_t>(grids_.nx()) * static_cast<std::size_t>(grids_.ny());
    return std::span<std::int32_t>(lo_).subspan(offset(t, 0, 0), size);
}

std::span<std::int32_t> PolicyTable::mutable_hi(int t) {
    const auto size = static_cast<std::size_t>(grids_.nx()) * static_cast<std::size_t>(grids_.ny());
    return std::span<std::int32_t>(hi_).subspan(offset(t, 0, 0), size);
}

void PolicyTable::set(int t, int xi, int yj, int u_lo, int u_hi) {
    lo_[offset(t, xi, yj)] = u_lo;
    hi_[offset(t, xi, yj)] = u_hi;
}

double Solution::initial_value(const ProblemSpec& spec) const {
    const auto& g = values.grids();
    return values(1, g.x_index(spec.x_init()), g.y_index(spec.y_init()));
}

// *******************************************************
// Backward induction
// *******************************************************

namespace {

struct StageShifts {
    std::vector<double> weights;
    std::vector<int> offsets;  // heat values in grid steps
    int min_offset = 0;
    int max_offset = 0;
};

StageShifts stage_shifts(const ProblemSpec& spec, const Grids& grids, int t) {
    StageShifts out;
    for (const auto& o : spec.heat(t).support()) {
        out.weights.push_back(o.prob);
        out.offsets.push_back(static_cast<int>(grids.steps_of(o.value, "heat support value")));
    }
    out.min_offset = *std::min_element(out.offsets.begin(), out.offsets.end());
    out.max_offset = *std::max_element(out.offsets.begin(), out.offsets.end());
    return out;
}

/**
Minimizes the Bellman right-hand side for every (x, y) of stage t.

With U = nu - 1 the post-decision index p = xi - k + U runs over
[0, nx + U). For each successor peak index j' the continuation
W_{j'}[p] = E h(x_p + q) + E V_{t+1}(x_p + q, y_{j'}) is tabulated once; the
right-hand side for (xi, j, k) is then o(u_k) + W_{max(j, k)}[xi - k + U],
a min-plus sweep over xi handled by the kernels.
*/
void minimize_stage(const ProblemSpec& spec,
                    const Grids& grids,
                    int t,
                    ValueSlice next,
                    std::span<double> value_out,
                    std::span<std::int32_t> lo_out,
                    std::span<std::int32_t> hi_out) {
    const auto& ks = kernels::active();
    const int nx = grids.nx();
    const int ny = grids.ny();
    const int U = grids.nu() - 1;
    const auto n_post = static_cast<std::size_t>(nx + U);
    const auto unx = static_cast<std::size_t>(nx);
    const auto shifts = stage_shifts(spec, grids, t);
    const auto& h = spec.penalty(t);

    std::vector<double> expected_penalty(n_post);
    for (std::size_t p = 0; p < n_post; ++p) {
        const double x_post = grids.x(static_cast<int>(p) - U);
        double acc = 0.0;
        for (const auto& o : spec.heat(t).support()) acc += o.prob * penalty_cost(h, x_post + o.value);
        expected_penalty[p] = acc;
    }

    std::vector<double> continuation(static_cast<std::size_t>(ny) * n_post);
    for (int jp = 0; jp < ny; ++jp) {
        auto row = std::span<double>(continuation).subspan(static_cast<std::size_t>(jp) * n_post, n_post);
        ks.shifted_expectation(next.row(jp), shifts.weights, shifts.offsets, -U, row);
        for (std::size_t p = 0; p < n_post; ++p) row[p] = expected_penalty[p] + row[p];
    }

    std::vector<double> order(static_cast<std::size_t>(U + 1));
    for (int k = 0; k <= U; ++k) order[static_cast<std::size_t>(k)] = ordering_cost(spec.ordering(), t, grids.u(k));

    auto w_for = [&](int j, int k) {
        const int jp = std::max(j, k);
        return std::span<const double>(continuation)
            .subspan(static_cast<std::size_t>(jp) * n_post + static_cast<std::size_t>(U - k), unx);
    };

    std::vector<double> threshold(unx);
    for (int j = 0; j < ny; ++j) {
        auto best = value_out.subspan(static_cast<std::size_t>(j) * unx, unx);
        auto lo = lo_out.subspan(static_cast<std::size_t>(j) * unx, unx);
        auto hi = hi_out.subspan(static_cast<std::size_t>(j) * unx, unx);
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        for (int k = 0; k <= U; ++k) ks.min_plus(order[static_cast<std::size_t>(k)], w_for(j, k), best);

        for (std::size_t i = 0; i < unx; ++i)
            threshold[i] = best[i] + kTieTolerance * std::max(1.0, std::abs(best[i]));
        std::fill(lo.begin(), lo.end(), -1);
        std::fill(hi.begin(), hi.end(), -1);
        for (int k = 0; k <= U; ++k) ks.mark_minimizers(order[static_cast<std::size_t>(k)], w_for(j, k), threshold, k, lo, hi);
    }
}

void fill_terminal(const ProblemSpec& spec, const Grids& grids, ValueTable& values) {
    const int T = spec.horizon();
    for (int j = 0; j < grids.ny(); ++j)
        for (int i = 0; i < grids.nx(); ++i) values.at(T + 1, i, j) = spec.peak_price() * grids.y(j);
}

/// Ranges of x indices with boundary-free values, per stage.
std::vector<StateRange> exact_ranges(const ProblemSpec& spec, const Grids& grids) {
    const int T = spec.horizon();
    const int U = grids.nu() - 1;
    std::vector<StateRange> out(static_cast<std::size_t>(T + 1), StateRange{0, grids.nx() - 1});
    // Layer T looks up the analytic terminal layer only; earlier layers shrink.
    for (int t = T - 1; t >= 1; --t) {
        const auto sh = stage_shifts(spec, grids, t);
        const auto& nxt = out[static_cast<std::size_t>(t)];
        StateRange r{std::max(0, nxt.lo + U - sh.min_offset), std::min(grids.nx() - 1, nxt.hi - sh.max_offset)};
        if (nxt.empty()) r = StateRange{};
        out[static_cast<std::size_t>(t - 1)] = r;
    }
    return out;
}

BoundaryLog count_clamps(const ProblemSpec& spec, const Grids& grids) {
    BoundaryLog log;
    const int T = spec.horizon();
    const int nx = grids.nx();
    const int U = grids.nu() - 1;
    // Reachable x indices from x_init (not intersected with the grid).
    std::int64_t r_lo = grids.x_index(spec.x_init());
    std::int64_t r_hi = r_lo;
    for (int t = 1; t < T; ++t) {
        const auto sh = stage_shifts(spec, grids, t);
        for (int i = 0; i < nx; ++i) {
            std::int64_t clamps = 0;
            for (int k = 0; k <= U; ++k)
                for (int off : sh.offsets) {
                    const int idx = i - k + off;
                    if (idx < 0 || idx >= nx) ++clamps;
                }
            log.clamped_total += clamps * grids.ny();
            if (i >= r_lo && i <= r_hi) log.clamped_reachable += clamps * grids.ny();
        }
        r_lo += sh.min_offset - U;
        r_hi += sh.max_offset;
    }
    return log;
}

}  // namespace

Solution solve(const ProblemSpec& spec, const Grids& grids) {
    grids.check_alignment(spec);
    const int T = spec.horizon();
    Solution sol{ValueTable(grids, T), PolicyTable(grids, T), count_clamps(spec, grids)};

    fill_terminal(spec, grids, sol.values);
    const auto ranges = exact_ranges(spec, grids);
    for (int t = 1; t <= T + 1; ++t) sol.values.set_exact_range(t, ranges[static_cast<std::size_t>(t - 1)]);
    for (int t = 1; t <= T; ++t) sol.policy.set_exact_range(t, ranges[static_cast<std::size_t>(t - 1)]);

    for (int t = T; t >= 1; --t)
        minimize_stage(spec, grids, t, sol.values.layer(t + 1), sol.values.mutable_layer(t), sol.policy.mutable_lo(t),
                       sol.policy.mutable_hi(t));
    return sol;
}

double bellman_rhs(const ProblemSpec& spec, const Grids& grids, ValueSlice next, int t, int xi, int yj, int uk) {
    const double x = grids.x(xi);
    const double u = grids.u(uk);
    const int jp = std::max(yj, uk);
    double continuation = 0.0;
    for (const auto& o : spec.heat(t).support()) {
        const auto q = static_cast<int>(grids.steps_of(o.value, "heat support value"));
        const int idx = std::clamp(xi - uk + q, 0, grids.nx() - 1);
        continuation += o.prob * next(idx, jp);
    }
    return stage_cost(spec, t, x, u) + continuation;
}

PolicyTable policy_from_value(const ProblemSpec& spec, const Grids& grids, const ValueTable& values) {
    grids.check_alignment(spec);
    const int T = spec.horizon();
    PolicyTable policy(grids, T);
    std::vector<double> scratch(static_cast<std::size_t>(grids.nx()) * static_cast<std::size_t>(grids.ny()));
    for (int t = 1; t <= T; ++t) {
        policy.set_exact_range(t, values.exact_range(t));
        minimize_stage(spec, grids, t, values.layer(t + 1), scratch, policy.mutable_lo(t), policy.mutable_hi(t));
    }
    return policy;
}

// *******************************************************
// Export
// *******************************************************

void write_values_csv(const ValueTable& values, std::ostream& out) {
    const auto& g = values.grids();
    out << "t,x,y,value\n";
    for (int t = 1; t <= values.horizon() + 1; ++t)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j)
                out << t << ',' << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
                    << format_double(values(t, i, j)) << '\n';
}

void write_policy_csv(const PolicyTable& policy, std::ostream& out) {
    const auto& g = policy.grids();
    out << "t,x,y,u_min,u_max\n";
    for (int t = 1; t <= policy.horizon(); ++t)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j)
                out << t << ',' << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
                    << format_double(g.u(policy.u_min_index(t, i, j))) << ','
                    << format_double(g.u(policy.u_max_index(t, i, j))) << '\n';
}

namespace {

nlohmann::json grid_json(const Grids& g) {
    return {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"dx", g.step()}, {"u_max", g.u_max()}};
}

}  // namespace

nlohmann::json values_to_json(const ValueTable& values) {
    const auto& g = values.grids();
    nlohmann::json layers = nlohmann::json::array();
    for (int t = 1; t <= values.horizon() + 1; ++t) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < g.nx(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (int j = 0; j < g.ny(); ++j) row.push_back(values(t, i, j));
            rows.push_back(std::move(row));
        }
        layers.push_back(std::move(rows));
    }
    return {{"grid", grid_json(g)}, {"horizon", values.horizon()}, {"layout", "t,x,y"}, {"values", std::move(layers)}};
}

nlohmann::json policy_to_json(const PolicyTable& policy) {
    const auto& g = policy.grids();
    nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
    for (int t = 1; t <= policy.horizon(); ++t) {
        nlohmann::json lo_rows = nlohmann::json::array(), hi_rows = nlohmann::json::array();
        for (int i = 0; i < g.nx(); ++i) {
            nlohmann::json lr = nlohmann::json::array(), hr = nlohmann::json::array();
            for (int j = 0; j < g.ny(); ++j) {
                lr.push_back(g.u(policy.u_min_index(t, i, j)));
                hr.push_back(g.u(policy.u_max_index(t, i, j)));
            }
            lo_rows.push_back(std::move(lr));
            hi_rows.push_back(std::move(hr));
        }
        lo.push_back(std::move(lo_rows));
        hi.push_back(std::move(hi_rows));
    }
    return {{"grid", grid_json(g)}, {"horizon", policy.horizon()}, {"layout", "t,x,y"}, {"u_min", std::move(lo)},
            {"u_max", std::move(hi)}};
}

}  // namespace peakdp
