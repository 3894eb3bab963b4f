#include "peakdp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "peakdp/format.hpp"

namespace peakdp::sim {

// *******************************************************
// Policies
// *******************************************************

TabularPolicy::TabularPolicy(PolicyTable table, std::string name) : table_(std::move(table)), name_(std::move(name)) {}

Action TabularPolicy::act(int t, double x, double y) const {
    const auto& g = table_.grids();
    const double xr = std::round((x - g.x_min()) / g.step());
    const double yr = std::round(y / g.step());
    const int xi = static_cast<int>(std::clamp(xr, 0.0, static_cast<double>(g.nx() - 1)));
    const int yj = static_cast<int>(std::clamp(yr, 0.0, static_cast<double>(g.ny() - 1)));
    const double tol = 1e-9 * g.step();
    const bool off = std::abs(g.x(xi) - x) > tol || std::abs(g.y(yj) - y) > tol;
    return {table_.action(t, xi, yj), off};
}

// *******************************************************
// Random stream
// *******************************************************

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

double keyed_uniform(std::uint64_t seed, std::uint64_t rollout, std::uint64_t stage) {
    const std::uint64_t bits = splitmix64(splitmix64(splitmix64(seed) ^ rollout) ^ stage);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::vector<double> draw_heat(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t rollout) {
    std::vector<double> q(static_cast<std::size_t>(spec.horizon()));
    for (int t = 1; t <= spec.horizon(); ++t) {
        const auto& heat = spec.heat(t);
        q[static_cast<std::size_t>(t - 1)] =
            heat.support()[heat.sample_index(keyed_uniform(seed, rollout, static_cast<std::uint64_t>(t)))].value;
    }
    return q;
}

HeatDraws HeatDraws::generate(const ProblemSpec& spec, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("number of rollouts must be at least 1");
    HeatDraws d;
    d.horizon = spec.horizon();
    d.rollouts = n;
    d.seed = seed;
    d.q.reserve(static_cast<std::size_t>(n * spec.horizon()));
    for (std::int64_t r = 0; r < n; ++r) {
        const auto row = draw_heat(spec, seed, static_cast<std::uint64_t>(r));
        d.q.insert(d.q.end(), row.begin(), row.end());
    }
    return d;
}

// *******************************************************
// Rollouts
// *******************************************************

namespace {

double checked_load(const Action& a, double u_max, int t, double x, double y) {
    if (!(a.u >= 0.0 && a.u <= u_max)) {
        std::ostringstream msg;
        msg << "policy returned u = " << a.u << " outside [0, " << u_max << "] at t = " << t << ", x = " << x
            << ", y = " << y;
        throw ContractError(msg.str());
    }
    return a.u;
}

struct Totals {
    double ordering = 0.0;
    double penalty = 0.0;
    double peak = 0.0;
    double total = 0.0;
    int off_grid = 0;
};

// Same arithmetic as trajectory_cost without storing the path.
Totals rollout_totals(const ProblemSpec& spec, const Policy& policy, std::span<const double> draws, double u_max) {
    Totals out;
    double x = spec.x_init();
    double y = spec.y_init();
    for (int t = 1; t <= spec.horizon(); ++t) {
        const auto a = policy.act(t, x, y);
        out.off_grid += a.off_grid ? 1 : 0;
        const double u = checked_load(a, u_max, t, x, y);
        const auto next = step_dynamics(x, y, u, draws[static_cast<std::size_t>(t - 1)]);
        out.ordering += ordering_cost(spec.ordering(), t, u);
        out.penalty += penalty_cost(spec.penalty(t), next.x_next);
        x = next.x_next;
        y = next.y_next;
    }
    out.peak = spec.peak_price() * y;
    out.total = out.ordering + out.penalty + out.peak;
    return out;
}

}  // namespace

RolloutResult rollout(const ProblemSpec& spec, const Policy& policy, std::span<const double> draws,
                      const RolloutOptions& options) {
    const auto T = static_cast<std::size_t>(spec.horizon());
    if (draws.size() != T) throw ValidationError("rollout needs one heat draw per stage");
    RolloutResult out;
    auto& tr = out.trajectory;
    tr.xs.push_back(spec.x_init());
    tr.ys.push_back(spec.y_init());
    for (int t = 1; t <= spec.horizon(); ++t) {
        const double x = tr.xs.back();
        const double y = tr.ys.back();
        const auto a = policy.act(t, x, y);
        out.off_grid_steps += a.off_grid ? 1 : 0;
        const double u = checked_load(a, options.u_max, t, x, y);
        const double q = draws[static_cast<std::size_t>(t - 1)];
        const auto next = step_dynamics(x, y, u, q);
        tr.us.push_back(u);
        tr.qs.push_back(q);
        tr.xs.push_back(next.x_next);
        tr.ys.push_back(next.y_next);
    }
    out.cost = trajectory_cost(spec, std::span<const double>(tr.xs).first(T), tr.us, tr.qs);
    return out;
}

// *******************************************************
// Estimation
// *******************************************************

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanSe mean_and_se(std::span<const double> values) {
    MeanSe out;
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return out;
    out.mean = pairwise_sum(values) / n;
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
    out.se = std::sqrt(pairwise_sum(sq) / (n - 1.0)) / std::sqrt(n);
    return out;
}

Evaluation evaluate(const ProblemSpec& spec, const Policy& policy, const HeatDraws& draws, const SimOptions& options) {
    if (draws.horizon != spec.horizon()) throw ValidationError("heat draws do not match the horizon");
    const auto n = static_cast<std::size_t>(draws.rollouts);
    std::vector<double> ordering(n), penalty(n), peak(n), total(n);
    std::vector<int> off(n);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto tot = rollout_totals(spec, policy, draws.row(static_cast<std::int64_t>(r)), options.u_max);
            ordering[r] = tot.ordering;
            penalty[r] = tot.penalty;
            peak[r] = tot.peak;
            total[r] = tot.total;
            off[r] = tot.off_grid;
        }
    };

    const auto threads = static_cast<std::size_t>(std::max(1, options.threads));
    if (threads == 1 || n < 2 * threads) {
        work(0, n);
    } else {
        // Workers fill disjoint index ranges; the reduction below is sequential.
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                try {
                    work(std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    Evaluation ev;
    auto& res = ev.result;
    res.policy = policy.name();
    res.n = draws.rollouts;
    res.seed = draws.seed;
    const auto ms = mean_and_se(total);
    res.mean = ms.mean;
    res.se = ms.se;
    res.ordering = pairwise_sum(ordering) / static_cast<double>(n);
    res.penalty = pairwise_sum(penalty) / static_cast<double>(n);
    res.peak = pairwise_sum(peak) / static_cast<double>(n);
    for (int o : off) res.off_grid += o;
    ev.totals = std::move(total);
    return ev;
}

SimResult estimate_cost(const ProblemSpec& spec, const Policy& policy, std::int64_t n, std::uint64_t seed,
                        const SimOptions& options) {
    return evaluate(spec, policy, HeatDraws::generate(spec, n, seed), options).result;
}

PairedDifference paired_difference(const Evaluation& first, const Evaluation& second) {
    if (first.totals.size() != second.totals.size())
        throw ValidationError("paired difference needs evaluations on the same draws");
    std::vector<double> diff(first.totals.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = first.totals[i] - second.totals[i];
    const auto ms = mean_and_se(diff);
    PairedDifference d;
    d.first = first.result.policy;
    d.second = second.result.policy;
    d.mean = ms.mean;
    d.paired_se = ms.se;
    d.independent_se = std::hypot(first.result.se, second.result.se);
    return d;
}

Comparison compare_policies(const ProblemSpec& spec, std::span<const Policy* const> policies, std::int64_t n,
                            std::uint64_t seed, const SimOptions& options) {
    if (policies.size() < 2) throw ValidationError("compare_policies needs at least two policies");
    const auto draws = HeatDraws::generate(spec, n, seed);
    std::vector<Evaluation> evals;
    for (const auto* p : policies) evals.push_back(evaluate(spec, *p, draws, options));
    Comparison out;
    for (const auto& e : evals) out.results.push_back(e.result);
    for (std::size_t i = 0; i < evals.size(); ++i)
        for (std::size_t j = i + 1; j < evals.size(); ++j) out.differences.push_back(paired_difference(evals[i], evals[j]));
    return out;
}

// *******************************************************
// Export
// *******************************************************

void write_results_csv(std::span<const SimResult> results, std::ostream& out) {
    out << "policy,mean,se,ordering,penalty,peak,N,seed\n";
    for (const auto& r : results)
        out << r.policy << ',' << format_double(r.mean) << ',' << format_double(r.se) << ','
            << format_double(r.ordering) << ',' << format_double(r.penalty) << ',' << format_double(r.peak) << ','
            << r.n << ',' << r.seed << '\n';
}

void write_differences_csv(std::span<const PairedDifference> diffs, std::ostream& out) {
    out << "first,second,mean_difference,paired_se,independent_se\n";
    for (const auto& d : diffs)
        out << d.first << ',' << d.second << ',' << format_double(d.mean) << ',' << format_double(d.paired_se) << ','
            << format_double(d.independent_se) << '\n';
}

}  // namespace peakdp::sim
