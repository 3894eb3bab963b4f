#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "peakdp/dp.hpp"
#include "support.hpp"

using namespace peakdp;
using namespace testsupport;

namespace {

double v1_at(const Solution& s, const Grids& g, double x, double y, int t = 1) {
    return s.values(t, g.x_index(x), g.y_index(y));
}
double action_at(const Solution& s, const Grids& g, double x, double y, int t = 1) {
    return s.policy.action(t, g.x_index(x), g.y_index(y));
}

}  // namespace

TEST_CASE("single stage with zero heat and |x| penalty") {
    const auto spec = zero_heat_abs_spec(1, 2.0, 3.0);
    const Grids g(-3, 3, 0.5, 3);
    const auto sol = solve(spec, g);
    CHECK(v1_at(sol, g, 2, 1) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(action_at(sol, g, 2, 1) == 1.0);
    CHECK(action_at(sol, g, 1, 2) == 1.0);
    CHECK(action_at(sol, g, -1, 2) == 0.0);
}

TEST_CASE("terminal layer is P y") {
    const auto spec = uniform_spec(3, HeatDistribution({{0, 0.5}, {1, 0.5}}), PenaltyParams::quadratic(2, 1), 1, 1, 5);
    const Grids g(-4, 4, 0.5, 2);
    const auto sol = solve(spec, g);
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) CHECK(sol.values(4, i, j) == 5 * g.y(j));
}

TEST_CASE("two stages before the end, x/2 branch at (4, 1)") {
    const auto spec = zero_heat_abs_spec(2, 2.0, 3.0, 4.0, 1.0);
    const Grids g(-6, 6, 0.5, 4);
    const auto sol = solve(spec, g);
    CHECK(action_at(sol, g, 4, 1) == 2.0);
    CHECK(sol.policy.u_max_index(1, g.x_index(4), g.y_index(1)) == g.u_index(2));

    const auto brute = brute_force_solve(spec, g);
    CHECK(brute.rule.at({}) == 2.0);
    CHECK(brute.cost == doctest::Approx(sol.initial_value(spec)).epsilon(1e-12));
}

TEST_CASE("bellman_rhs") {
    const auto spec = zero_heat_abs_spec(1, 2.0, 3.0);
    const Grids g(-3, 3, 0.5, 3);
    std::vector<double> zeros(static_cast<std::size_t>(g.nx() * g.ny()), 0.0);
    const ValueSlice zero{zeros, g.nx(), g.ny()};
    for (int i = 0; i < g.nx(); ++i)
        for (int k = 0; k < g.nu(); ++k)
            CHECK(bellman_rhs(spec, g, zero, 1, i, 2, k) == doctest::Approx(stage_cost(spec, 1, g.x(i), g.u(k))));

    const auto sol = solve(spec, g);
    const auto terminal = sol.values.layer(2);
    for (int k = 3; k < g.nu(); ++k)
        CHECK(bellman_rhs(spec, g, terminal, 1, g.x_index(1), 2, k) ==
              doctest::Approx(stage_cost(spec, 1, 1, g.u(k)) + 3 * g.u(k)));
    CHECK(bellman_rhs(spec, g, terminal, 1, g.x_index(2), g.y_index(1), g.u_index(1)) == doctest::Approx(6.0));
}

TEST_CASE("scenario-tree oracle on the peak-dependence example") {
    const Grids g(-4, 4, 0.5, 3);
    SUBCASE("y_init = 1") {
        const auto spec = peak_carryover_spec(1.0);
        const auto r = brute_force_solve(spec, g);
        CHECK(r.cost == 31.0);
        CHECK(r.rule.along({0}, 2) == std::vector<double>{1, 1});
        CHECK(solve(spec, g).initial_value(spec) == 31.0);
    }
    SUBCASE("y_init = 2") {
        const auto spec = peak_carryover_spec(2.0);
        const auto r = brute_force_solve(spec, g);
        CHECK(r.cost == 60.0);
        CHECK(r.rule.along({0}, 2) == std::vector<double>{0, 2});
        CHECK(solve(spec, g).initial_value(spec) == 60.0);
    }
}

TEST_CASE("scenario-tree oracle equals open-loop minimum when heat is deterministic") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        RandomOptions o;
        o.min_horizon = o.max_horizon = 3;
        o.min_support = o.max_support = 1;
        o.peak_lo = 0;
        o.peak_hi = 10;
        auto spec = random_spec(rng, o).with_initial_state(0.5, 0.0);
        const Grids g(-8, 8, 0.5, 2);
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < g.nu(); ++a)
            for (int b = 0; b < g.nu(); ++b)
                for (int c = 0; c < g.nu(); ++c) {
                    const std::vector<double> us{g.u(a), g.u(b), g.u(c)};
                    std::vector<double> xs{spec.x_init()}, qs;
                    for (int t = 1; t <= 3; ++t) {
                        qs.push_back(spec.heat(t).max());
                        if (t < 3) xs.push_back(xs.back() - us[static_cast<std::size_t>(t - 1)] + qs.back());
                    }
                    best = std::min(best, trajectory_cost(spec, xs, us, qs).total);
                }
        CHECK(brute_force_solve(spec, g).cost == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("scenario-tree oracle refuses large instances") {
    const auto big_t = zero_heat_abs_spec(5, 2, 3);
    CHECK_THROWS_AS(brute_force_solve(big_t, Grids(-3, 3, 0.5, 3)), InstanceTooLarge);
    const HeatDistribution four({{0, 0.25}, {0.5, 0.25}, {1, 0.25}, {1.5, 0.25}});
    CHECK_THROWS_AS(brute_force_solve(uniform_spec(1, four, PenaltyParams::quadratic(1, 1), 0, 1, 1), Grids(-3, 3, 0.5, 3)),
                    InstanceTooLarge);
    CHECK_THROWS_AS(brute_force_solve(zero_heat_abs_spec(1, 2, 3), Grids(-3, 3, 0.05, 3)), InstanceTooLarge);
}

TEST_CASE("policy_from_value reproduces the solver's argmin sets") {
    std::mt19937_64 rng(4);
    RandomOptions o;
    o.peak_lo = 1;
    o.peak_hi = 20;
    o.setup_cost = 1.0;
    const auto spec = random_spec(rng, o);
    const auto g = clean_grids(spec, 0.5, 2.0);
    const auto sol = solve(spec, g);
    const auto pol = policy_from_value(spec, g, sol.values);
    for (int t = 1; t <= spec.horizon(); ++t)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                CHECK(pol.u_min_index(t, i, j) == sol.policy.u_min_index(t, i, j));
                CHECK(pol.u_max_index(t, i, j) == sol.policy.u_max_index(t, i, j));
            }
}

TEST_CASE("flat problem: every load is optimal, primary action 0") {
    const auto spec = uniform_spec(2, HeatDistribution::point(0.5), PenaltyParams::quadratic(0, 0), 0, 0, 0);
    const Grids g(-3, 3, 0.5, 2);
    const auto sol = solve(spec, g);
    for (int t = 1; t <= 2; ++t)
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                CHECK(sol.policy.u_min_index(t, i, j) == 0);
                CHECK(sol.policy.u_max_index(t, i, j) == g.nu() - 1);
            }
}

TEST_CASE("free peaks, no setup cost: argmin is almost always a single load") {
    std::mt19937_64 rng(8);
    RandomOptions o;
    o.max_horizon = 4;
    const auto spec = random_spec(rng, o);
    const auto g = clean_grids(spec, 0.5, 2.0);
    const auto sol = solve(spec, g);
    std::int64_t total = 0, unique = 0;
    for (int t = 1; t <= spec.horizon(); ++t) {
        const auto r = sol.policy.exact_range(t);
        for (int i = r.lo; i <= r.hi; ++i)
            for (int j = 0; j < g.ny(); ++j) {
                ++total;
                unique += sol.policy.u_min_index(t, i, j) == sol.policy.u_max_index(t, i, j);
            }
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(unique) >= 0.9 * static_cast<double>(total));
}

TEST_CASE("Bellman consistency and table invariants on random instances") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 6; ++rep) {
        RandomOptions o;
        o.linear = true;
        o.peak_lo = 0;
        o.peak_hi = 30;
        o.setup_cost = rep % 2 ? 2.0 : 0.0;
        const auto spec = random_spec(rng, o);
        const Grids g(-4, 4, 0.5, 2);
        const auto sol = solve(spec, g);
        CHECK(sol.values.min_value() >= 0.0);
        for (int t = 1; t <= spec.horizon(); ++t) {
            const auto next = sol.values.layer(t + 1);
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j) {
                    double best = std::numeric_limits<double>::infinity();
                    for (int k = 0; k < g.nu(); ++k) best = std::min(best, bellman_rhs(spec, g, next, t, i, j, k));
                    const double v = sol.values(t, i, j);
                    CHECK(v == doctest::Approx(best).epsilon(1e-9));
                    CHECK(bellman_rhs(spec, g, next, t, i, j, sol.policy.u_min_index(t, i, j)) ==
                          doctest::Approx(v).epsilon(1e-9));
                    CHECK(bellman_rhs(spec, g, next, t, i, j, sol.policy.u_max_index(t, i, j)) ==
                          doctest::Approx(v).epsilon(1e-9));
                }
        }
    }
}

TEST_CASE("value is monotone in P and in y") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 4; ++rep) {
        RandomOptions o;
        o.peak_lo = 1;
        o.peak_hi = 10;
        const auto spec = random_spec(rng, o);
        const Grids g(-5, 5, 0.5, 2);
        const auto lo = solve(spec, g);
        const auto hi = solve(spec.with_peak_price(spec.peak_price() + 5), g);
        for (int t = 1; t <= spec.horizon() + 1; ++t)
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j) {
                    CHECK(hi.values(t, i, j) >= lo.values(t, i, j) - 1e-12);
                    if (j + 1 < g.ny()) CHECK(lo.values(t, i, j) <= lo.values(t, i, j + 1) + 1e-12);
                }
    }
}

TEST_CASE("halving the grid step moves V_1 by O(step)") {
    // Rounding each load of a fine-grid policy to the coarse grid costs at most
    // (a + b + P) * step per stage for |x| penalties.
    const double b = 4, P = 6, a = 1;
    const HeatDistribution heat({{0.0, 0.5}, {1.0, 0.5}});
    const auto spec = uniform_spec(3, heat, PenaltyParams::linear(b, b), 0, a, P, 1.0, 0.0);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (double step : {0.5, 0.25, 0.125}) {
        const auto g = clean_grids(spec, step, 3.0);
        const auto sol = solve(spec, g);
        REQUIRE(sol.boundary.clean());
        const double v = sol.initial_value(spec);
        if (!std::isnan(prev)) {
            CHECK(v <= prev + 1e-12);
            CHECK(prev - v <= spec.horizon() * (a + b + P) * 2 * step);
        }
        prev = v;
    }
}

TEST_CASE("boundary log") {
    const auto spec = uniform_spec(3, HeatDistribution({{0.0, 0.5}, {1.0, 0.5}}), PenaltyParams::quadratic(2, 1), 0, 1, 3);
    const auto narrow = solve(spec, Grids(-1, 1, 0.5, 1));
    CHECK(narrow.boundary.clamped_total > 0);
    CHECK_FALSE(narrow.boundary.clean());
    const auto wide = solve(spec, clean_grids(spec, 0.5, 1.0));
    CHECK(wide.boundary.clean());
    CHECK(wide.boundary.clamped_total > 0);  // edge states far from x_init still clamp
}

TEST_CASE("exact ranges shrink backward from the terminal layer") {
    const auto spec = uniform_spec(3, HeatDistribution({{0.5, 0.5}, {1.5, 0.5}}), PenaltyParams::quadratic(2, 1), 0, 1, 3);
    const Grids g(-10, 10, 0.5, 2);
    const auto sol = solve(spec, g);
    // The last stage reads only the analytic terminal layer.
    CHECK(sol.values.exact_range(4).lo == 0);
    CHECK(sol.values.exact_range(3).lo == 0);
    CHECK(sol.values.exact_range(3).hi == g.nx() - 1);
    // U = 4 cells, q in {1, 3} cells: lo grows by U - qmin = 3, hi shrinks by qmax = 3.
    CHECK(sol.values.exact_range(2).lo == 3);
    CHECK(sol.values.exact_range(2).hi == g.nx() - 1 - 3);
    CHECK(sol.values.exact_range(1).lo == 6);
    CHECK(sol.policy.exact_range(1).hi == g.nx() - 1 - 6);
}

TEST_CASE("misaligned heat support is rejected") {
    const auto spec = uniform_spec(1, HeatDistribution::point(0.3), PenaltyParams::quadratic(1, 1), 0, 1, 1);
    CHECK_THROWS_AS(solve(spec, Grids(-3, 3, 0.5, 3)), ValidationError);
}

TEST_CASE("CSV and JSON export") {
    const auto spec = zero_heat_abs_spec(1, 2.0, 3.0);
    const Grids g(-1, 1, 0.5, 1);
    const auto sol = solve(spec, g);
    std::ostringstream v, p;
    write_values_csv(sol.values, v);
    write_policy_csv(sol.policy, p);
    CHECK(v.str().rfind("t,x,y,value\n", 0) == 0);
    CHECK(p.str().rfind("t,x,y,u_min,u_max\n", 0) == 0);
    std::ostringstream again;
    write_values_csv(solve(spec, g).values, again);
    CHECK(again.str() == v.str());
    const auto doc = values_to_json(sol.values);
    CHECK(doc.is_object());
    CHECK(policy_to_json(sol.policy).is_object());
}
