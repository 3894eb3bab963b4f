#include <doctest.h>

#include <random>

#include "peakdp/dp.hpp"
#include "peakdp/structure.hpp"
#include "support.hpp"

using namespace peakdp;
using namespace peakdp::structure;

namespace {

ProblemSpec small_stochastic(double P, double K = 0.0, int T = 3) {
    const HeatDistribution heat({{0.5, 0.25}, {1.0, 0.5}, {1.5, 0.25}});
    return testsupport::uniform_spec(T, heat, PenaltyParams::quadratic(20, 1), K, 1, P);
}

// Every stage fully boundary-free with the given table contents.
ValueTable filled_values(const Grids& g, int T, double (*f)(double, double)) {
    ValueTable v(g, T);
    for (int t = 1; t <= T + 1; ++t) {
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) v.at(t, i, j) = f(g.x(i), g.y(j));
        v.set_exact_range(t, {0, g.nx() - 1});
    }
    return v;
}

}  // namespace

TEST_CASE("monotonicity check passes on a solve and flags a planted violation") {
    const auto spec = small_stochastic(30);
    const Grids g(-12, 8, 0.5, 3);
    const auto sol = solve(spec, g);
    const auto ok = check_monotone_in_y(sol.values);
    CHECK(ok.passed);
    CHECK(ok.checked > 0);

    auto bad = sol.values;
    bad.at(2, 5, 3) = bad(2, 5, 2) - 1.0;
    const auto rep = check_monotone_in_y(bad);
    CHECK_FALSE(rep.passed);
    REQUIRE(rep.violations.size() >= 1);
    CHECK(rep.violations.front().t == 2);
    CHECK(rep.worst_excess == doctest::Approx(1.0));
    CHECK(rep.to_json()["passed"] == false);
}

TEST_CASE("convexity check") {
    const Grids g(-3, 3, 0.5, 2);
    SUBCASE("convex function passes, a dent fails") {
        auto v = filled_values(g, 2, [](double x, double y) { return x * x + 3 * y + (x - y) * (x - y); });
        const auto spec = testsupport::zero_heat_abs_spec(2, 2, 3);
        CHECK(check_discrete_convexity(spec, v).passed);
        v.at(1, 6, 2) += 1.0;
        const auto rep = check_discrete_convexity(spec, v);
        CHECK_FALSE(rep.passed);
        CHECK(rep.worst_excess >= 1.0);
    }
    SUBCASE("terminal layer is linear and passes at zero tolerance") {
        const auto spec = small_stochastic(30);
        const auto sol = solve(spec, Grids(-12, 8, 0.5, 3));
        auto terminal = sol.values;
        for (int t = 1; t <= spec.horizon(); ++t) terminal.set_exact_range(t, {0, -1});
        CHECK(check_discrete_convexity(spec, terminal, 0.0).passed);
    }
    SUBCASE("zero-heat absolute-penalty instance: exact at the last stage, O(dx) earlier") {
        // Loads of x/2 fall between lattice points, so earlier layers are only convex up to one step.
        const auto spec = testsupport::zero_heat_abs_spec(3, 2, 3);
        double previous = 0.0;
        for (double dx : {0.5, 0.25, 0.125}) {
            const auto sol = solve(spec, Grids(-6, 6, dx, 3));
            auto last = sol.values;
            for (int t = 1; t < spec.horizon(); ++t) last.set_exact_range(t, {0, -1});
            CHECK(check_discrete_convexity(spec, last).passed);
            const auto rep = check_discrete_convexity(spec, sol.values);
            CHECK(rep.worst_excess <= dx + 1e-9);
            if (previous > 0.0) CHECK(rep.worst_excess <= 0.5 * previous + 1e-9);
            previous = rep.worst_excess;
        }
    }
    SUBCASE("not applicable with a setup cost") {
        const auto spec = small_stochastic(30, 2.0);
        const auto sol = solve(spec, Grids(-12, 8, 0.5, 3));
        const auto rep = check_discrete_convexity(spec, sol.values);
        CHECK_FALSE(rep.applicable);
        CHECK_FALSE(rep.passed);
    }
}

TEST_CASE("threshold fit recovers a planted (s, S) rule") {
    const Grids g(-4, 6, 0.5, 4);
    PolicyTable p(g, 1);
    const int s_idx = g.x_index(2.0), S_idx = g.x_index(1.0), U = g.nu() - 1;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const int k = i > s_idx ? std::min(i - S_idx, U) : 0;
            p.set(1, i, j, k, k);
        }
    p.set_exact_range(1, {0, g.nx() - 1});
    const auto fit = fit_threshold(p, 1);
    REQUIRE_FALSE(fit.refused);
    CHECK(fit.s == 2.0);
    CHECK(fit.S == 1.0);
    CHECK(fit.residual == 0.0);
    CHECK(fit.within(g.step()));

    SUBCASE("y-dependence is refused with a diagnostic") {
        p.set(1, 3, 2, 1, 1);
        const auto r = fit_threshold(p, 1);
        CHECK(r.refused);
        CHECK(r.diagnostic.find("depends on y") != std::string::npos);
    }
    SUBCASE("an off-rule action shows up in the residual") {
        const int k = g.u_index(1.0);
        for (int j = 0; j < g.ny(); ++j) p.set(1, g.x_index(4.0), j, k, k);
        const auto r = fit_threshold(p, 1);
        REQUIRE_FALSE(r.refused);
        CHECK(r.residual == doctest::Approx(2.0));
        CHECK_FALSE(r.within(g.step()));
    }
}

TEST_CASE("free peaks: y-independent thresholds agree with the g-curve") {
    const auto spec = small_stochastic(0.0);
    const auto g = testsupport::clean_grids(spec, 0.5, 4, 4);
    const auto sol = solve(spec, g);
    for (int t = 1; t <= spec.horizon(); ++t) {
        const auto fit = fit_threshold(sol.policy, t);
        REQUIRE_FALSE(fit.refused);
        CHECK(fit.within(g.step()));
        const auto curve = extract_g_curve(spec, g, sol.values, t);
        for (int j = 0; j < g.ny(); ++j) {
            if (!curve.reliable[static_cast<std::size_t>(j)]) continue;
            CHECK(curve.g[static_cast<std::size_t>(j)] == curve.g[0]);
            CHECK(std::abs(curve.g[static_cast<std::size_t>(j)] - fit.S) <= g.step() + 1e-12);
        }
    }
}

TEST_CASE("three-regime check on priced peaks") {
    const auto spec = small_stochastic(30.0);
    const auto g = testsupport::clean_grids(spec, 0.5, 4, 4);
    const auto sol = solve(spec, g);
    for (int t = 1; t <= spec.horizon(); ++t) {
        const auto curve = extract_g_curve(spec, g, sol.values, t);
        const auto rep = verify_three_regime(sol.policy, curve, t);
        CHECK(rep.check.passed);
        CHECK(rep.check.checked > 0);
        CHECK(rep.idle_states + rep.tracking_states + rep.peak_states > 0);
        CHECK(rep.to_json().contains("idle_states"));
    }

    SUBCASE("a planted wrong action is reported") {
        const int t = 1;
        const auto curve = extract_g_curve(spec, g, sol.values, t);
        auto broken = sol.policy;
        const auto range = broken.exact_range(t);
        // A state deep in the idle regime told to order the maximum.
        int victim = -1;
        for (int i = range.lo; i <= range.hi && victim < 0; ++i)
            if (curve.reliable[0] && i < curve.g_index[0] - 2) victim = i;
        REQUIRE(victim >= 0);
        broken.set(t, victim, 0, g.nu() - 1, g.nu() - 1);
        CHECK_FALSE(verify_three_regime(broken, curve, t).check.passed);
    }
}

TEST_CASE("g-curve requires K = 0") {
    const auto spec = small_stochastic(30.0, 1.0, 2);
    const Grids g(-10, 6, 0.5, 3);
    const auto sol = solve(spec, g);
    CHECK_THROWS_AS(extract_g_curve(spec, g, sol.values, 1), ValidationError);
}

TEST_CASE("single-point y grid") {
    const auto spec = small_stochastic(30.0, 0.0, 2);
    const Grids g(-6, 6, 0.5, 0.0);
    const auto sol = solve(spec, g);
    CHECK(g.ny() == 1);
    CHECK(check_monotone_in_y(sol.values).passed);
    const auto curve = extract_g_curve(spec, g, sol.values, 1);
    CHECK(curve.g.size() == 1);
    const auto fit = fit_threshold(sol.policy, 1);
    CHECK(fit.refused);  // every action is 0 = u_max, nothing unclipped
}

TEST_CASE("z* picks the largest reliable y with g + y <= x") {
    const Grids g(-2, 2, 0.5, 1);
    GCurve c;
    c.g_index = {g.x_index(0.0), g.x_index(0.0), g.x_index(-0.5)};
    c.g = {0.0, 0.0, -0.5};
    c.reliable = {true, true, true};
    CHECK(c.z_star_index(g, g.x_index(0.0)) == 0);
    CHECK(c.z_star_index(g, g.x_index(0.5)) == 2);  // -0.5 + 1 = 0.5
    CHECK(c.z_star_index(g, g.x_index(-1.0)) == -1);
    c.reliable[2] = false;
    CHECK(c.z_star_index(g, g.x_index(0.5)) == 1);
}
