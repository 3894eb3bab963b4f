#include <doctest.h>

#include <sstream>

#include "peakdp/tuner.hpp"
#include "support.hpp"

using namespace peakdp;
using namespace peakdp::tuner;

namespace {

ProblemSpec stochastic_spec(double P, int T = 4) {
    const HeatDistribution heat({{0.5, 0.25}, {1.0, 0.5}, {1.5, 0.25}});
    return testsupport::uniform_spec(T, heat, PenaltyParams::quadratic(20, 1), 0, 1, P);
}

}  // namespace

TEST_CASE("family policies") {
    const auto phase = StagePhase::alternating(4);  // off, on, off, on
    SUBCASE("static") {
        const auto p = make_policy({FamilyKind::static_threshold, {0.0}}, phase, 4);
        CHECK(p->act(1, 2.0, 0.0).u == 2.0);
        CHECK(p->act(1, -1.0, 0.0).u == 0.0);
        CHECK(p->act(1, 9.0, 0.0).u == 4.0);  // clipped to u_max
    }
    SUBCASE("dynamic uses the stage phase") {
        const auto p = make_policy({FamilyKind::dynamic_threshold, {1.0, 0.0}}, phase, 4);
        CHECK(p->act(1, 0.5, 0.0).u == 0.5);  // off-peak level 0
        CHECK(p->act(2, 0.5, 0.0).u == 0.0);  // on-peak level 1
        CHECK(p->act(2, 2.5, 0.0).u == 1.5);
    }
    SUBCASE("modified") {
        const auto p = make_policy({FamilyKind::modified_threshold, {0.5, 1.5}}, phase, 4);
        CHECK(p->act(1, 3.0, 0.5).u == 1.5);
        CHECK(p->act(1, 1.2, 0.5).u == 0.5);
        CHECK(p->act(1, 0.2, 1.0).u == 0.0);
    }
    SUBCASE("dynamic modified") {
        const auto p = make_policy({FamilyKind::dynamic_modified_threshold, {0.5, 1.5, 0.0, 0.0}}, phase, 4);
        CHECK(p->act(2, 3.0, 0.5).u == 1.5);
        CHECK(p->act(1, 3.0, 0.5).u == 3.0);
        CHECK(p->name() == "dynamic_modified_threshold");
    }
}

TEST_CASE("family validation and JSON") {
    CHECK_THROWS_AS(PolicyFamily({FamilyKind::modified_threshold, {1.5, 0.5}}).validate(), ValidationError);
    CHECK_THROWS_AS(PolicyFamily({FamilyKind::static_threshold, {1.0, 2.0}}).validate(), ValidationError);
    CHECK_THROWS_AS(make_policy({FamilyKind::modified_threshold, {1.5, 0.5}}, StagePhase::alternating(2), 3),
                    ValidationError);
    for (auto kind : kAllKinds) {
        PolicyFamily f{kind, {}};
        for (std::size_t i = 0; i < PolicyFamily::arity(kind); ++i) f.params.push_back(0.5 * static_cast<double>(i));
        CHECK(PolicyFamily::param_names(kind).size() == PolicyFamily::arity(kind));
        const auto back = PolicyFamily::from_json(f.to_json());
        CHECK(back.kind == kind);
        CHECK(back.params == f.params);
        CHECK(parse_kind(kind_name(kind)) == kind);
    }
    CHECK(parse_kind("dynamic") == FamilyKind::dynamic_threshold);
    CHECK_THROWS(parse_kind("nope"));
    CHECK(PolicyFamily::param_names(FamilyKind::dynamic_modified_threshold) ==
          std::vector<std::string>{"S_on", "S_hat_on", "S_off", "S_hat_off"});
}

TEST_CASE("a one-point box returns that point") {
    const auto spec = stochastic_spec(30, 2);
    TuneOptions o;
    o.box = {1.0, 1.0, 0.0};
    o.u_max = 4;
    o.budget = 7;
    o.n_eval = 50;
    o.seed = 3;
    const auto r = tune(spec, FamilyKind::modified_threshold, StagePhase::alternating(2), o);
    CHECK(r.best.params == std::vector<double>{1.0, 1.0});
    CHECK(r.trace.size() == 7);
    CHECK(r.result.n == 200);
}

TEST_CASE("search recovers the obvious level on a degenerate instance") {
    // No heat, start at 0, steep symmetric penalty: any s != 0 only adds cost.
    const auto spec = testsupport::uniform_spec(3, HeatDistribution::point(0.0), PenaltyParams::quadratic(10, 10), 0, 0, 0,
                                                2.0, 0.0);
    TuneOptions o;
    o.box = {-2.0, 2.0, 1.0};
    o.u_max = 4;
    o.budget = 400;
    o.n_eval = 5;
    o.seed = 8;
    const auto r = tune(spec, FamilyKind::static_threshold, StagePhase::alternating(3), o);
    CHECK(std::abs(r.best.params[0]) < 0.1);
    int refined = 0;
    for (const auto& c : r.trace) refined += c.refined.has_value();
    CHECK(refined == 5);
}

TEST_CASE("tuning is deterministic and parameters stay in the box") {
    const auto spec = stochastic_spec(30, 4);
    TuneOptions o;
    o.box = {-3.0, 3.0, 2.0};
    o.u_max = 4;
    o.budget = 60;
    o.n_eval = 40;
    o.seed = 17;
    const auto phase = StagePhase::alternating(4);
    const auto a = tune(spec, FamilyKind::dynamic_modified_threshold, phase, o);
    o.threads = 3;
    const auto b = tune(spec, FamilyKind::dynamic_modified_threshold, phase, o);
    CHECK(a.best.params == b.best.params);
    CHECK(a.result.mean == b.result.mean);
    for (const auto& c : a.trace) {
        const auto& p = c.family.params;
        for (double v : p) {
            CHECK(v >= -3.0);
            CHECK(v <= 3.0);
        }
        CHECK(p[1] - p[0] <= 2.0 + 1e-12);
        CHECK(p[1] >= p[0]);
    }
    std::ostringstream csv;
    write_trace_csv(a, csv);
    CHECK(csv.str().rfind("candidate,S_on,S_hat_on,S_off,S_hat_off,mean,se,refined_mean,refined_se\n", 0) == 0);
    const auto j = best_policy_json(a);
    CHECK(PolicyFamily::from_json(j).params == a.best.params);
}

TEST_CASE("invalid options are rejected") {
    const auto spec = stochastic_spec(30, 2);
    TuneOptions o;
    o.box = {0, 1, 1};
    o.u_max = 2;
    o.budget = 0;
    CHECK_THROWS_AS(tune(spec, FamilyKind::static_threshold, StagePhase::alternating(2), o), ValidationError);
    o.budget = 3;
    CHECK_THROWS_AS(tune(spec, FamilyKind::static_threshold, StagePhase::alternating(3), o), ValidationError);
}
