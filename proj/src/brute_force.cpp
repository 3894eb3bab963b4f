#include <algorithm>
#include <limits>
#include <sstream>

#include "peakdp/dp.hpp"

namespace peakdp {

double DecisionRule::at(const std::vector<int>& history) const {
    auto it = decisions.find(history);
    if (it == decisions.end()) throw std::out_of_range("decision rule has no entry for this history");
    return it->second;
}

std::vector<double> DecisionRule::along(const std::vector<int>& outcomes, int horizon) const {
    std::vector<double> loads;
    std::vector<int> history;
    for (int t = 1; t <= horizon; ++t) {
        loads.push_back(at(history));
        if (t < horizon) history.push_back(outcomes.at(static_cast<std::size_t>(t - 1)));
    }
    return loads;
}

namespace {

/**
Exhaustive scenario-tree search.

The decisions taken below different children of a node never interact, so
the minimum over whole decision rules equals the minimum, at every node, over
that node's load of the probability-weighted minima of its subtrees. Each
leaf is charged the realized cost of its path, peak term included.
*/
class TreeSearch {
public:
    TreeSearch(const ProblemSpec& spec, const Grids& grids) : spec_(spec), loads_(static_cast<std::size_t>(grids.nu())) {
        for (int k = 0; k < grids.nu(); ++k) loads_[static_cast<std::size_t>(k)] = grids.u(k);
    }

    /// Expected total cost below a node at stage t given the cost accrued so far.
    double best(int t, double x, double y, double accrued) const { return evaluate(t, x, y, accrued).cost; }

    void extract(int t, double x, double y, double accrued, std::vector<int>& history, DecisionRule& rule) const {
        if (t > spec_.horizon()) return;
        const auto choice = evaluate(t, x, y, accrued);
        rule.decisions[history] = choice.load;
        const double o = ordering_cost(spec_.ordering(), t, choice.load);
        const auto support = spec_.heat(t).support();
        for (std::size_t s = 0; s < support.size(); ++s) {
            const double x_next = x - choice.load + support[s].value;
            const double stage = o + penalty_cost(spec_.penalty(t), x_next);
            history.push_back(static_cast<int>(s));
            extract(t + 1, x_next, std::max(y, choice.load), accrued + stage, history, rule);
            history.pop_back();
        }
    }

private:
    struct Choice {
        double cost;
        double load;
    };

    Choice evaluate(int t, double x, double y, double accrued) const {
        if (t > spec_.horizon()) return {accrued + spec_.peak_price() * y, 0.0};
        Choice out{std::numeric_limits<double>::infinity(), 0.0};
        const auto support = spec_.heat(t).support();
        for (double u : loads_) {
            const double o = ordering_cost(spec_.ordering(), t, u);
            const double y_next = std::max(y, u);
            double expected = 0.0;
            for (const auto& outcome : support) {
                const double x_next = x - u + outcome.value;
                const double stage = o + penalty_cost(spec_.penalty(t), x_next);
                expected += outcome.prob * best(t + 1, x_next, y_next, accrued + stage);
            }
            if (expected < out.cost) out = {expected, u};
        }
        return out;
    }

    const ProblemSpec& spec_;
    std::vector<double> loads_;
};

}  // namespace

BruteForceResult brute_force_solve(const ProblemSpec& spec, const Grids& grids, const BruteForceLimits& limits) {
    std::ostringstream why;
    if (spec.horizon() > limits.max_horizon) why << "horizon " << spec.horizon() << " > " << limits.max_horizon << "; ";
    for (int t = 1; t <= spec.horizon(); ++t)
        if (spec.heat(t).size() > limits.max_support)
            why << "stage " << t << " support size " << spec.heat(t).size() << " > " << limits.max_support << "; ";
    if (grids.nu() > limits.max_actions) why << "u-grid size " << grids.nu() << " > " << limits.max_actions << "; ";
    if (!why.str().empty()) throw InstanceTooLarge("brute_force_solve refuses instance: " + why.str());
    grids.check_alignment(spec);

    TreeSearch search(spec, grids);
    BruteForceResult result;
    result.cost = search.best(1, spec.x_init(), spec.y_init(), 0.0);
    std::vector<int> history;
    search.extract(1, spec.x_init(), spec.y_init(), 0.0, history, result.rule);
    return result;
}

}  // namespace peakdp
