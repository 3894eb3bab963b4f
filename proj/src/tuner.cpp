#include "peakdp/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "peakdp/closed_form.hpp"
#include "peakdp/format.hpp"

namespace peakdp::tuner {

const char* kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::static_threshold: return "static_threshold";
        case FamilyKind::dynamic_threshold: return "dynamic_threshold";
        case FamilyKind::modified_threshold: return "modified_threshold";
        case FamilyKind::dynamic_modified_threshold: return "dynamic_modified_threshold";
    }
    return "?";
}

FamilyKind parse_kind(const std::string& name) {
    for (auto k : kAllKinds) {
        const std::string full = kind_name(k);
        if (name == full || name + "_threshold" == full) return k;
    }
    throw ValidationError("unknown policy family '" + name + "'");
}

std::size_t PolicyFamily::arity(FamilyKind kind) { return param_names(kind).size(); }

std::vector<std::string> PolicyFamily::param_names(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::static_threshold: return {"s"};
        case FamilyKind::dynamic_threshold: return {"s_on", "s_off"};
        case FamilyKind::modified_threshold: return {"S", "S_hat"};
        case FamilyKind::dynamic_modified_threshold: return {"S_on", "S_hat_on", "S_off", "S_hat_off"};
    }
    return {};
}

void PolicyFamily::validate() const {
    if (params.size() != arity(kind))
        throw ValidationError(std::string(kind_name(kind)) + " expects " + std::to_string(arity(kind)) + " parameters");
    for (double p : params)
        if (!std::isfinite(p)) throw ValidationError("policy parameters must be finite");
    auto check_pair = [](double lower, double upper) {
        if (upper < lower) throw ValidationError("modified threshold requires S_hat >= S");
    };
    if (kind == FamilyKind::modified_threshold) check_pair(params[0], params[1]);
    if (kind == FamilyKind::dynamic_modified_threshold) {
        check_pair(params[0], params[1]);
        check_pair(params[2], params[3]);
    }
}

nlohmann::json PolicyFamily::to_json() const {
    nlohmann::json p = nlohmann::json::object();
    const auto names = param_names(kind);
    for (std::size_t i = 0; i < names.size() && i < params.size(); ++i) p[names[i]] = params[i];
    return {{"family", kind_name(kind)}, {"params", p}};
}

PolicyFamily PolicyFamily::from_json(const nlohmann::json& doc) {
    try {
        PolicyFamily f;
        f.kind = parse_kind(doc.at("family").get<std::string>());
        for (const auto& n : param_names(f.kind)) f.params.push_back(doc.at("params").at(n).get<double>());
        f.validate();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad policy JSON: ") + e.what());
    }
}

namespace {

class FamilyPolicy final : public sim::Policy {
public:
    FamilyPolicy(PolicyFamily family, StagePhase phase, double u_max)
        : family_(std::move(family)), phase_(std::move(phase)), u_max_(u_max) {}

    sim::Action act(int t, double x, double y) const override {
        const auto& p = family_.params;
        const bool on = phase_.at(t) == Phase::on;
        double u = 0.0;
        switch (family_.kind) {
            case FamilyKind::static_threshold: u = x - p[0]; break;
            case FamilyKind::dynamic_threshold: u = x - (on ? p[0] : p[1]); break;
            case FamilyKind::modified_threshold:
                u = closed_form::modified_threshold_action({p[0], p[1]}, x, y);
                break;
            case FamilyKind::dynamic_modified_threshold:
                u = on ? closed_form::modified_threshold_action({p[0], p[1]}, x, y)
                       : closed_form::modified_threshold_action({p[2], p[3]}, x, y);
                break;
        }
        return {std::clamp(u, 0.0, u_max_), false};
    }

    std::string name() const override { return kind_name(family_.kind); }

private:
    PolicyFamily family_;
    StagePhase phase_;
    double u_max_;
};

// Stream keys kept apart from the heat stream of the same seed.
constexpr std::uint64_t kParamStream = 0x70617261ULL;
constexpr std::uint64_t kRefineStream = 0x72656669ULL;

PolicyFamily sample_family(FamilyKind kind, const SearchBox& box, std::uint64_t seed, int index) {
    auto uniform = [&](int dim) {
        return sim::keyed_uniform(seed ^ kParamStream, static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(dim));
    };
    auto threshold = [&](int dim) { return box.x_lo + (box.x_hi - box.x_lo) * uniform(dim); };
    auto upper = [&](double lower, int dim) {
        return lower + std::max(0.0, std::min(box.gap_max, box.x_hi - lower)) * uniform(dim);
    };
    PolicyFamily f;
    f.kind = kind;
    switch (kind) {
        case FamilyKind::static_threshold: f.params = {threshold(0)}; break;
        case FamilyKind::dynamic_threshold: f.params = {threshold(0), threshold(1)}; break;
        case FamilyKind::modified_threshold: {
            const double s = threshold(0);
            f.params = {s, upper(s, 1)};
            break;
        }
        case FamilyKind::dynamic_modified_threshold: {
            const double s_on = threshold(0);
            const double s_off = threshold(2);
            f.params = {s_on, upper(s_on, 1), s_off, upper(s_off, 3)};
            break;
        }
    }
    return f;
}

}  // namespace

std::unique_ptr<sim::Policy> make_policy(const PolicyFamily& family, const StagePhase& phase, double u_max) {
    family.validate();
    if (!(u_max >= 0.0)) throw ValidationError("u_max must be non-negative");
    return std::make_unique<FamilyPolicy>(family, phase, u_max);
}

TuneResult tune(const ProblemSpec& spec, FamilyKind kind, const StagePhase& phase, const TuneOptions& options) {
    if (options.budget < 1) throw ValidationError("tune budget must be at least 1");
    if (options.n_eval < 1 || options.refine_factor < 1) throw ValidationError("evaluation sizes must be positive");
    if (static_cast<int>(phase.labels.size()) != spec.horizon()) throw ValidationError("phase calendar length must equal T");
    if (options.box.x_hi < options.box.x_lo || options.box.gap_max < 0.0) throw ValidationError("empty search box");

    const sim::SimOptions sim_opts{options.u_max, options.threads};
    const auto screen_draws = sim::HeatDraws::generate(spec, options.n_eval, options.seed);

    TuneResult out;
    for (int c = 0; c < options.budget; ++c) {
        Candidate cand;
        cand.index = c;
        cand.family = sample_family(kind, options.box, options.seed, c);
        const auto policy = make_policy(cand.family, phase, options.u_max);
        cand.screen = sim::evaluate(spec, *policy, screen_draws, sim_opts).result;
        out.trace.push_back(std::move(cand));
    }

    std::vector<std::size_t> order(out.trace.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.trace[a].screen.mean < out.trace[b].screen.mean; });
    const auto top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(1, options.refine_top)));

    const auto refine_draws =
        sim::HeatDraws::generate(spec, options.n_eval * options.refine_factor, options.seed ^ kRefineStream);
    std::size_t winner = order.front();
    for (std::size_t r = 0; r < top; ++r) {
        auto& cand = out.trace[order[r]];
        const auto policy = make_policy(cand.family, phase, options.u_max);
        cand.refined = sim::evaluate(spec, *policy, refine_draws, sim_opts).result;
        const auto& best = *out.trace[winner].refined;
        if (cand.refined->mean < best.mean || (cand.refined->mean == best.mean && order[r] < winner)) winner = order[r];
    }
    out.best = out.trace[winner].family;
    out.result = *out.trace[winner].refined;
    return out;
}

void write_trace_csv(const TuneResult& result, std::ostream& out) {
    const auto names = PolicyFamily::param_names(result.best.kind);
    out << "candidate";
    for (const auto& n : names) out << ',' << n;
    out << ",mean,se,refined_mean,refined_se\n";
    for (const auto& c : result.trace) {
        out << c.index;
        for (double p : c.family.params) out << ',' << format_double(p);
        out << ',' << format_double(c.screen.mean) << ',' << format_double(c.screen.se) << ',';
        if (c.refined) out << format_double(c.refined->mean) << ',' << format_double(c.refined->se);
        else out << ',';
        out << '\n';
    }
}

nlohmann::json best_policy_json(const TuneResult& result) {
    auto doc = result.best.to_json();
    doc["mean"] = result.result.mean;
    doc["se"] = result.result.se;
    doc["n"] = result.result.n;
    doc["seed"] = result.result.seed;
    return doc;
}

}  // namespace peakdp::tuner
