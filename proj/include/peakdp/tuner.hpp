#pragma once

// Parametric threshold families and a random search over their parameters.
// All candidates of one search are scored on the same heat draws.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peakdp/model.hpp"
#include "peakdp/sim.hpp"

namespace peakdp::tuner {

enum class FamilyKind { static_threshold, dynamic_threshold, modified_threshold, dynamic_modified_threshold };

const char* kind_name(FamilyKind kind);
/// Accepts the names above and the short forms static, dynamic, modified, dynamic_modified.
FamilyKind parse_kind(const std::string& name);
inline constexpr FamilyKind kAllKinds[] = {FamilyKind::static_threshold, FamilyKind::dynamic_threshold,
                                           FamilyKind::modified_threshold, FamilyKind::dynamic_modified_threshold};

/**
Parameter layout by kind:
  static_threshold            [s]
  dynamic_threshold           [s_on, s_off]
  modified_threshold          [S, S_hat]
  dynamic_modified_threshold  [S_on, S_hat_on, S_off, S_hat_off]
*/
struct PolicyFamily {
    FamilyKind kind = FamilyKind::static_threshold;
    std::vector<double> params;

    static std::size_t arity(FamilyKind kind);
    static std::vector<std::string> param_names(FamilyKind kind);

    /// Throws ValidationError on wrong arity or S_hat < S.
    void validate() const;
    nlohmann::json to_json() const;
    static PolicyFamily from_json(const nlohmann::json& doc);
};

/// Feedback policy of the family; loads are clipped to [0, u_max].
std::unique_ptr<sim::Policy> make_policy(const PolicyFamily& family, const StagePhase& phase, double u_max);

/// Thresholds are drawn from [x_lo, x_hi]; S_hat - S from [0, min(gap_max, x_hi - S)].
struct SearchBox {
    double x_lo = 0.0;
    double x_hi = 0.0;
    double gap_max = 0.0;

    static SearchBox from_grids(const Grids& grids) { return {grids.x_min(), grids.x_max(), grids.u_max()}; }
};

struct TuneOptions {
    SearchBox box;
    double u_max = 0.0;
    int budget = 2000;
    std::int64_t n_eval = 500;
    int refine_top = 5;
    int refine_factor = 4;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct Candidate {
    int index = 0;
    PolicyFamily family;
    sim::SimResult screen;
    std::optional<sim::SimResult> refined;
};

struct TuneResult {
    PolicyFamily best;
    sim::SimResult result;  ///< refined estimate of the winner
    std::vector<Candidate> trace;
};

/// Random search: `budget` uniform candidates on n_eval rollouts, then the best refine_top re-scored on refine_factor * n_eval fresh rollouts.
TuneResult tune(const ProblemSpec& spec, FamilyKind kind, const StagePhase& phase, const TuneOptions& options);

void write_trace_csv(const TuneResult& result, std::ostream& out);
nlohmann::json best_policy_json(const TuneResult& result);

}  // namespace peakdp::tuner
