#pragma once

// Command-line front end and the experiment drivers behind it.
//
//   peakdp solve           --spec FILE --out DIR
//   peakdp oracle-check    --spec FILE [--y-init Y]...
//   peakdp analyze         --spec FILE --out DIR
//   peakdp simulate        --spec FILE --policy dp|zero|POLICY.json --rollouts N --seed S
//   peakdp tune            --spec FILE --family NAME --budget B --rollouts N --seed S
//   peakdp reproduce-paper [--heat-csv FILE] --out DIR
//
// Exit codes: 0 success, 1 invalid input, 2 a check failed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "peakdp/dp.hpp"
#include "peakdp/instance_io.hpp"
#include "peakdp/model.hpp"
#include "peakdp/sim.hpp"
#include "peakdp/tuner.hpp"

namespace peakdp::cli {

/// A verification step ran to completion and found a violation (exit code 2).
class CheckFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// *******************************************************
// Empirical heat samples
// *******************************************************

struct HeatSample {
    Phase phase = Phase::off;
    double value = 0.0;
};

/// Rows "phase,heat_value" with phase on|off; a header row is skipped.
std::vector<HeatSample> read_heat_csv(std::istream& in);
std::vector<HeatSample> load_heat_csv(const std::filesystem::path& path);

/**
Histogram of one phase's samples with n_bins equal-width bins. Each non-empty
bin becomes an outcome at its sample mean snapped to the nearest non-negative
multiple of dx, weighted by its frequency; outcomes that snap together merge.
*/
HeatDistribution quantize_phase(std::span<const double> values, double dx, int n_bins);

struct QuantizedHeat {
    HeatDistribution on;
    HeatDistribution off;
};

/// Throws ValidationError if either phase has no samples.
QuantizedHeat quantize_samples(std::span<const HeatSample> samples, double dx, int n_bins);

// *******************************************************
// Synthetic case study
// *******************************************************

HeatDistribution bundled_off_peak();
HeatDistribution bundled_on_peak();

struct SyntheticParams {
    int horizon = 60;
    double b = 20.0;
    double d = 1.0;
    double peak_price = 30.0;
    double setup_cost = 0.0;
    double unit_cost = 1.0;
    double x_init = 0.0;
    double y_init = 0.0;
};

/// Quadratic penalty, alternating calendar starting off-peak.
Instance synthetic_instance(const SyntheticParams& params, const HeatDistribution& on, const HeatDistribution& off,
                            const GridSpec& grid);

/// Truncates the instance or extends it by repeating its final stage; the calendar keeps alternating.
Instance with_horizon(const Instance& instance, int horizon);

/**
Structural report for a solved instance: monotonicity, convexity when K = 0,
then per stage either threshold fits (P = 0) or the g-curve regime check
(K = 0, P > 0). `failed` is set when any applicable check fails.
*/
nlohmann::json analyze_solution(const ProblemSpec& spec, const Grids& grids, const Solution& solution, bool& failed);

struct ReproduceConfig {
    SyntheticParams params;
    GridSpec grid{-4.0, 4.0, 0.5, 4.0};
    std::optional<std::filesystem::path> heat_csv;
    int n_bins = 8;
    int budget = 2000;
    std::int64_t n_eval = 500;
    std::int64_t compare_rollouts = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    int structure_horizon = 6;     ///< horizon of the down-scaled structural variant
    double dp_x_range = 30.0;      ///< half-width of the temperature grid for the solver runs
};

struct OrderingGap {
    std::string better;
    std::string worse;
    double difference = 0.0;  ///< mean(worse) - mean(better)
    double paired_se = 0.0;
    bool holds = false;       ///< difference > 2 paired_se
};

struct ReproduceReport {
    std::vector<tuner::TuneResult> tuned;        ///< static, dynamic, modified, dynamic_modified
    std::vector<sim::SimResult> table;           ///< final comparison on fresh draws, same order
    std::vector<sim::PairedDifference> differences;
    std::vector<OrderingGap> gaps;
    bool ordering_holds = false;
    nlohmann::json structure;
    nlohmann::json dp_reference;
    nlohmann::json instance;
};

ReproduceReport reproduce_paper(const ReproduceConfig& config);

/// table.csv, paired_differences.csv, trace_*.csv, best_*.json, structure.json, dp_reference.json, summary.json.
void write_reproduce_outputs(const ReproduceReport& report, const std::filesystem::path& out_dir);

/// Parses arguments and runs one command; returns the process exit code.
int run(int argc, char** argv);

}  // namespace peakdp::cli
