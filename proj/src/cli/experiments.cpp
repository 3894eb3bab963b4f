#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "peakdp/cli.hpp"
#include "peakdp/format.hpp"
#include "peakdp/structure.hpp"

namespace peakdp::cli {

// *******************************************************
// Heat samples
// *******************************************************

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const auto* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

std::vector<HeatSample> read_heat_csv(std::istream& in) {
    std::vector<HeatSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError("heat CSV line " + std::to_string(lineno) + ": expected 'phase,heat_value'");
        const auto phase = trim(line.substr(0, comma));
        const auto value = trim(line.substr(comma + 1));
        double v = 0.0;
        if (!parse_double(value, v)) {
            if (out.empty() && lineno == 1) continue;  // header
            throw ValidationError("heat CSV line " + std::to_string(lineno) + ": bad heat value '" + value + "'");
        }
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("heat CSV line " + std::to_string(lineno) + ": heat values must be non-negative");
        if (phase == "on")
            out.push_back({Phase::on, v});
        else if (phase == "off")
            out.push_back({Phase::off, v});
        else
            throw ValidationError("heat CSV line " + std::to_string(lineno) + ": phase must be 'on' or 'off'");
    }
    return out;
}

std::vector<HeatSample> load_heat_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open heat CSV " + path.string());
    return read_heat_csv(in);
}

HeatDistribution quantize_phase(std::span<const double> values, double dx, int n_bins) {
    if (n_bins < 1) throw ValidationError("n_bins must be at least 1");
    if (!(dx > 0.0)) throw ValidationError("dx must be positive");
    if (values.empty()) throw ValidationError("no heat samples to quantize");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn;
    const double width = (*mx - lo) / n_bins;

    std::vector<double> sums(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_bins), 0);
    for (double v : values) {
        int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
        b = std::clamp(b, 0, n_bins - 1);
        sums[static_cast<std::size_t>(b)] += v;
        ++counts[static_cast<std::size_t>(b)];
    }
    std::map<std::int64_t, std::int64_t> snapped;
    for (int b = 0; b < n_bins; ++b) {
        const auto n = counts[static_cast<std::size_t>(b)];
        if (n == 0) continue;
        const double centre = sums[static_cast<std::size_t>(b)] / static_cast<double>(n);
        snapped[std::max<std::int64_t>(0, std::llround(centre / dx))] += n;
    }
    std::vector<HeatOutcome> support;
    const auto total = static_cast<double>(values.size());
    for (auto [steps, n] : snapped) support.push_back({static_cast<double>(steps) * dx, static_cast<double>(n) / total});
    return HeatDistribution(std::move(support));
}

QuantizedHeat quantize_samples(std::span<const HeatSample> samples, double dx, int n_bins) {
    std::vector<double> on, off;
    for (const auto& s : samples) (s.phase == Phase::on ? on : off).push_back(s.value);
    if (on.empty()) throw ValidationError("heat samples contain no on-peak rows");
    if (off.empty()) throw ValidationError("heat samples contain no off-peak rows");
    return {quantize_phase(on, dx, n_bins), quantize_phase(off, dx, n_bins)};
}

// *******************************************************
// Instances
// *******************************************************

HeatDistribution bundled_off_peak() { return HeatDistribution({{0.5, 0.25}, {1.0, 0.5}, {1.5, 0.25}}); }
HeatDistribution bundled_on_peak() { return HeatDistribution({{1.5, 0.3}, {2.0, 0.5}, {3.0, 0.2}}); }

Instance synthetic_instance(const SyntheticParams& params, const HeatDistribution& on, const HeatDistribution& off,
                            const GridSpec& grid) {
    const auto phase = StagePhase::alternating(params.horizon, Phase::off);
    std::vector<HeatDistribution> heat;
    for (int t = 1; t <= params.horizon; ++t) heat.push_back(phase.at(t) == Phase::on ? on : off);
    const auto T = static_cast<std::size_t>(params.horizon);
    ProblemSpec spec(params.horizon, std::move(heat), std::vector<PenaltyParams>(T, PenaltyParams::quadratic(params.b, params.d)),
                     OrderingParams{params.setup_cost, std::vector<double>(T, params.unit_cost)}, params.peak_price,
                     params.x_init, params.y_init);
    return Instance{std::move(spec), grid, phase};
}

Instance with_horizon(const Instance& instance, int horizon) {
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    const auto& s = instance.spec;
    std::vector<HeatDistribution> heat;
    std::vector<PenaltyParams> penalty;
    std::vector<double> unit;
    for (int t = 1; t <= horizon; ++t) {
        const int src = std::min(t, s.horizon());
        heat.push_back(s.heat(src));
        penalty.push_back(s.penalty(src));
        unit.push_back(s.unit_cost(src));
    }
    Instance out{ProblemSpec(horizon, std::move(heat), std::move(penalty), OrderingParams{s.setup_cost(), std::move(unit)},
                             s.peak_price(), s.x_init(), s.y_init()),
                 instance.grid, std::nullopt};
    if (instance.phase) {
        StagePhase p;
        for (int t = 1; t <= horizon; ++t) {
            // Extension continues the two-stage pattern of the original calendar.
            int src = t;
            while (src > s.horizon()) src -= 2;
            if (src < 1) src = s.horizon();
            p.labels.push_back(instance.phase->at(src));
        }
        out.phase = std::move(p);
    }
    return out;
}

// *******************************************************
// Structural report
// *******************************************************

nlohmann::json analyze_solution(const ProblemSpec& spec, const Grids& grids, const Solution& solution, bool& failed) {
    failed = false;
    nlohmann::json doc;
    doc["clean"] = solution.boundary.clean();
    doc["clamped_reachable"] = solution.boundary.clamped_reachable;
    doc["clamped_total"] = solution.boundary.clamped_total;

    const auto mono = structure::check_monotone_in_y(solution.values);
    doc["monotone_in_y"] = mono.to_json();
    failed = failed || !mono.passed;

    const auto conv = structure::check_discrete_convexity(spec, solution.values);
    doc["discrete_convexity"] = conv.to_json();
    failed = failed || (conv.applicable && !conv.passed);

    const bool free_peaks = spec.peak_price() == 0.0;
    const bool no_setup = spec.setup_cost() == 0.0;
    nlohmann::json stages = nlohmann::json::array();
    for (int t = 1; t <= spec.horizon(); ++t) {
        nlohmann::json entry{{"t", t}};
        const auto range = solution.policy.exact_range(t);
        if (range.empty()) {
            entry["skipped"] = "no boundary-free states";
            stages.push_back(entry);
            continue;
        }
        entry["exact_x"] = {grids.x(range.lo), grids.x(range.hi)};
        if (free_peaks) {
            const auto fit = structure::fit_threshold(solution.policy, t);
            entry["threshold_fit"] = fit.to_json();
            entry["threshold_fit"]["within_one_cell"] = fit.within(grids.step());
            if (!fit.refused) entry["threshold_fit"]["s_equals_S"] = std::abs(fit.s - fit.S) <= grids.step() + 1e-12;
            failed = failed || !fit.within(grids.step());
        } else if (no_setup) {
            const auto g = structure::extract_g_curve(spec, grids, solution.values, t);
            const auto rep = structure::verify_three_regime(solution.policy, g, t);
            entry["g_curve"] = {{"y", nlohmann::json::array()}, {"g", nlohmann::json::array()},
                                {"reliable", nlohmann::json::array()}};
            for (int j = 0; j < grids.ny(); ++j) {
                entry["g_curve"]["y"].push_back(grids.y(j));
                const auto jj = static_cast<std::size_t>(j);
                entry["g_curve"]["g"].push_back(std::isfinite(g.g[jj]) ? nlohmann::json(g.g[jj]) : nlohmann::json());
                entry["g_curve"]["reliable"].push_back(static_cast<bool>(g.reliable[jj]));
            }
            entry["three_regime"] = rep.to_json();
            failed = failed || !rep.check.passed;
        } else {
            entry["skipped"] = "no structural result for K > 0 with P > 0";
        }
        stages.push_back(entry);
    }
    doc["stages"] = std::move(stages);
    doc["failed"] = failed;
    return doc;
}

// *******************************************************
// Case study
// *******************************************************

namespace {

constexpr std::uint64_t kCompareStream = 0x636f6d70ULL;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

}  // namespace

ReproduceReport reproduce_paper(const ReproduceConfig& config) {
    HeatDistribution on = bundled_on_peak();
    HeatDistribution off = bundled_off_peak();
    if (config.heat_csv) {
        const auto samples = load_heat_csv(*config.heat_csv);
        auto q = quantize_samples(samples, config.grid.dx, config.n_bins);
        on = std::move(q.on);
        off = std::move(q.off);
    }
    const auto inst = synthetic_instance(config.params, on, off, config.grid);
    const auto& spec = inst.spec;
    const auto grids = config.grid.build();
    grids.check_alignment(spec);

    ReproduceReport rep;
    rep.instance = instance_to_json(inst);

    tuner::TuneOptions opts;
    opts.box = tuner::SearchBox::from_grids(grids);
    opts.u_max = grids.u_max();
    opts.budget = config.budget;
    opts.n_eval = config.n_eval;
    opts.seed = config.seed;
    opts.threads = config.threads;
    for (auto kind : tuner::kAllKinds) rep.tuned.push_back(tuner::tune(spec, kind, *inst.phase, opts));

    std::vector<std::unique_ptr<sim::Policy>> owned;
    std::vector<const sim::Policy*> policies;
    for (const auto& t : rep.tuned) {
        owned.push_back(tuner::make_policy(t.best, *inst.phase, grids.u_max()));
        policies.push_back(owned.back().get());
    }
    const sim::SimOptions sim_opts{grids.u_max(), config.threads};
    const std::uint64_t compare_seed = config.seed ^ kCompareStream;
    const auto cmp = sim::compare_policies(spec, policies, config.compare_rollouts, compare_seed, sim_opts);
    rep.table = cmp.results;
    rep.differences = cmp.differences;

    // differences hold every pair i < j as mean(i) - mean(j).
    auto pair = [&](std::size_t i, std::size_t j) -> const sim::PairedDifference& {
        std::size_t k = 0;
        for (std::size_t a = 0; a < policies.size(); ++a)
            for (std::size_t b = a + 1; b < policies.size(); ++b, ++k)
                if (a == i && b == j) return rep.differences[k];
        throw std::logic_error("missing policy pair");
    };
    auto gap = [&](std::size_t better, std::size_t worse) {
        const auto& d = pair(std::min(better, worse), std::max(better, worse));
        OrderingGap g;
        g.better = rep.table[better].policy;
        g.worse = rep.table[worse].policy;
        g.difference = better < worse ? -d.mean : d.mean;
        g.paired_se = d.paired_se;
        g.holds = g.difference > 2.0 * g.paired_se;
        return g;
    };
    constexpr std::size_t kStatic = 0, kDynamic = 1, kModified = 2, kDynMod = 3;
    rep.gaps = {gap(kDynMod, kDynamic), gap(kDynMod, kModified), gap(kDynamic, kStatic), gap(kModified, kStatic)};
    rep.ordering_holds = std::all_of(rep.gaps.begin(), rep.gaps.end(), [](const OrderingGap& g) { return g.holds; });

    const GridSpec wide{-config.dp_x_range, config.dp_x_range, config.grid.dx, config.grid.u_max};
    const auto wide_grids = wide.build();
    {
        const auto small = with_horizon(inst, config.structure_horizon);
        const auto sol = solve(small.spec, wide_grids);
        bool failed = false;
        rep.structure = analyze_solution(small.spec, wide_grids, sol, failed);
        rep.structure["horizon"] = config.structure_horizon;
        rep.structure["grid"] = {{"x_min", wide.x_min}, {"x_max", wide.x_max}, {"dx", wide.dx}, {"u_max", wide.u_max}};
    }
    {
        const auto sol = solve(spec, wide_grids);
        const sim::TabularPolicy dp_policy(sol.policy, "dp");
        const auto est = sim::estimate_cost(spec, dp_policy, config.compare_rollouts, compare_seed, sim_opts);
        rep.dp_reference = {{"V1", sol.initial_value(spec)},
                            {"clean", sol.boundary.clean()},
                            {"clamped_reachable", sol.boundary.clamped_reachable},
                            {"simulated_mean", est.mean},
                            {"simulated_se", est.se},
                            {"N", est.n},
                            {"seed", est.seed},
                            {"grid", {{"x_min", wide.x_min}, {"x_max", wide.x_max}, {"dx", wide.dx}, {"u_max", wide.u_max}}}};
    }
    return rep;
}

void write_reproduce_outputs(const ReproduceReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ostringstream os;
        sim::write_results_csv(report.table, os);
        write_text(out_dir / "table.csv", os.str());
    }
    {
        std::ostringstream os;
        sim::write_differences_csv(report.differences, os);
        write_text(out_dir / "paired_differences.csv", os.str());
    }
    for (const auto& t : report.tuned) {
        const std::string name = tuner::kind_name(t.best.kind);
        std::ostringstream os;
        tuner::write_trace_csv(t, os);
        write_text(out_dir / ("trace_" + name + ".csv"), os.str());
        write_text(out_dir / ("best_" + name + ".json"), tuner::best_policy_json(t).dump(2) + "\n");
    }
    write_text(out_dir / "structure.json", report.structure.dump(2) + "\n");
    write_text(out_dir / "dp_reference.json", report.dp_reference.dump(2) + "\n");

    nlohmann::json summary;
    summary["ordering_holds"] = report.ordering_holds;
    summary["gaps"] = nlohmann::json::array();
    for (const auto& g : report.gaps)
        summary["gaps"].push_back({{"better", g.better},
                                   {"worse", g.worse},
                                   {"difference", g.difference},
                                   {"paired_se", g.paired_se},
                                   {"holds", g.holds}});
    summary["instance"] = report.instance;
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace peakdp::cli
