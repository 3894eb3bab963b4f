#include "peakdp/instance_io.hpp"

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace peakdp {

namespace {

const json& require(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ValidationError(std::string("instance is missing \"") + key + "\"");
    return *it;
}

double number(const json& v, const char* key) {
    if (!v.is_number()) throw ValidationError(std::string("\"") + key + "\" must be a number");
    return v.get<double>();
}

std::vector<double> per_stage(const json& doc, const char* key, int horizon) {
    const json& v = require(doc, key);
    if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(horizon), v.get<double>());
    if (!v.is_array() || static_cast<int>(v.size()) != horizon)
        throw ValidationError(std::string("\"") + key + "\" must be a number or an array of length horizon");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(number(e, key));
    return out;
}

}  // namespace

Instance instance_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("instance must be a JSON object");
    const json& h = require(doc, "horizon");
    if (!h.is_number_integer()) throw ValidationError("\"horizon\" must be an integer");
    const int T = h.get<int>();
    if (T < 1) throw ValidationError("horizon must be at least 1");

    PenaltyForm form = PenaltyForm::quadratic;
    if (auto it = doc.find("penalty_form"); it != doc.end()) {
        const auto name = it->get<std::string>();
        if (name == "quadratic")
            form = PenaltyForm::quadratic;
        else if (name == "linear")
            form = PenaltyForm::linear;
        else
            throw ValidationError("unknown penalty_form \"" + name + "\"");
    }

    const auto a = per_stage(doc, "a", T);
    const auto b = per_stage(doc, "b", T);
    const auto d = per_stage(doc, "d", T);

    const json& support = require(doc, "heat_support");
    const json& prob = require(doc, "heat_prob");
    if (!support.is_array() || !prob.is_array() || static_cast<int>(support.size()) != T ||
        static_cast<int>(prob.size()) != T)
        throw ValidationError("heat_support and heat_prob must be arrays of length horizon");

    std::vector<HeatDistribution> heat;
    std::vector<PenaltyParams> penalty;
    for (int s = 0; s < T; ++s) {
        const auto& vs = support[static_cast<std::size_t>(s)];
        const auto& ps = prob[static_cast<std::size_t>(s)];
        if (!vs.is_array() || !ps.is_array() || vs.size() != ps.size())
            throw ValidationError("heat_support and heat_prob rows must have equal lengths");
        std::vector<HeatOutcome> outcomes;
        for (std::size_t i = 0; i < vs.size(); ++i)
            outcomes.push_back({number(vs[i], "heat_support"), number(ps[i], "heat_prob")});
        heat.emplace_back(std::move(outcomes));
        penalty.push_back({form, b[static_cast<std::size_t>(s)], d[static_cast<std::size_t>(s)]});
    }

    OrderingParams ordering{number(doc.value("setup_cost", json(0.0)), "setup_cost"), a};
    ProblemSpec spec(T, std::move(heat), std::move(penalty), std::move(ordering),
                     number(require(doc, "peak_price"), "peak_price"), number(doc.value("x_init", json(0.0)), "x_init"),
                     number(doc.value("y_init", json(0.0)), "y_init"));

    Instance out{std::move(spec), std::nullopt, std::nullopt};

    if (auto it = doc.find("grid"); it != doc.end()) {
        GridSpec g;
        g.x_min = number(require(*it, "x_min"), "grid.x_min");
        g.x_max = number(require(*it, "x_max"), "grid.x_max");
        g.dx = number(require(*it, "dx"), "grid.dx");
        g.u_max = number(require(*it, "u_max"), "grid.u_max");
        out.grid = g;
    }
    if (auto it = doc.find("phase"); it != doc.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != T)
            throw ValidationError("\"phase\" must be an array of length horizon");
        StagePhase phase;
        for (const auto& label : *it) {
            const auto name = label.get<std::string>();
            if (name == "on")
                phase.labels.push_back(Phase::on);
            else if (name == "off")
                phase.labels.push_back(Phase::off);
            else
                throw ValidationError("phase labels must be \"on\" or \"off\"");
        }
        out.phase = std::move(phase);
    }
    return out;
}

json instance_to_json(const Instance& instance) {
    const auto& spec = instance.spec;
    const int T = spec.horizon();
    json doc;
    doc["horizon"] = T;
    doc["peak_price"] = spec.peak_price();
    doc["setup_cost"] = spec.setup_cost();
    doc["penalty_form"] = spec.penalty(1).form == PenaltyForm::linear ? "linear" : "quadratic";
    json a = json::array(), b = json::array(), d = json::array(), support = json::array(), prob = json::array();
    for (int t = 1; t <= T; ++t) {
        if (spec.penalty(t).form != spec.penalty(1).form)
            throw ValidationError("instance files require one penalty form for all stages");
        a.push_back(spec.unit_cost(t));
        b.push_back(spec.penalty(t).above);
        d.push_back(spec.penalty(t).below);
        json vs = json::array(), ps = json::array();
        for (const auto& o : spec.heat(t).support()) {
            vs.push_back(o.value);
            ps.push_back(o.prob);
        }
        support.push_back(std::move(vs));
        prob.push_back(std::move(ps));
    }
    doc["a"] = std::move(a);
    doc["b"] = std::move(b);
    doc["d"] = std::move(d);
    doc["heat_support"] = std::move(support);
    doc["heat_prob"] = std::move(prob);
    doc["x_init"] = spec.x_init();
    doc["y_init"] = spec.y_init();
    if (instance.phase) {
        json labels = json::array();
        for (auto p : instance.phase->labels) labels.push_back(p == Phase::on ? "on" : "off");
        doc["phase"] = std::move(labels);
    }
    if (instance.grid) {
        const auto& g = *instance.grid;
        doc["grid"] = {{"x_min", g.x_min}, {"x_max", g.x_max}, {"dx", g.dx}, {"u_max", g.u_max}};
    }
    return doc;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
    try {
        return instance_from_json(doc);
    } catch (const json::type_error& e) {
        throw ValidationError("bad field type in " + path.string() + ": " + e.what());
    }
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << instance_to_json(instance).dump(2) << '\n';
}

}  // namespace peakdp
