#include "snnport/energy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace snnport::energy {

using nlohmann::json;

double energy_mj(double power_mw, double latency_ms)
{
    if (!(power_mw >= 0.0) || !(latency_ms >= 0.0)) {
        throw Error("power and latency must be non-negative");
    }
    return power_mw * latency_ms / 1000.0;
}

LatencyModel fit_latency(const std::vector<std::pair<double, double>>& points)
{
    if (points.size() < 2) {
        throw Error("latency fit needs at least two points");
    }
    const double n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) {
        throw Error("latency fit needs at least two distinct durations");
    }
    LatencyModel m;
    m.slope = sxy / sxx;
    m.intercept = my - m.slope * mx;
    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double r = y - (m.slope * x + m.intercept);
        ss += r * r;
    }
    m.residual_rms = std::sqrt(ss / n);
    return m;
}

double predict_latency(const LatencyModel& m, double duration_ms) { return m.slope * duration_ms + m.intercept; }

void PowerModel::validate() const
{
    for (double v : {neuro_static_mw, x86_static_mw, x86_dynamic_mw, energy_per_sop_nj, energy_per_update_nj}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error("power model coefficients must be finite and non-negative");
        }
    }
    if (!std::isfinite(latency.slope) || !std::isfinite(latency.intercept)) {
        throw Error("latency model must be finite");
    }
}

json to_json(const PowerModel& m)
{
    return {{"neuro_static_mw", m.neuro_static_mw},
            {"x86_static_mw", m.x86_static_mw},
            {"x86_dynamic_mw", m.x86_dynamic_mw},
            {"energy_per_sop_nj", m.energy_per_sop_nj},
            {"energy_per_update_nj", m.energy_per_update_nj},
            {"latency", {{"slope", m.latency.slope},
                         {"intercept", m.latency.intercept},
                         {"residual_rms", m.latency.residual_rms}}},
            {"note", m.note}};
}

PowerModel power_model_from_json(const json& j)
{
    PowerModel m;
    try {
        m.neuro_static_mw = j.at("neuro_static_mw").get<double>();
        m.x86_static_mw = j.at("x86_static_mw").get<double>();
        m.x86_dynamic_mw = j.at("x86_dynamic_mw").get<double>();
        m.energy_per_sop_nj = j.at("energy_per_sop_nj").get<double>();
        m.energy_per_update_nj = j.at("energy_per_update_nj").get<double>();
        if (j.contains("latency")) {
            const auto& l = j["latency"];
            m.latency.slope = l.at("slope").get<double>();
            m.latency.intercept = l.at("intercept").get<double>();
            m.latency.residual_rms = l.value("residual_rms", 0.0);
        }
        m.note = j.value("note", std::string{});
    } catch (const json::exception& e) {
        throw Error(std::string("malformed calibration file: ") + e.what());
    }
    m.validate();
    return m;
}

namespace {

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace

PowerModel load_power_model(const std::string& path) { return power_model_from_json(read_json(path)); }

void save_power_model(const PowerModel& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << to_json(m).dump(2) << "\n";
}

PowerBreakdown proxy_power(double sops, double neuron_updates, const PowerModel& m, double wallclock_ms)
{
    if (!(wallclock_ms > 0.0)) {
        throw Error("wallclock must be positive");
    }
    PowerBreakdown p;
    p.x86_static = m.x86_static_mw;
    p.x86_dynamic = m.x86_dynamic_mw;
    p.neuro_static = m.neuro_static_mw;
    // nJ / ms = uW
    p.neuro_dynamic = (sops * m.energy_per_sop_nj + neuron_updates * m.energy_per_update_nj) / wallclock_ms / 1000.0;
    return p;
}

PowerBreakdown proxy_power(const sim::SimulationTrace& trace, const PowerModel& m, double wallclock_ms)
{
    return proxy_power(static_cast<double>(trace.sops), static_cast<double>(trace.total_neuron_updates()), m,
                       wallclock_ms);
}

PowerModel calibrate(double mean_sops, double mean_updates, double duration_ms, std::size_t max_duration,
                     std::size_t optimized_duration, const CalibrationTargets& t)
{
    const double work = mean_sops + t.update_to_sop_ratio * mean_updates;
    if (!(work > 0.0) || !(duration_ms > 0.0)) {
        throw Error("calibration run has no activity");
    }
    PowerModel m;
    m.neuro_static_mw = t.neuro_static_mw;
    m.x86_static_mw = t.x86_static_mw;
    m.x86_dynamic_mw = t.x86_dynamic_mw;
    m.energy_per_sop_nj = t.neuro_dynamic_mw * 1000.0 * duration_ms / work;
    m.energy_per_update_nj = m.energy_per_sop_nj * t.update_to_sop_ratio;
    if (max_duration != optimized_duration) {
        m.latency = fit_latency({{static_cast<double>(max_duration), t.latency_at_max_ms},
                                 {static_cast<double>(optimized_duration), t.latency_at_optimized_ms}});
    } else {
        m.latency.slope = t.latency_at_optimized_ms / static_cast<double>(optimized_duration);
        m.latency.intercept = 0.0;
    }
    std::ostringstream note;
    note << "proxy calibrated on a " << duration_ms << " ms reference run: " << mean_sops << " SOPs, " << mean_updates
         << " neuron updates per image; latency anchored at " << max_duration << " ms -> " << t.latency_at_max_ms
         << " ms and " << optimized_duration << " ms -> " << t.latency_at_optimized_ms << " ms";
    m.note = note.str();
    return m;
}

std::string EnergyRow::label() const
{
    return variant == "edge" ? "Edge-" + dataset : dataset;
}

EnergyRow proxy_row(const std::string& dataset, const std::string& variant, double accuracy_pct,
                    const PowerBreakdown& power, double latency_ms)
{
    EnergyRow r;
    r.hardware = "Loihi-proxy";
    r.dataset = dataset;
    r.variant = variant;
    r.accuracy_pct = accuracy_pct;
    r.power_mw = power.total();
    r.latency_ms = latency_ms;
    r.energy_mj = energy_mj(r.power_mw, latency_ms);
    r.has_breakdown = true;
    r.breakdown = power;
    r.source = "proxy";
    return r;
}

namespace {

EnergyRow row_from_json(const json& j)
{
    EnergyRow r;
    r.hardware = j.at("hardware").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.variant = j.value("variant", std::string("original"));
    r.accuracy_pct = j.value("accuracy_pct", 0.0);
    r.power_mw = j.at("power_mw").get<double>();
    r.latency_ms = j.at("latency_ms").get<double>();
    r.energy_mj = j.contains("energy_mj") ? j["energy_mj"].get<double>() : energy_mj(r.power_mw, r.latency_ms);
    if (j.contains("breakdown")) {
        const auto& b = j["breakdown"];
        r.has_breakdown = true;
        r.breakdown.x86_static = b.at("x86_static_mw").get<double>();
        r.breakdown.x86_dynamic = b.at("x86_dynamic_mw").get<double>();
        r.breakdown.neuro_static = b.at("neuro_static_mw").get<double>();
        r.breakdown.neuro_dynamic = b.at("neuro_dynamic_mw").get<double>();
    }
    r.source = "reference";
    return r;
}

}  // namespace

ReferenceTables reference_from_json(const json& j)
{
    ReferenceTables t;
    try {
        for (const auto& r : j.at("before_optimization")) {
            t.before_optimization.push_back(row_from_json(r));
        }
        for (const auto& r : j.at("optimized")) {
            t.optimized.push_back(row_from_json(r));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed reference table: ") + e.what());
    }
    return t;
}

ReferenceTables load_reference(const std::string& path) { return reference_from_json(read_json(path)); }

std::vector<Ratio> compare_report(const std::vector<EnergyRow>& rows, const std::string& baseline)
{
    std::vector<Ratio> out;
    for (const auto& r : rows) {
        if (r.hardware == baseline) {
            continue;
        }
        const EnergyRow* base = nullptr;
        for (const auto& b : rows) {
            if (b.hardware == baseline && b.dataset == r.dataset && b.variant == r.variant) {
                base = &b;
                break;
            }
        }
        if (base == nullptr) {
            throw Error("baseline missing: no " + baseline + " row for " + r.label());
        }
        if (!(r.power_mw > 0.0) || !(r.energy_mj > 0.0)) {
            throw Error("row " + r.hardware + "/" + r.label() + " has zero power or energy");
        }
        out.push_back({r.dataset, r.variant, r.hardware, base->power_mw / r.power_mw, base->energy_mj / r.energy_mj});
    }
    if (rows.size() < 2 || out.empty()) {
        throw Error("comparison needs a baseline row and at least one other row");
    }
    return out;
}

std::string format_rows(const std::vector<EnergyRow>& rows)
{
    std::ostringstream out;
    char line[200];
    std::snprintf(line, sizeof line, "%-12s %-12s %10s %10s %10s %10s  %s\n", "Hardware", "Dataset", "Accuracy%",
                  "Power mW", "Latency ms", "Energy mJ", "source");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %-12s %10.2f %10.2f %10.2f %10.2f  %s\n", r.hardware.c_str(),
                      r.label().c_str(), r.accuracy_pct, r.power_mw, r.latency_ms, r.energy_mj, r.source.c_str());
        out << line;
    }
    return out.str();
}

std::string format_ratios(const std::vector<Ratio>& ratios)
{
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-12s %12s %12s\n", "Hardware", "Dataset", "power x", "energy x");
    out << line;
    for (const auto& r : ratios) {
        const std::string label = r.variant == "edge" ? "Edge-" + r.dataset : r.dataset;
        std::snprintf(line, sizeof line, "%-12s %-12s %12.2f %12.2f\n", r.hardware.c_str(), label.c_str(),
                      r.power_ratio, r.energy_ratio);
        out << line;
    }
    return out.str();
}

json to_json(const EnergyRow& r)
{
    json j = {{"hardware", r.hardware}, {"dataset", r.dataset},     {"variant", r.variant},
              {"accuracy_pct", r.accuracy_pct}, {"power_mw", r.power_mw}, {"latency_ms", r.latency_ms},
              {"energy_mj", r.energy_mj},       {"source", r.source}};
    if (r.has_breakdown) {
        j["breakdown"] = {{"x86_static_mw", r.breakdown.x86_static},
                          {"x86_dynamic_mw", r.breakdown.x86_dynamic},
                          {"x86_total_mw", r.breakdown.x86_total()},
                          {"neuro_static_mw", r.breakdown.neuro_static},
                          {"neuro_dynamic_mw", r.breakdown.neuro_dynamic},
                          {"neuro_total_mw", r.breakdown.neuro_total()}};
    }
    return j;
}

json to_json(const std::vector<Ratio>& ratios)
{
    json j = json::array();
    for (const auto& r : ratios) {
        j.push_back({{"dataset", r.dataset},
                     {"variant", r.variant},
                     {"hardware", r.hardware},
                     {"power_ratio", r.power_ratio},
                     {"energy_ratio", r.energy_ratio}});
    }
    return j;
}

}  // namespace snnport::energy
