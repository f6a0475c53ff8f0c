#pragma once

// Power, latency and energy accounting. Hardware rows come from bundled
// reference measurements; simulated rows come from an activity proxy whose
// coefficients are calibrated once on the original MNIST network.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnport/simulator.hpp"

namespace snnport::energy {

/// mW * ms / 1000.
double energy_mj(double power_mw, double latency_ms);

struct LatencyModel {
    double slope = 0.0;      // ms of latency per ms of duration
    double intercept = 0.0;  // ms
    double residual_rms = 0.0;
};

/// Ordinary least squares over (duration ms, latency ms) points.
LatencyModel fit_latency(const std::vector<std::pair<double, double>>& points);
double predict_latency(const LatencyModel& m, double duration_ms);

struct PowerModel {
    double neuro_static_mw = 0.0;
    double x86_static_mw = 0.0;
    double x86_dynamic_mw = 0.0;
    double energy_per_sop_nj = 0.0;
    double energy_per_update_nj = 0.0;
    LatencyModel latency;
    std::string note;

    void validate() const;
};

nlohmann::json to_json(const PowerModel& m);
PowerModel power_model_from_json(const nlohmann::json& j);
PowerModel load_power_model(const std::string& path);
void save_power_model(const PowerModel& m, const std::string& path);

struct PowerBreakdown {
    double x86_static = 0.0;
    double x86_dynamic = 0.0;
    double neuro_static = 0.0;
    double neuro_dynamic = 0.0;

    double x86_total() const { return x86_static + x86_dynamic; }
    double neuro_total() const { return neuro_static + neuro_dynamic; }
    double total() const { return x86_total() + neuro_total(); }
};

/// Neuro dynamic power = (sops * E_sop + updates * E_upd) / wallclock.
PowerBreakdown proxy_power(double sops, double neuron_updates, const PowerModel& m, double wallclock_ms);
PowerBreakdown proxy_power(const sim::SimulationTrace& trace, const PowerModel& m, double wallclock_ms);

/// Targets used when calibrating the proxy on the original MNIST network.
struct CalibrationTargets {
    double neuro_dynamic_mw = 22.15;
    double neuro_static_mw = 21.52;
    double x86_static_mw = 0.136;
    double x86_dynamic_mw = 19.75;
    double update_to_sop_ratio = 0.1;  // E_upd / E_sop
    double latency_at_max_ms = 10.10;      // before duration optimization
    double latency_at_optimized_ms = 6.13;  // after
};

/// Chooses E_sop so the reference run's neuro dynamic power hits the target,
/// and anchors the latency line on (max_duration, optimized_duration).
PowerModel calibrate(double mean_sops, double mean_updates, double duration_ms, std::size_t max_duration,
                     std::size_t optimized_duration, const CalibrationTargets& targets = {});

struct EnergyRow {
    std::string hardware;
    std::string dataset;
    std::string variant;  // "original" or "edge"
    double accuracy_pct = 0.0;
    double power_mw = 0.0;  // total power under load
    double latency_ms = 0.0;
    double energy_mj = 0.0;
    bool has_breakdown = false;
    PowerBreakdown breakdown;
    std::string source;  // "reference" or "proxy"

    std::string label() const;  // e.g. "Edge-MNIST"
};

EnergyRow proxy_row(const std::string& dataset, const std::string& variant, double accuracy_pct,
                    const PowerBreakdown& power, double latency_ms);

struct ReferenceTables {
    std::vector<EnergyRow> before_optimization;  // power/latency at maximum accuracy
    std::vector<EnergyRow> optimized;            // accuracy/power/latency/energy after optimization
};

ReferenceTables reference_from_json(const nlohmann::json& j);
ReferenceTables load_reference(const std::string& path);

struct Ratio {
    std::string dataset;
    std::string variant;
    std::string hardware;
    double power_ratio = 0.0;   // baseline / row
    double energy_ratio = 0.0;  // baseline / row
};

/// Ratios of the baseline hardware's rows to every other row of the same
/// dataset and variant. Throws "baseline missing" when a row has no match.
std::vector<Ratio> compare_report(const std::vector<EnergyRow>& rows, const std::string& baseline = "NCS2");

std::string format_rows(const std::vector<EnergyRow>& rows);
std::string format_ratios(const std::vector<Ratio>& ratios);
nlohmann::json to_json(const EnergyRow& row);
nlohmann::json to_json(const std::vector<Ratio>& ratios);

}  // namespace snnport::energy
