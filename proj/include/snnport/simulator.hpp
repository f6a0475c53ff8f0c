#pragma once

// Timestep-driven integrate-and-fire simulation with rate-coded inputs.
//
// Each timestep (1 ms) the encoded input drives the first population and the
// resulting spikes propagate through every population in order within the
// same step. Spiking neurons integrate V += W*s + b, fire once when V >= theta,
// reset by subtraction, keep V strictly below theta and never below -theta.
// The output population integrates without reset and is read out by argmax.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "snnport/model_ir.hpp"
#include "snnport/spiking_network.hpp"

namespace snnport::sim {

enum class EncodingMode { StochasticRate, Analog };

std::string to_string(EncodingMode mode);
EncodingMode encoding_mode_from_string(const std::string& s);

struct EncodingConfig {
    EncodingMode mode = EncodingMode::StochasticRate;
    double max_rate = 1.0;  // spikes per timestep at intensity 1
    std::uint64_t seed = 0;
    bool record_neuron_counts = false;  // per-neuron spike totals in the trace
};

/// Uniform [0,1) variate for (stream, pixel, timestep); counter based so any
/// subset of pixels or timesteps draws the same values.
double input_uniform(std::uint64_t stream, std::uint64_t pixel, std::uint64_t timestep);

/// Per-image RNG stream.
inline std::uint64_t image_stream(std::uint64_t seed, std::uint64_t image_index) { return seed ^ image_index; }

/// Input spike train generator for one image.
class InputEncoder {
public:
    InputEncoder(const Tensor& image, const EncodingConfig& cfg, std::uint64_t image_index);

    /// Indices of pixels spiking at timestep t (stochastic mode only).
    void spikes_at(std::size_t t, std::vector<std::uint32_t>& out) const;
    std::span<const float> intensities() const { return intensities_; }

private:
    std::vector<float> intensities_;
    double max_rate_;
    std::uint64_t stream_;
};

struct SimulationTrace {
    std::size_t duration = 0;
    std::size_t class_count = 0;
    /// Output accumulator after each step, [duration][class_count].
    std::vector<float> output_snapshots;
    /// Spikes an IF neuron with the output's threshold would have emitted.
    std::vector<std::uint64_t> output_spike_counts;
    /// Spike totals; index 0 is the input layer, then one per population.
    std::vector<std::uint64_t> layer_spikes;
    /// Same, per step: [duration][populations + 1].
    std::vector<std::uint32_t> step_spikes;
    std::uint64_t sops = 0;
    /// Cumulative synaptic operations after each step.
    std::vector<std::uint64_t> cumulative_sops;
    /// Neuron updates per population (neurons x duration).
    std::vector<std::uint64_t> neuron_updates;
    /// Optional per-neuron spike totals; index 0 is the input layer, then one per population.
    std::vector<std::vector<std::uint32_t>> neuron_spike_counts;

    std::span<const float> snapshot(std::size_t t) const;  // 1-based step
    std::uint64_t sops_at(std::size_t t) const;
    std::uint64_t total_neuron_updates() const;
    std::uint64_t input_spikes() const { return layer_spikes.empty() ? 0 : layer_spikes[0]; }
};

/// Argmax of the final output accumulator; ties resolve to the lowest class.
std::size_t classify(const SimulationTrace& trace);
/// Readout after step t (1-based) of the same run.
std::size_t classify_at(const SimulationTrace& trace, std::size_t t);

class Simulator {
public:
    explicit Simulator(SpikingNetwork net);

    const SpikingNetwork& network() const { return net_; }

    /// Runs `duration` steps on one image; deterministic in (cfg.seed, image_index, image).
    SimulationTrace run(const Tensor& image, std::size_t duration, const EncodingConfig& cfg,
                        std::uint64_t image_index = 0) const;

    /// Static fan-out of each presynaptic neuron of population p (p = 0 is
    /// the input layer feeding population 0).
    const std::vector<std::uint32_t>& fan_out_of_layer(std::size_t p) const { return fan_out_[p]; }

private:
    SpikingNetwork net_;
    // Outgoing synapses into population p, compressed by presynaptic neuron.
    std::vector<std::vector<std::uint32_t>> offsets_;
    std::vector<std::vector<std::uint32_t>> targets_;
    std::vector<std::vector<float>> weights_;
    // fan_out_[p][i]: synapses from neuron i of layer p into population p.
    std::vector<std::vector<std::uint32_t>> fan_out_;
    std::vector<std::vector<float>> bias_per_neuron_;
};

/// Accuracy readout for several durations. Each image is simulated once at
/// the longest duration and read out at every checkpoint.
struct CurveResult {
    std::vector<std::size_t> durations;
    std::vector<double> accuracy;
    /// correct[image * durations.size() + d]
    std::vector<std::uint8_t> correct;
    /// predictions at each checkpoint
    std::vector<std::uint32_t> predicted;
    /// cumulative SOPs per image at each checkpoint
    std::vector<std::uint64_t> sops;
    /// neuron updates per image at each checkpoint
    std::vector<std::uint64_t> neuron_updates;
    /// total input spikes per image at the longest duration
    std::vector<std::uint64_t> input_spikes;
    std::size_t images = 0;

    bool is_correct(std::size_t image, std::size_t d) const { return correct[image * durations.size() + d] != 0; }
    /// Accuracy at duration index d over a subset of images.
    double subset_accuracy(std::span<const std::size_t> images, std::size_t d) const;
    double mean_sops(std::size_t d) const;
};

CurveResult accuracy_curve(const Simulator& sim, const LabeledDataset& data, const std::vector<std::size_t>& durations,
                           const EncodingConfig& cfg, std::size_t workers = 1);

/// Reference path: one separate simulation per (image, duration).
CurveResult accuracy_curve_independent(const Simulator& sim, const LabeledDataset& data,
                                       const std::vector<std::size_t>& durations, const EncodingConfig& cfg,
                                       std::size_t workers = 1);

/// One JSON object per line: {image_index, duration, predicted, label, sops, per_layer_spikes}.
std::string trace_json_line(const SimulationTrace& trace, std::size_t image_index, std::uint32_t label);

}  // namespace snnport::sim
