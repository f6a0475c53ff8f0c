#include "snnport/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "snnport/dnn.hpp"
#include "snnport/parallel.hpp"

namespace snnport::sim {

std::string to_string(EncodingMode mode) { return mode == EncodingMode::Analog ? "analog" : "rate"; }

EncodingMode encoding_mode_from_string(const std::string& s)
{
    if (s == "rate" || s == "stochastic-rate") {
        return EncodingMode::StochasticRate;
    }
    if (s == "analog") {
        return EncodingMode::Analog;
    }
    throw Error("unknown encoding mode '" + s + "' (expected rate or analog)");
}

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

double input_uniform(std::uint64_t stream, std::uint64_t pixel, std::uint64_t timestep)
{
    std::uint64_t h = splitmix64(stream);
    h = splitmix64(h ^ pixel);
    h = splitmix64(h ^ (timestep * 0xD1B54A32D192ED03ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

InputEncoder::InputEncoder(const Tensor& image, const EncodingConfig& cfg, std::uint64_t image_index)
    : intensities_(image.values()), max_rate_(cfg.max_rate), stream_(image_stream(cfg.seed, image_index))
{
    if (!(cfg.max_rate >= 0.0 && cfg.max_rate <= 1.0)) {
        throw Error("max_rate must lie in [0, 1]");
    }
    for (std::size_t i = 0; i < intensities_.size(); ++i) {
        const float v = intensities_[i];
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw Error("pixel " + std::to_string(i) + " outside [0,1]: " + std::to_string(v));
        }
    }
}

void InputEncoder::spikes_at(std::size_t t, std::vector<std::uint32_t>& out) const
{
    out.clear();
    for (std::size_t i = 0; i < intensities_.size(); ++i) {
        const double p = static_cast<double>(intensities_[i]) * max_rate_;
        if (p > 0.0 && input_uniform(stream_, i, t) < p) {
            out.push_back(static_cast<std::uint32_t>(i));
        }
    }
}

// ---------------------------------------------------------------------------
// Trace

std::span<const float> SimulationTrace::snapshot(std::size_t t) const
{
    if (t == 0 || t > duration) {
        throw Error("snapshot step " + std::to_string(t) + " outside [1," + std::to_string(duration) + "]");
    }
    return std::span<const float>(output_snapshots).subspan((t - 1) * class_count, class_count);
}

std::uint64_t SimulationTrace::sops_at(std::size_t t) const
{
    if (t == 0 || t > duration) {
        throw Error("step " + std::to_string(t) + " outside [1," + std::to_string(duration) + "]");
    }
    return cumulative_sops[t - 1];
}

std::uint64_t SimulationTrace::total_neuron_updates() const
{
    std::uint64_t n = 0;
    for (auto u : neuron_updates) {
        n += u;
    }
    return n;
}

std::size_t classify(const SimulationTrace& trace) { return classify_at(trace, trace.duration); }

std::size_t classify_at(const SimulationTrace& trace, std::size_t t) { return dnn::argmax(trace.snapshot(t)); }

// ---------------------------------------------------------------------------
// Simulator

namespace {

// Outgoing synapses of one layer in compressed-row form.
struct Csr {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> targets;
    std::vector<float> weights;
};

Csr build_csr(const Population& pop)
{
    Csr csr;
    const std::size_t n_pre = pop.input_count();
    csr.offsets.reserve(n_pre + 1);
    csr.offsets.push_back(0);
    for (std::size_t pre = 0; pre < n_pre; ++pre) {
        for_each_outgoing(pop, pre, [&](std::size_t post, float w) {
            csr.targets.push_back(static_cast<std::uint32_t>(post));
            csr.weights.push_back(w);
        });
        csr.offsets.push_back(static_cast<std::uint32_t>(csr.targets.size()));
    }
    return csr;
}

}  // namespace

Simulator::Simulator(SpikingNetwork net) : net_(std::move(net))
{
    if (net_.populations.empty()) {
        throw Error("spiking network has no populations");
    }
    if (net_.populations.back().kind != PopulationKind::Accumulator) {
        throw Error("spiking network must end in an Accumulator population");
    }
    std::size_t expected_in = shape_size(net_.input_shape);
    for (const auto& p : net_.populations) {
        if (p.input_count() != expected_in) {
            throw Error("population " + p.name + " expects " + std::to_string(p.input_count()) + " inputs, previous layer has " +
                        std::to_string(expected_in));
        }
        expected_in = p.neuron_count();
    }
    const std::size_t P = net_.populations.size();
    offsets_.resize(P);
    targets_.resize(P);
    weights_.resize(P);
    fan_out_.resize(P);
    bias_per_neuron_.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
        const auto& pop = net_.populations[p];
        Csr csr = build_csr(pop);
        auto& fo = fan_out_[p];
        fo.resize(pop.input_count());
        for (std::size_t i = 0; i < fo.size(); ++i) {
            fo[i] = csr.offsets[i + 1] - csr.offsets[i];
        }
        offsets_[p] = std::move(csr.offsets);
        targets_[p] = std::move(csr.targets);
        weights_[p] = std::move(csr.weights);
        auto& bias = bias_per_neuron_[p];
        bias.resize(pop.neuron_count());
        for (std::size_t n = 0; n < bias.size(); ++n) {
            bias[n] = pop.bias_of(n);
        }
    }
}

SimulationTrace Simulator::run(const Tensor& image, std::size_t duration, const EncodingConfig& cfg,
                               std::uint64_t image_index) const
{
    if (duration == 0) {
        throw Error("simulation duration must be at least 1 timestep");
    }
    if (image.shape() != net_.input_shape) {
        throw Error("image shape " + shape_string(image.shape()) + " != network input " + shape_string(net_.input_shape));
    }
    const InputEncoder encoder(image, cfg, image_index);
    const std::size_t P = net_.populations.size();
    const std::size_t classes = net_.populations.back().neuron_count();

    SimulationTrace tr;
    tr.duration = duration;
    tr.class_count = classes;
    tr.output_snapshots.reserve(duration * classes);
    tr.output_spike_counts.assign(classes, 0);
    tr.layer_spikes.assign(P + 1, 0);
    tr.step_spikes.reserve(duration * (P + 1));
    tr.cumulative_sops.reserve(duration);
    tr.neuron_updates.assign(P, 0);
    if (cfg.record_neuron_counts) {
        tr.neuron_spike_counts.resize(P + 1);
        tr.neuron_spike_counts[0].assign(shape_size(net_.input_shape), 0);
        for (std::size_t p = 0; p < P; ++p) {
            tr.neuron_spike_counts[p + 1].assign(net_.populations[p].neuron_count(), 0);
        }
    }

    std::vector<std::vector<float>> v(P), current(P);
    std::vector<std::vector<std::uint32_t>> spikes(P + 1);
    for (std::size_t p = 0; p < P; ++p) {
        v[p].assign(net_.populations[p].neuron_count(), 0.0f);
        current[p].assign(net_.populations[p].neuron_count(), 0.0f);
    }
    std::vector<float> shadow(classes, 0.0f);

    // Analog input is a constant current: integrate it once.
    const bool analog = cfg.mode == EncodingMode::Analog;
    std::vector<float> analog_current;
    std::uint64_t analog_sops = 0;
    if (analog) {
        analog_current.assign(net_.populations[0].neuron_count(), 0.0f);
        const auto pix = encoder.intensities();
        for (std::size_t i = 0; i < pix.size(); ++i) {
            const float a = pix[i] * static_cast<float>(cfg.max_rate);
            if (a == 0.0f) {
                continue;
            }
            for (auto k = offsets_[0][i]; k < offsets_[0][i + 1]; ++k) {
                analog_current[targets_[0][k]] += a * weights_[0][k];
            }
            analog_sops += fan_out_[0][i];
        }
    }

    std::uint64_t sops = 0;
    for (std::size_t t = 0; t < duration; ++t) {
        if (!analog) {
            encoder.spikes_at(t, spikes[0]);
        }
        for (std::size_t p = 0; p < P; ++p) {
            const auto& pop = net_.populations[p];
            auto& in = current[p];
            if (p == 0 && analog) {
                std::copy(analog_current.begin(), analog_current.end(), in.begin());
                sops += analog_sops;
            } else {
                std::fill(in.begin(), in.end(), 0.0f);
                const auto& off = offsets_[p];
                const auto& tgt = targets_[p];
                const auto& w = weights_[p];
                for (auto pre : spikes[p]) {
                    for (auto k = off[pre]; k < off[pre + 1]; ++k) {
                        in[tgt[k]] += w[k];
                    }
                    sops += fan_out_[p][pre];
                }
            }
            const auto& bias = bias_per_neuron_[p];
            auto& vp = v[p];
            const std::size_t n = vp.size();
            tr.neuron_updates[p] += n;
            if (!pop.spiking()) {
                for (std::size_t i = 0; i < n; ++i) {
                    const float drive = in[i] + bias[i];
                    vp[i] += drive;
                    shadow[i] += drive;
                    if (shadow[i] >= pop.threshold) {
                        ++tr.output_spike_counts[i];
                        shadow[i] -= pop.threshold;
                    }
                }
                continue;
            }
            const float theta = pop.threshold;
            const float ceiling = std::nextafter(theta, 0.0f);
            auto& out = spikes[p + 1];
            out.clear();
            for (std::size_t i = 0; i < n; ++i) {
                float x = vp[i] + in[i] + bias[i];
                if (x >= theta) {
                    out.push_back(static_cast<std::uint32_t>(i));
                    x -= theta;
                    x = std::min(x, ceiling);
                }
                vp[i] = std::max(x, -theta);
            }
        }
        for (std::size_t l = 0; l <= P; ++l) {
            const auto count = static_cast<std::uint32_t>(l == P ? 0 : spikes[l].size());
            tr.layer_spikes[l] += count;
            tr.step_spikes.push_back(count);
            if (cfg.record_neuron_counts && l < P) {
                for (auto i : spikes[l]) {
                    ++tr.neuron_spike_counts[l][i];
                }
            }
        }
        tr.cumulative_sops.push_back(sops);
        tr.output_snapshots.insert(tr.output_snapshots.end(), v[P - 1].begin(), v[P - 1].end());
    }
    tr.sops = sops;
    return tr;
}

// ---------------------------------------------------------------------------
// Accuracy curves

double CurveResult::subset_accuracy(std::span<const std::size_t> subset, std::size_t d) const
{
    if (subset.empty()) {
        throw Error("accuracy of an empty subset");
    }
    std::size_t hits = 0;
    for (auto i : subset) {
        hits += is_correct(i, d) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(subset.size());
}

double CurveResult::mean_sops(std::size_t d) const
{
    double total = 0.0;
    for (std::size_t i = 0; i < images; ++i) {
        total += static_cast<double>(sops[i * durations.size() + d]);
    }
    return images ? total / static_cast<double>(images) : 0.0;
}

namespace {

void check_curve_inputs(const LabeledDataset& data, const std::vector<std::size_t>& durations)
{
    if (data.size() == 0) {
        throw Error("accuracy curve needs at least one image");
    }
    if (durations.empty()) {
        throw Error("accuracy curve needs at least one duration");
    }
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (durations[i] == 0 || (i > 0 && durations[i] <= durations[i - 1])) {
            throw Error("durations must be positive and strictly increasing");
        }
    }
}

CurveResult empty_curve(const LabeledDataset& data, const std::vector<std::size_t>& durations)
{
    CurveResult r;
    r.durations = durations;
    r.images = data.size();
    const std::size_t cells = data.size() * durations.size();
    r.correct.assign(cells, 0);
    r.predicted.assign(cells, 0);
    r.sops.assign(cells, 0);
    r.neuron_updates.assign(cells, 0);
    r.input_spikes.assign(data.size(), 0);
    return r;
}

void finish_curve(CurveResult& r)
{
    r.accuracy.assign(r.durations.size(), 0.0);
    for (std::size_t d = 0; d < r.durations.size(); ++d) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < r.images; ++i) {
            hits += r.is_correct(i, d) ? 1 : 0;
        }
        r.accuracy[d] = static_cast<double>(hits) / static_cast<double>(r.images);
    }
}

}  // namespace

CurveResult accuracy_curve(const Simulator& sim, const LabeledDataset& data, const std::vector<std::size_t>& durations,
                           const EncodingConfig& cfg, std::size_t workers)
{
    check_curve_inputs(data, durations);
    CurveResult r = empty_curve(data, durations);
    const std::size_t nd = durations.size();
    parallel_for(data.size(), workers, [&](std::size_t i) {
        const auto trace = sim.run(data.image(i), durations.back(), cfg, i);
        std::uint64_t neurons = 0;
        for (auto u : trace.neuron_updates) {
            neurons += u / trace.duration;
        }
        for (std::size_t d = 0; d < nd; ++d) {
            const auto pred = classify_at(trace, durations[d]);
            r.predicted[i * nd + d] = static_cast<std::uint32_t>(pred);
            r.correct[i * nd + d] = pred == data.labels[i] ? 1 : 0;
            r.sops[i * nd + d] = trace.sops_at(durations[d]);
            r.neuron_updates[i * nd + d] = neurons * durations[d];
        }
        r.input_spikes[i] = trace.input_spikes();
    });
    finish_curve(r);
    return r;
}

CurveResult accuracy_curve_independent(const Simulator& sim, const LabeledDataset& data,
                                       const std::vector<std::size_t>& durations, const EncodingConfig& cfg,
                                       std::size_t workers)
{
    check_curve_inputs(data, durations);
    CurveResult r = empty_curve(data, durations);
    const std::size_t nd = durations.size();
    parallel_for(data.size(), workers, [&](std::size_t i) {
        const auto image = data.image(i);
        for (std::size_t d = 0; d < nd; ++d) {
            const auto trace = sim.run(image, durations[d], cfg, i);
            const auto pred = classify(trace);
            r.predicted[i * nd + d] = static_cast<std::uint32_t>(pred);
            r.correct[i * nd + d] = pred == data.labels[i] ? 1 : 0;
            r.sops[i * nd + d] = trace.sops;
            r.neuron_updates[i * nd + d] = trace.total_neuron_updates();
            if (d + 1 == nd) {
                r.input_spikes[i] = trace.input_spikes();
            }
        }
    });
    finish_curve(r);
    return r;
}

std::string trace_json_line(const SimulationTrace& trace, std::size_t image_index, std::uint32_t label)
{
    nlohmann::json j;
    j["image_index"] = image_index;
    j["duration"] = trace.duration;
    j["predicted"] = classify(trace);
    j["label"] = label;
    j["sops"] = trace.sops;
    j["per_layer_spikes"] = trace.layer_spikes;
    return j.dump();
}

}  // namespace snnport::sim
