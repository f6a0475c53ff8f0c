#pragma once

// DNN -> SNN conversion: data-based weight normalization and one-to-one
// mapping of layers onto integrate-and-fire populations.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snnport/model_ir.hpp"
#include "snnport/spiking_network.hpp"

namespace snnport::convert {

inline constexpr double kDefaultPercentile = 99.9;

/// Per-layer activation scale, index-aligned with NetworkSpec::layers.
/// Parameterized layers are measured; other layers inherit the scale of the
/// layer feeding them (the input scale is 1).
struct ActivationScales {
    std::vector<float> lambda;
    std::vector<bool> measured;
    double percentile = kDefaultPercentile;
    std::size_t sample_count = 0;
    std::vector<std::string> warnings;
};

/// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * N) of the
/// sorted values. Reorders `values`.
float percentile_nearest_rank(std::span<float> values, double p);

/// Hidden layers are measured on their post-activation output; the softmax
/// output layer on its logits.
ActivationScales collect_activation_scales(const NetworkSpec& net, const LabeledDataset& calibration,
                                           double percentile = kDefaultPercentile, std::size_t workers = 1);

/// W <- W * lambda_prev / lambda, b <- b / lambda for every parameterized layer.
NetworkSpec normalize_weights(const NetworkSpec& net, const ActivationScales& scales);

/// Maps a (normalized) convertible network onto IF populations. Throws if
/// validate_convertible reports violations.
SpikingNetwork build_snn(const NetworkSpec& net, float threshold = 1.0f);

/// collect + normalize + build in one call.
struct Conversion {
    ActivationScales scales;
    NetworkSpec normalized;
    SpikingNetwork snn;
};
Conversion convert(const NetworkSpec& net, const LabeledDataset& calibration, double percentile = kDefaultPercentile,
                   std::size_t workers = 1);

}  // namespace snnport::convert
