#pragma once

// Reference forward pass for NetworkSpec (the conventional-network baseline).

#include <cstddef>
#include <vector>

#include "snnport/model_ir.hpp"

namespace snnport::dnn {

/// Per-layer outputs for one input, index-aligned with NetworkSpec::layers.
/// `logits` holds the final layer's pre-activation values.
struct ActivationRecord {
    std::vector<Tensor> layers;
    Tensor logits;
};

struct Prediction {
    std::size_t class_index = 0;
    std::vector<float> scores;
};

Tensor conv2d_forward(const Tensor& input, const LayerSpec& layer);
Tensor avgpool_forward(const Tensor& input, const LayerSpec& layer);
Tensor maxpool_forward(const Tensor& input, const LayerSpec& layer);
Tensor dense_forward(const Tensor& input, const LayerSpec& layer);

/// Applies the activation in place.
void apply_activation(Tensor& t, Activation act);

/// Runs one layer; `pre_activation` (if non-null) receives the value before
/// the activation function.
Tensor forward_layer(const Tensor& input, const LayerSpec& layer, Tensor* pre_activation = nullptr);

/// Index of the maximum; ties resolve to the lowest index.
std::size_t argmax(std::span<const float> values);

Prediction predict(const NetworkSpec& net, const Tensor& image);
Prediction predict(const NetworkSpec& net, const Tensor& image, ActivationRecord& record);

/// Predicted class per image; `workers` threads split the images.
std::vector<std::size_t> predict_batch(const NetworkSpec& net, const LabeledDataset& data, std::size_t workers = 1);

/// Fraction of correctly classified images.
double evaluate(const NetworkSpec& net, const LabeledDataset& data, std::size_t workers = 1);

}  // namespace snnport::dnn
