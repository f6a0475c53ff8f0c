#include "snnport/converter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snnport/dnn.hpp"
#include "snnport/parallel.hpp"

namespace snnport::convert {

float percentile_nearest_rank(std::span<float> values, double p)
{
    if (values.empty()) {
        throw Error("percentile of an empty set");
    }
    if (!(p > 0.0 && p <= 100.0)) {
        throw Error("percentile must lie in (0, 100]");
    }
    const double exact = p / 100.0 * static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

ActivationScales collect_activation_scales(const NetworkSpec& net, const LabeledDataset& calibration,
                                           double percentile, std::size_t workers)
{
    if (calibration.size() == 0) {
        throw Error("calibration set is empty");
    }
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw Error("percentile must lie in (0, 100]");
    }
    const auto shapes = shape_chain(net);
    const std::size_t last = net.layers.size() - 1;
    const std::size_t n_images = calibration.size();

    // pooled[l] holds every image's activations for parameterized layer l.
    std::vector<std::vector<float>> pooled(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (net.layers[l].has_parameters()) {
            pooled[l].resize(shape_size(shapes[l]) * n_images);
        }
    }
    parallel_for(n_images, workers, [&](std::size_t i) {
        dnn::ActivationRecord rec;
        dnn::predict(net, calibration.image(i), rec);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            if (pooled[l].empty()) {
                continue;
            }
            const bool use_logits = l == last && net.layers[l].activation == Activation::Softmax;
            const auto& src = use_logits ? rec.logits : rec.layers[l];
            std::copy(src.values().begin(), src.values().end(),
                      pooled[l].begin() + static_cast<std::ptrdiff_t>(i * src.size()));
        }
    });

    ActivationScales s;
    s.percentile = percentile;
    s.sample_count = n_images;
    s.lambda.assign(net.layers.size(), 1.0f);
    s.measured.assign(net.layers.size(), false);
    float inherited = 1.0f;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (pooled[l].empty()) {
            s.lambda[l] = inherited;
            continue;
        }
        auto& values = pooled[l];
        const float peak = *std::max_element(values.begin(), values.end());
        float lambda = percentile_nearest_rank(values, percentile);
        if (peak <= 0.0f) {
            s.warnings.push_back("layer " + net.layers[l].name + ": all activations are zero; scale set to 1");
            lambda = 1.0f;
        } else if (lambda <= 0.0f) {
            std::ostringstream msg;
            msg << "layer " << net.layers[l].name << ": percentile " << percentile
                << " is not positive; using the maximum " << peak;
            s.warnings.push_back(msg.str());
            lambda = peak;
        }
        s.lambda[l] = lambda;
        s.measured[l] = true;
        inherited = lambda;
    }
    return s;
}

NetworkSpec normalize_weights(const NetworkSpec& net, const ActivationScales& scales)
{
    if (scales.lambda.size() != net.layers.size()) {
        throw Error("activation scales cover " + std::to_string(scales.lambda.size()) + " layers, network has " +
                    std::to_string(net.layers.size()));
    }
    NetworkSpec out = net;
    float previous = 1.0f;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        auto& layer = out.layers[l];
        if (!layer.has_parameters()) {
            continue;
        }
        if (l >= scales.measured.size() || !scales.measured[l]) {
            throw Error("missing activation scale for layer " + layer.name);
        }
        const float lambda = scales.lambda[l];
        if (!(lambda > 0.0f)) {
            throw Error("non-positive activation scale for layer " + layer.name);
        }
        const float w_scale = previous / lambda;
        for (auto& w : layer.weights.data()) {
            w *= w_scale;
        }
        for (auto& b : layer.biases.data()) {
            b /= lambda;
        }
        previous = lambda;
    }
    return out;
}

SpikingNetwork build_snn(const NetworkSpec& net, float threshold)
{
    const auto violations = validate_convertible(net);
    if (!violations.empty()) {
        std::string msg = "network is not convertible:";
        for (const auto& v : violations) {
            msg += "\n  layer " + std::to_string(v.layer_index) + " (" + v.layer_name + "): " + v.message;
        }
        throw Error(msg);
    }
    if (!(threshold > 0.0f)) {
        throw Error("threshold must be positive");
    }
    const auto shapes = shape_chain(net);
    SpikingNetwork snn;
    snn.name = net.name;
    snn.input_shape = net.input_shape;
    snn.class_count = net.class_count;
    snn.metadata = net.metadata;
    Shape current = net.input_shape;
    const std::size_t last = net.layers.size() - 1;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        if (layer.kind == LayerKind::Input || layer.kind == LayerKind::Flatten) {
            current = shapes[l];
            continue;
        }
        Population p;
        p.name = layer.name;
        p.source_layer = l;
        p.input_shape = current;
        p.output_shape = shapes[l];
        p.threshold = threshold;
        switch (layer.kind) {
        case LayerKind::Conv2D:
            p.kind = PopulationKind::IFConv2D;
            p.kernel = layer.kernel;
            p.stride = layer.stride;
            p.padding = layer.padding;
            p.weights = layer.weights;
            p.biases = layer.biases;
            break;
        case LayerKind::AvgPool2D:
            p.kind = PopulationKind::IFAvgPool;
            p.kernel = layer.kernel;
            p.stride = layer.stride;
            p.padding = layer.padding;
            break;
        case LayerKind::Dense:
            p.kind = l == last ? PopulationKind::Accumulator : PopulationKind::IFDense;
            p.weights = layer.weights;
            p.biases = layer.biases;
            break;
        default:
            throw Error("layer " + layer.name + " has no spiking equivalent");
        }
        snn.populations.push_back(std::move(p));
        current = shapes[l];
    }
    return snn;
}

Conversion convert(const NetworkSpec& net, const LabeledDataset& calibration, double percentile, std::size_t workers)
{
    Conversion c;
    c.scales = collect_activation_scales(net, calibration, percentile, workers);
    c.normalized = normalize_weights(net, c.scales);
    c.snn = build_snn(c.normalized);
    std::ostringstream lambdas;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (c.scales.measured[l]) {
            lambdas << (lambdas.tellp() > 0 ? "," : "") << net.layers[l].name << "=" << c.scales.lambda[l];
        }
    }
    c.snn.metadata["normalization.percentile"] = std::to_string(percentile);
    c.snn.metadata["normalization.samples"] = std::to_string(calibration.size());
    c.snn.metadata["normalization.lambda"] = lambdas.str();
    return c;
}

}  // namespace snnport::convert
