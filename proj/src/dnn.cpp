#include "snnport/dnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snnport/parallel.hpp"

namespace snnport::dnn {

namespace {

void require_chw(const Tensor& input, const LayerSpec& layer)
{
    if (input.rank() != 3) {
        throw Error(layer.name + ": expected [c,h,w] input, got " + shape_string(input.shape()));
    }
}

template <typename Reduce>
Tensor pool_forward(const Tensor& input, const LayerSpec& layer, Reduce reduce)
{
    require_chw(input, layer);
    const auto& s = input.shape();
    const auto gy = axis_geometry(s[1], layer.kernel[0], layer.stride[0], layer.padding);
    const auto gx = axis_geometry(s[2], layer.kernel[1], layer.stride[1], layer.padding);
    Tensor out({s[0], gy.out, gx.out});
    for (std::size_t c = 0; c < s[0]; ++c) {
        for (std::size_t oy = 0; oy < gy.out; ++oy) {
            const auto y0 = static_cast<std::ptrdiff_t>(oy * layer.stride[0]) - static_cast<std::ptrdiff_t>(gy.pad_before);
            for (std::size_t ox = 0; ox < gx.out; ++ox) {
                const auto x0 = static_cast<std::ptrdiff_t>(ox * layer.stride[1]) - static_cast<std::ptrdiff_t>(gx.pad_before);
                std::vector<float> window;
                for (std::size_t ky = 0; ky < layer.kernel[0]; ++ky) {
                    const auto y = y0 + static_cast<std::ptrdiff_t>(ky);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(s[1])) {
                        continue;
                    }
                    for (std::size_t kx = 0; kx < layer.kernel[1]; ++kx) {
                        const auto x = x0 + static_cast<std::ptrdiff_t>(kx);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(s[2])) {
                            continue;
                        }
                        window.push_back(input.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
                    }
                }
                out.at(c, oy, ox) = reduce(window);
            }
        }
    }
    return out;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const LayerSpec& layer)
{
    require_chw(input, layer);
    const auto& s = input.shape();
    const auto& w = layer.weights.shape();
    if (layer.kind != LayerKind::Conv2D || w.size() != 4 || w[1] != s[0]) {
        throw Error(layer.name + ": input " + shape_string(s) + " does not match kernel " + shape_string(w));
    }
    const std::size_t kh = w[2], kw = w[3];
    const auto gy = axis_geometry(s[1], kh, layer.stride[0], layer.padding);
    const auto gx = axis_geometry(s[2], kw, layer.stride[1], layer.padding);
    Tensor out({w[0], gy.out, gx.out});
    for (std::size_t o = 0; o < w[0]; ++o) {
        for (std::size_t oy = 0; oy < gy.out; ++oy) {
            for (std::size_t ox = 0; ox < gx.out; ++ox) {
                float acc = layer.biases[o];
                for (std::size_t c = 0; c < s[0]; ++c) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto y = static_cast<std::ptrdiff_t>(oy * layer.stride[0] + ky) -
                                       static_cast<std::ptrdiff_t>(gy.pad_before);
                        if (y < 0 || y >= static_cast<std::ptrdiff_t>(s[1])) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto x = static_cast<std::ptrdiff_t>(ox * layer.stride[1] + kx) -
                                           static_cast<std::ptrdiff_t>(gx.pad_before);
                            if (x < 0 || x >= static_cast<std::ptrdiff_t>(s[2])) {
                                continue;
                            }
                            acc += layer.weights[((o * s[0] + c) * kh + ky) * kw + kx] *
                                   input.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
                        }
                    }
                }
                out.at(o, oy, ox) = acc;
            }
        }
    }
    apply_activation(out, layer.activation);
    return out;
}

Tensor avgpool_forward(const Tensor& input, const LayerSpec& layer)
{
    // Padded cells are excluded from the mean.
    return pool_forward(input, layer, [](const std::vector<float>& w) {
        float sum = 0.0f;
        for (float v : w) {
            sum += v;
        }
        return sum / static_cast<float>(w.size());
    });
}

Tensor maxpool_forward(const Tensor& input, const LayerSpec& layer)
{
    return pool_forward(input, layer, [](const std::vector<float>& w) { return *std::max_element(w.begin(), w.end()); });
}

Tensor dense_forward(const Tensor& input, const LayerSpec& layer)
{
    const auto& w = layer.weights.shape();
    if (layer.kind != LayerKind::Dense || w.size() != 2 || input.size() != w[1]) {
        throw Error(layer.name + ": input of " + std::to_string(input.size()) + " values does not match weights " +
                    shape_string(w));
    }
    Tensor out({w[0]});
    for (std::size_t o = 0; o < w[0]; ++o) {
        float acc = layer.biases[o];
        const float* row = layer.weights.data().data() + o * w[1];
        for (std::size_t i = 0; i < w[1]; ++i) {
            acc += row[i] * input[i];
        }
        out[o] = acc;
    }
    apply_activation(out, layer.activation);
    return out;
}

void apply_activation(Tensor& t, Activation act)
{
    auto v = t.data();
    switch (act) {
    case Activation::None:
        break;
    case Activation::Relu:
        for (auto& x : v) {
            x = std::max(x, 0.0f);
        }
        break;
    case Activation::Tanh:
        for (auto& x : v) {
            x = std::tanh(x);
        }
        break;
    case Activation::Softmax: {
        const float peak = *std::max_element(v.begin(), v.end());
        double sum = 0.0;
        for (auto& x : v) {
            x = std::exp(x - peak);
            sum += x;
        }
        for (auto& x : v) {
            x = static_cast<float>(x / sum);
        }
        break;
    }
    }
}

Tensor forward_layer(const Tensor& input, const LayerSpec& layer, Tensor* pre_activation)
{
    switch (layer.kind) {
    case LayerKind::Input:
        return input;
    case LayerKind::Flatten:
        return input.reshaped({input.size()});
    case LayerKind::AvgPool2D:
        return avgpool_forward(input, layer);
    case LayerKind::MaxPool2D:
        return maxpool_forward(input, layer);
    case LayerKind::Conv2D:
    case LayerKind::Dense: {
        if (pre_activation == nullptr) {
            return layer.kind == LayerKind::Conv2D ? conv2d_forward(input, layer) : dense_forward(input, layer);
        }
        LayerSpec linear = layer;
        linear.activation = Activation::None;
        Tensor z = layer.kind == LayerKind::Conv2D ? conv2d_forward(input, linear) : dense_forward(input, linear);
        *pre_activation = z;
        apply_activation(z, layer.activation);
        return z;
    }
    }
    throw Error("unknown layer kind");
}

std::size_t argmax(std::span<const float> values)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

namespace {

Prediction run(const NetworkSpec& net, const Tensor& image, ActivationRecord* record)
{
    if (image.shape() != net.input_shape) {
        throw Error("image shape " + shape_string(image.shape()) + " != network input " +
                    shape_string(net.input_shape));
    }
    Tensor x = image;
    if (record) {
        record->layers.clear();
        record->layers.reserve(net.layers.size());
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const bool last = i + 1 == net.layers.size();
        Tensor logits;
        x = forward_layer(x, net.layers[i], record && last ? &logits : nullptr);
        if (record) {
            record->layers.push_back(x);
            if (last) {
                record->logits = std::move(logits);
            }
        }
    }
    Prediction p;
    p.scores = x.values();
    p.class_index = argmax(p.scores);
    return p;
}

}  // namespace

Prediction predict(const NetworkSpec& net, const Tensor& image) { return run(net, image, nullptr); }

Prediction predict(const NetworkSpec& net, const Tensor& image, ActivationRecord& record)
{
    return run(net, image, &record);
}

std::vector<std::size_t> predict_batch(const NetworkSpec& net, const LabeledDataset& data, std::size_t workers)
{
    std::vector<std::size_t> out(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) { out[i] = predict(net, data.image(i)).class_index; });
    return out;
}

double evaluate(const NetworkSpec& net, const LabeledDataset& data, std::size_t workers)
{
    if (data.size() == 0) {
        throw Error("cannot evaluate on an empty dataset");
    }
    const auto predicted = predict_batch(net, data, workers);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        correct += predicted[i] == data.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace snnport::dnn
