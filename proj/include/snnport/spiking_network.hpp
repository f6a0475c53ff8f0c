#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "snnport/model_ir.hpp"

namespace snnport {

enum class PopulationKind { IFConv2D, IFAvgPool, IFDense, Accumulator };

std::string to_string(PopulationKind kind);
PopulationKind population_kind_from_string(const std::string& s);

/// One integrate-and-fire population, mapped one-to-one from a source layer.
/// Connectivity reads from the previous population (or the encoded image);
/// Flatten has no population, dense inputs are indexed in row-major order.
struct Population {
    PopulationKind kind = PopulationKind::IFDense;
    std::string name;
    std::size_t source_layer = 0;
    Shape input_shape;
    Shape output_shape;
    std::array<std::size_t, 2> kernel{0, 0};
    std::array<std::size_t, 2> stride{1, 1};
    Padding padding = Padding::Valid;
    Tensor weights;  // IFConv2D [out,in,kh,kw]; IFDense/Accumulator [out,in]; empty for pools
    Tensor biases;   // per output channel/unit; empty for pools
    float threshold = 1.0f;

    std::size_t neuron_count() const { return shape_size(output_shape); }
    std::size_t input_count() const { return shape_size(input_shape); }
    bool spiking() const { return kind != PopulationKind::Accumulator; }

    /// Bias injected into neuron `n` every timestep.
    float bias_of(std::size_t n) const;

    bool operator==(const Population&) const = default;
};

struct SpikingNetwork {
    std::string name;
    Shape input_shape;
    std::size_t class_count = 0;
    std::vector<Population> populations;
    std::map<std::string, std::string> metadata;

    std::size_t neuron_count() const;
    bool operator==(const SpikingNetwork&) const = default;
};

std::vector<std::uint8_t> serialize_snn(const SpikingNetwork& net);
SpikingNetwork parse_snn(std::span<const std::uint8_t> bytes);
SpikingNetwork load_snn(const std::string& path);
void save_snn(const SpikingNetwork& net, const std::string& path);

// ---------------------------------------------------------------------------
// Connectivity enumeration. These walk the implicit synapse lists defined by
// a population's geometry; callbacks receive (neuron index, weight).

namespace detail {

struct Geometry2D {
    std::size_t in_c, in_h, in_w, out_c, out_h, out_w, pad_y, pad_x;
};

Geometry2D geometry_of(const Population& pop);

}  // namespace detail

/// Number of valid (non-padded) cells in the pooling window of output `n`.
std::size_t pool_window_size(const Population& pop, std::size_t n);

template <typename Fn>
void for_each_incoming(const Population& pop, std::size_t post, Fn&& fn)
{
    switch (pop.kind) {
    case PopulationKind::IFDense:
    case PopulationKind::Accumulator: {
        const std::size_t in = pop.input_count();
        const float* row = pop.weights.data().data() + post * in;
        for (std::size_t i = 0; i < in; ++i) {
            fn(i, row[i]);
        }
        return;
    }
    case PopulationKind::IFConv2D:
    case PopulationKind::IFAvgPool: {
        const auto g = detail::geometry_of(pop);
        const std::size_t o = post / (g.out_h * g.out_w);
        const std::size_t oy = (post / g.out_w) % g.out_h;
        const std::size_t ox = post % g.out_w;
        const bool conv = pop.kind == PopulationKind::IFConv2D;
        const float pool_w = conv ? 0.0f : 1.0f / static_cast<float>(pool_window_size(pop, post));
        const std::size_t c_begin = conv ? 0 : o;
        const std::size_t c_end = conv ? g.in_c : o + 1;
        for (std::size_t c = c_begin; c < c_end; ++c) {
            for (std::size_t ky = 0; ky < pop.kernel[0]; ++ky) {
                const auto y = static_cast<std::ptrdiff_t>(oy * pop.stride[0] + ky) - static_cast<std::ptrdiff_t>(g.pad_y);
                if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < pop.kernel[1]; ++kx) {
                    const auto x = static_cast<std::ptrdiff_t>(ox * pop.stride[1] + kx) - static_cast<std::ptrdiff_t>(g.pad_x);
                    if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) {
                        continue;
                    }
                    const std::size_t pre = (c * g.in_h + static_cast<std::size_t>(y)) * g.in_w + static_cast<std::size_t>(x);
                    const float w = conv ? pop.weights[((o * g.in_c + c) * pop.kernel[0] + ky) * pop.kernel[1] + kx] : pool_w;
                    fn(pre, w);
                }
            }
        }
        return;
    }
    }
}

template <typename Fn>
void for_each_outgoing(const Population& pop, std::size_t pre, Fn&& fn)
{
    switch (pop.kind) {
    case PopulationKind::IFDense:
    case PopulationKind::Accumulator: {
        const std::size_t in = pop.input_count();
        const std::size_t out = pop.neuron_count();
        for (std::size_t o = 0; o < out; ++o) {
            fn(o, pop.weights[o * in + pre]);
        }
        return;
    }
    case PopulationKind::IFConv2D:
    case PopulationKind::IFAvgPool: {
        const auto g = detail::geometry_of(pop);
        const std::size_t c = pre / (g.in_h * g.in_w);
        const std::size_t y = (pre / g.in_w) % g.in_h;
        const std::size_t x = pre % g.in_w;
        const bool conv = pop.kind == PopulationKind::IFConv2D;
        const std::size_t o_begin = conv ? 0 : c;
        const std::size_t o_end = conv ? g.out_c : c + 1;
        for (std::size_t ky = 0; ky < pop.kernel[0]; ++ky) {
            const auto ny = static_cast<std::ptrdiff_t>(y + g.pad_y) - static_cast<std::ptrdiff_t>(ky);
            if (ny < 0 || ny % static_cast<std::ptrdiff_t>(pop.stride[0]) != 0) {
                continue;
            }
            const auto oy = static_cast<std::size_t>(ny) / pop.stride[0];
            if (oy >= g.out_h) {
                continue;
            }
            for (std::size_t kx = 0; kx < pop.kernel[1]; ++kx) {
                const auto nx = static_cast<std::ptrdiff_t>(x + g.pad_x) - static_cast<std::ptrdiff_t>(kx);
                if (nx < 0 || nx % static_cast<std::ptrdiff_t>(pop.stride[1]) != 0) {
                    continue;
                }
                const auto ox = static_cast<std::size_t>(nx) / pop.stride[1];
                if (ox >= g.out_w) {
                    continue;
                }
                for (std::size_t o = o_begin; o < o_end; ++o) {
                    const std::size_t post = (o * g.out_h + oy) * g.out_w + ox;
                    const float w = conv ? pop.weights[((o * g.in_c + c) * pop.kernel[0] + ky) * pop.kernel[1] + kx]
                                         : 1.0f / static_cast<float>(pool_window_size(pop, post));
                    fn(post, w);
                }
            }
        }
        return;
    }
    }
}

/// Number of synapses leaving presynaptic neuron `pre` into `pop`.
std::size_t fan_out(const Population& pop, std::size_t pre);

}  // namespace snnport
