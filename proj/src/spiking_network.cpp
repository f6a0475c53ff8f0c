#include "snnport/spiking_network.hpp"

#include "snnc_container.hpp"

namespace snnport {

using nlohmann::json;

std::string to_string(PopulationKind kind)
{
    switch (kind) {
    case PopulationKind::IFConv2D: return "IFConv2D";
    case PopulationKind::IFAvgPool: return "IFAvgPool";
    case PopulationKind::IFDense: return "IFDense";
    case PopulationKind::Accumulator: return "Accumulator";
    }
    return "?";
}

PopulationKind population_kind_from_string(const std::string& s)
{
    for (auto k : {PopulationKind::IFConv2D, PopulationKind::IFAvgPool, PopulationKind::IFDense,
                   PopulationKind::Accumulator}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw Error("unsupported population kind '" + s + "'");
}

float Population::bias_of(std::size_t n) const
{
    if (biases.empty()) {
        return 0.0f;
    }
    if (kind == PopulationKind::IFConv2D) {
        return biases[n / (output_shape[1] * output_shape[2])];
    }
    return biases[n];
}

std::size_t SpikingNetwork::neuron_count() const
{
    std::size_t n = 0;
    for (const auto& p : populations) {
        n += p.neuron_count();
    }
    return n;
}

namespace detail {

Geometry2D geometry_of(const Population& pop)
{
    Geometry2D g{};
    g.in_c = pop.input_shape[0];
    g.in_h = pop.input_shape[1];
    g.in_w = pop.input_shape[2];
    g.out_c = pop.output_shape[0];
    g.out_h = pop.output_shape[1];
    g.out_w = pop.output_shape[2];
    g.pad_y = axis_geometry(g.in_h, pop.kernel[0], pop.stride[0], pop.padding).pad_before;
    g.pad_x = axis_geometry(g.in_w, pop.kernel[1], pop.stride[1], pop.padding).pad_before;
    return g;
}

}  // namespace detail

std::size_t pool_window_size(const Population& pop, std::size_t n)
{
    const auto g = detail::geometry_of(pop);
    const std::size_t oy = (n / g.out_w) % g.out_h;
    const std::size_t ox = n % g.out_w;
    const auto valid = [](std::size_t o, std::size_t stride, std::size_t pad, std::size_t k, std::size_t in) {
        const auto begin = static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(pad);
        const auto lo = std::max<std::ptrdiff_t>(begin, 0);
        const auto hi = std::min<std::ptrdiff_t>(begin + static_cast<std::ptrdiff_t>(k), static_cast<std::ptrdiff_t>(in));
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(hi - lo, 0));
    };
    return valid(oy, pop.stride[0], g.pad_y, pop.kernel[0], g.in_h) *
           valid(ox, pop.stride[1], g.pad_x, pop.kernel[1], g.in_w);
}

std::size_t fan_out(const Population& pop, std::size_t pre)
{
    switch (pop.kind) {
    case PopulationKind::IFDense:
    case PopulationKind::Accumulator:
        return pop.neuron_count();
    default: {
        std::size_t n = 0;
        for_each_outgoing(pop, pre, [&](std::size_t, float) { ++n; });
        return n;
    }
    }
}

// ---------------------------------------------------------------------------
// Serialization

std::vector<std::uint8_t> serialize_snn(const SpikingNetwork& net)
{
    detail::Container c;
    json pops = json::array();
    for (const auto& p : net.populations) {
        json jp;
        jp["kind"] = to_string(p.kind);
        jp["name"] = p.name;
        jp["source_layer"] = p.source_layer;
        jp["input_shape"] = p.input_shape;
        jp["output_shape"] = p.output_shape;
        jp["threshold"] = p.threshold;
        json hp = json::object();
        if (p.kind == PopulationKind::IFConv2D || p.kind == PopulationKind::IFAvgPool) {
            hp["kernel"] = json::array({p.kernel[0], p.kernel[1]});
            hp["stride"] = json::array({p.stride[0], p.stride[1]});
            hp["padding"] = to_string(p.padding);
        }
        jp["hyperparameters"] = hp;
        std::uint64_t woff = 0, wlen = 0, boff = 0, blen = 0;
        if (!p.weights.empty()) {
            std::tie(woff, wlen) = detail::append_tensor(c.blob, p.weights);
            jp["weight_shape"] = p.weights.shape();
        }
        if (!p.biases.empty()) {
            std::tie(boff, blen) = detail::append_tensor(c.blob, p.biases);
        }
        jp["weight_offset"] = woff;
        jp["weight_len"] = wlen;
        jp["bias_offset"] = boff;
        jp["bias_len"] = blen;
        pops.push_back(jp);
    }
    c.manifest["format"] = "spiking";
    c.manifest["name"] = net.name;
    c.manifest["input_shape"] = net.input_shape;
    c.manifest["class_count"] = net.class_count;
    c.manifest["metadata"] = net.metadata;
    c.manifest["layers"] = pops;
    c.manifest["blob_len"] = c.blob.size();
    return detail::encode_container(c);
}

SpikingNetwork parse_snn(std::span<const std::uint8_t> bytes)
{
    const auto c = detail::decode_container(bytes);
    const auto& m = c.manifest;
    SpikingNetwork net;
    try {
        if (m.value("format", std::string{}) != "spiking") {
            throw FormatError("container does not hold a spiking network", 16);
        }
        net.name = m.at("name").get<std::string>();
        net.input_shape = m.at("input_shape").get<Shape>();
        net.class_count = m.at("class_count").get<std::size_t>();
        net.metadata = m.value("metadata", std::map<std::string, std::string>{});
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what(), 16);
    }
    const auto& layers = m.value("layers", json::array());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& jp = layers[i];
        Population p;
        try {
            p.kind = population_kind_from_string(jp.at("kind").get<std::string>());
            p.name = jp.value("name", std::string{});
            p.source_layer = jp.at("source_layer").get<std::size_t>();
            p.input_shape = jp.at("input_shape").get<Shape>();
            p.output_shape = jp.at("output_shape").get<Shape>();
            p.threshold = jp.at("threshold").get<float>();
            if (!(p.threshold > 0.0f)) {
                throw Error("threshold must be positive");
            }
            const auto& hp = jp.value("hyperparameters", json::object());
            if (p.kind == PopulationKind::IFConv2D || p.kind == PopulationKind::IFAvgPool) {
                p.kernel = {hp.at("kernel")[0].get<std::size_t>(), hp.at("kernel")[1].get<std::size_t>()};
                p.stride = {hp.at("stride")[0].get<std::size_t>(), hp.at("stride")[1].get<std::size_t>()};
                p.padding = padding_from_string(hp.at("padding").get<std::string>());
            }
            if (jp.value("weight_len", std::uint64_t{0}) > 0) {
                p.weights = detail::read_tensor(c.blob, jp.at("weight_offset").get<std::uint64_t>(),
                                                jp.at("weight_len").get<std::uint64_t>(),
                                                jp.at("weight_shape").get<Shape>(), c.blob_base);
            }
            if (jp.value("bias_len", std::uint64_t{0}) > 0) {
                const std::size_t n = p.kind == PopulationKind::IFConv2D ? p.output_shape.at(0) : p.neuron_count();
                p.biases = detail::read_tensor(c.blob, jp.at("bias_offset").get<std::uint64_t>(),
                                               jp.at("bias_len").get<std::uint64_t>(), {n}, c.blob_base);
            }
            const bool needs_weights = p.kind != PopulationKind::IFAvgPool;
            if (needs_weights && p.weights.empty()) {
                throw Error("population has no weights");
            }
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception& e) {
            throw FormatError("layer " + std::to_string(i) + " (" + p.name + "): " + e.what(), i);
        }
        net.populations.push_back(std::move(p));
    }
    if (net.populations.empty() || net.populations.back().kind != PopulationKind::Accumulator) {
        throw FormatError("spiking network must end in an Accumulator population", layers.size());
    }
    return net;
}

SpikingNetwork load_snn(const std::string& path) { return parse_snn(read_file(path)); }

void save_snn(const SpikingNetwork& net, const std::string& path) { write_file(path, serialize_snn(net)); }

}  // namespace snnport
