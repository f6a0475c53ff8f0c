#include "snnport/model_ir.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "snnc_container.hpp"

namespace snnport {

using nlohmann::json;

std::string to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Input: return "Input";
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::AvgPool2D: return "AvgPool2D";
    case LayerKind::MaxPool2D: return "MaxPool2D";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    }
    return "?";
}

std::string to_string(Activation act)
{
    switch (act) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Softmax: return "softmax";
    case Activation::Tanh: return "tanh";
    }
    return "?";
}

std::string to_string(Padding pad) { return pad == Padding::Same ? "same" : "valid"; }

LayerKind layer_kind_from_string(const std::string& s)
{
    for (auto k : {LayerKind::Input, LayerKind::Conv2D, LayerKind::AvgPool2D, LayerKind::MaxPool2D,
                   LayerKind::Flatten, LayerKind::Dense}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw Error("unsupported layer kind '" + s + "'");
}

Activation activation_from_string(const std::string& s)
{
    for (auto a : {Activation::None, Activation::Relu, Activation::Softmax, Activation::Tanh}) {
        if (to_string(a) == s) {
            return a;
        }
    }
    throw Error("unsupported activation '" + s + "'");
}

Padding padding_from_string(const std::string& s)
{
    if (s == "same") {
        return Padding::Same;
    }
    if (s == "valid") {
        return Padding::Valid;
    }
    throw Error("unsupported padding '" + s + "'");
}

AxisGeometry axis_geometry(std::size_t in, std::size_t window, std::size_t stride, Padding pad)
{
    if (window == 0 || stride == 0) {
        throw Error("window and stride must be positive");
    }
    AxisGeometry g;
    if (pad == Padding::Same) {
        g.out = (in + stride - 1) / stride;
        const std::size_t span = (g.out - 1) * stride + window;
        const std::size_t total = span > in ? span - in : 0;
        g.pad_before = total / 2;
    } else {
        if (in < window) {
            throw Error("valid window of " + std::to_string(window) + " exceeds input extent " +
                        std::to_string(in));
        }
        g.out = (in - window) / stride + 1;
    }
    return g;
}

// ---------------------------------------------------------------------------
// LayerSpec

std::size_t LayerSpec::parameter_count() const
{
    return has_parameters() ? weights.size() + biases.size() : 0;
}

LayerSpec LayerSpec::input(const std::string& name)
{
    LayerSpec l;
    l.kind = LayerKind::Input;
    l.name = name;
    return l;
}

LayerSpec LayerSpec::conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
                            std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride,
                            Padding padding, Activation activation)
{
    LayerSpec l;
    l.kind = LayerKind::Conv2D;
    l.name = std::move(name);
    l.units = out_channels;
    l.kernel = kernel;
    l.stride = stride;
    l.padding = padding;
    l.activation = activation;
    l.weights = Tensor({out_channels, in_channels, kernel[0], kernel[1]});
    l.biases = Tensor({out_channels});
    return l;
}

namespace {

LayerSpec pool(LayerKind kind, std::string name, std::array<std::size_t, 2> window,
               std::array<std::size_t, 2> stride, Padding padding)
{
    LayerSpec l;
    l.kind = kind;
    l.name = std::move(name);
    l.kernel = window;
    l.stride = stride;
    l.padding = padding;
    return l;
}

}  // namespace

LayerSpec LayerSpec::avg_pool(std::string name, std::array<std::size_t, 2> window,
                              std::array<std::size_t, 2> stride, Padding padding)
{
    return pool(LayerKind::AvgPool2D, std::move(name), window, stride, padding);
}

LayerSpec LayerSpec::max_pool(std::string name, std::array<std::size_t, 2> window,
                              std::array<std::size_t, 2> stride, Padding padding)
{
    return pool(LayerKind::MaxPool2D, std::move(name), window, stride, padding);
}

LayerSpec LayerSpec::flatten(std::string name)
{
    LayerSpec l;
    l.kind = LayerKind::Flatten;
    l.name = std::move(name);
    return l;
}

LayerSpec LayerSpec::dense(std::string name, std::size_t in, std::size_t units, Activation activation)
{
    LayerSpec l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.units = units;
    l.activation = activation;
    l.weights = Tensor({units, in});
    l.biases = Tensor({units});
    return l;
}

std::size_t NetworkSpec::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.parameter_count();
    }
    return n;
}

// ---------------------------------------------------------------------------
// Shape chain and validation

Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index)
{
    const auto fail = [&](const std::string& msg) {
        throw FormatError("layer " + std::to_string(index) + " (" + layer.name + "): " + msg, index);
    };
    switch (layer.kind) {
    case LayerKind::Input:
        return input;
    case LayerKind::Conv2D: {
        if (input.size() != 3) {
            fail("Conv2D expects [c,h,w] input, got " + shape_string(input));
        }
        const Shape expect_w{layer.units, input[0], layer.kernel[0], layer.kernel[1]};
        if (layer.weights.shape() != expect_w) {
            fail("weight shape " + shape_string(layer.weights.shape()) + " != " + shape_string(expect_w));
        }
        if (layer.biases.shape() != Shape{layer.units}) {
            fail("bias shape " + shape_string(layer.biases.shape()) + " != [" + std::to_string(layer.units) + "]");
        }
        try {
            const auto gy = axis_geometry(input[1], layer.kernel[0], layer.stride[0], layer.padding);
            const auto gx = axis_geometry(input[2], layer.kernel[1], layer.stride[1], layer.padding);
            return {layer.units, gy.out, gx.out};
        } catch (const FormatError&) {
            throw;
        } catch (const Error& e) {
            fail(e.what());
        }
        break;
    }
    case LayerKind::AvgPool2D:
    case LayerKind::MaxPool2D: {
        if (input.size() != 3) {
            fail("pooling expects [c,h,w] input, got " + shape_string(input));
        }
        if (!layer.weights.empty() || !layer.biases.empty()) {
            fail("pooling layers carry no parameters");
        }
        try {
            const auto gy = axis_geometry(input[1], layer.kernel[0], layer.stride[0], layer.padding);
            const auto gx = axis_geometry(input[2], layer.kernel[1], layer.stride[1], layer.padding);
            return {input[0], gy.out, gx.out};
        } catch (const FormatError&) {
            throw;
        } catch (const Error& e) {
            fail(e.what());
        }
        break;
    }
    case LayerKind::Flatten:
        return {shape_size(input)};
    case LayerKind::Dense: {
        if (input.size() != 1) {
            fail("Dense expects a flat input, got " + shape_string(input));
        }
        const Shape expect_w{layer.units, input[0]};
        if (layer.weights.shape() != expect_w) {
            fail("weight shape " + shape_string(layer.weights.shape()) + " != " + shape_string(expect_w));
        }
        if (layer.biases.shape() != Shape{layer.units}) {
            fail("bias shape " + shape_string(layer.biases.shape()) + " != [" + std::to_string(layer.units) + "]");
        }
        return {layer.units};
    }
    }
    fail("unknown layer kind");
    return {};
}

std::vector<Shape> shape_chain(const NetworkSpec& net)
{
    std::vector<Shape> out;
    out.reserve(net.layers.size());
    Shape current = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        current = layer_output_shape(net.layers[i], current, i);
        out.push_back(current);
    }
    return out;
}

void validate_structure(const NetworkSpec& net)
{
    if (net.input_shape.size() != 3 || shape_size(net.input_shape) == 0) {
        throw FormatError("input_shape must be [channels, height, width], got " + shape_string(net.input_shape), 0);
    }
    if (net.class_count == 0) {
        throw FormatError("class_count must be positive", 0);
    }
    const auto first_real = std::find_if(net.layers.begin(), net.layers.end(),
                                         [](const LayerSpec& l) { return l.kind != LayerKind::Input; });
    if (first_real == net.layers.end()) {
        throw FormatError("network has no layers", 0);
    }
    for (std::size_t i = 1; i < net.layers.size(); ++i) {
        if (net.layers[i].kind == LayerKind::Input) {
            throw FormatError("layer " + std::to_string(i) + ": Input layer may only appear first", i);
        }
    }
    shape_chain(net);
    const auto& last = net.layers.back();
    const std::size_t last_index = net.layers.size() - 1;
    if (last.kind != LayerKind::Dense) {
        throw FormatError("layer " + std::to_string(last_index) + ": final layer must be Dense", last_index);
    }
    if (last.units != net.class_count) {
        throw FormatError("layer " + std::to_string(last_index) + ": final layer has " + std::to_string(last.units) +
                              " units but class_count is " + std::to_string(net.class_count),
                          last_index);
    }
}

std::vector<Violation> validate_convertible(const NetworkSpec& net)
{
    std::vector<Violation> out;
    try {
        validate_structure(net);
    } catch (const FormatError& e) {
        const std::size_t i = std::min(e.location(), net.layers.empty() ? 0 : net.layers.size() - 1);
        out.push_back({i, net.layers.empty() ? "" : net.layers[i].name, e.what()});
        return out;
    }
    const std::size_t last = net.layers.size() - 1;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& l = net.layers[i];
        if (l.kind == LayerKind::MaxPool2D) {
            out.push_back({i, l.name, "max pooling is not convertible; use AvgPool2D"});
            continue;
        }
        if (!l.has_parameters()) {
            continue;
        }
        if (l.activation == Activation::Tanh) {
            out.push_back({i, l.name, "tanh activation is not convertible; use relu"});
        } else if (i == last && l.activation != Activation::Softmax) {
            out.push_back({i, l.name, "output layer must use softmax, got " + to_string(l.activation)});
        } else if (i != last && l.activation == Activation::Softmax) {
            out.push_back({i, l.name, "softmax is only allowed on the output layer"});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// SNNC serialization

namespace {

json dims(const std::array<std::size_t, 2>& a) { return json::array({a[0], a[1]}); }

std::array<std::size_t, 2> dims_from(const json& j)
{
    if (!j.is_array() || j.size() != 2) {
        throw Error("expected a two-element array");
    }
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace

std::vector<std::uint8_t> serialize_network(const NetworkSpec& net)
{
    validate_structure(net);
    detail::Container c;
    json layers = json::array();
    for (const auto& l : net.layers) {
        json jl;
        jl["kind"] = to_string(l.kind);
        jl["name"] = l.name;
        json hp = json::object();
        switch (l.kind) {
        case LayerKind::Conv2D:
            hp["out_channels"] = l.units;
            hp["kernel"] = dims(l.kernel);
            hp["stride"] = dims(l.stride);
            hp["padding"] = to_string(l.padding);
            break;
        case LayerKind::AvgPool2D:
        case LayerKind::MaxPool2D:
            hp["pool"] = dims(l.kernel);
            hp["stride"] = dims(l.stride);
            hp["padding"] = to_string(l.padding);
            break;
        case LayerKind::Dense:
            hp["units"] = l.units;
            break;
        default:
            break;
        }
        jl["hyperparameters"] = hp;
        jl["activation"] = to_string(l.activation);
        std::uint64_t woff = 0, wlen = 0, boff = 0, blen = 0;
        if (l.has_parameters()) {
            std::tie(woff, wlen) = detail::append_tensor(c.blob, l.weights);
            std::tie(boff, blen) = detail::append_tensor(c.blob, l.biases);
            jl["weight_shape"] = l.weights.shape();
        }
        jl["weight_offset"] = woff;
        jl["weight_len"] = wlen;
        jl["bias_offset"] = boff;
        jl["bias_len"] = blen;
        layers.push_back(jl);
    }
    c.manifest["format"] = "network";
    c.manifest["name"] = net.name;
    c.manifest["input_shape"] = net.input_shape;
    c.manifest["class_count"] = net.class_count;
    c.manifest["metadata"] = net.metadata;
    c.manifest["layers"] = layers;
    c.manifest["blob_len"] = c.blob.size();
    return detail::encode_container(c);
}

NetworkSpec parse_network(std::span<const std::uint8_t> bytes)
{
    const auto c = detail::decode_container(bytes);
    const auto& m = c.manifest;
    NetworkSpec net;
    try {
        if (m.value("format", std::string{"network"}) != "network") {
            throw FormatError("container holds a '" + m.value("format", std::string{}) + "', not a network", 16);
        }
        net.name = m.at("name").get<std::string>();
        net.input_shape = m.at("input_shape").get<Shape>();
        net.class_count = m.at("class_count").get<std::size_t>();
        if (m.contains("metadata")) {
            net.metadata = m.at("metadata").get<std::map<std::string, std::string>>();
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what(), 16);
    }
    const auto& layers = m.value("layers", json::array());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& jl = layers[i];
        LayerSpec l;
        try {
            l.name = jl.value("name", std::string{});
            l.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
            l.activation = activation_from_string(jl.value("activation", std::string{"none"}));
            const auto& hp = jl.value("hyperparameters", json::object());
            switch (l.kind) {
            case LayerKind::Conv2D:
                l.units = hp.at("out_channels").get<std::size_t>();
                l.kernel = dims_from(hp.at("kernel"));
                l.stride = dims_from(hp.at("stride"));
                l.padding = padding_from_string(hp.at("padding").get<std::string>());
                break;
            case LayerKind::AvgPool2D:
            case LayerKind::MaxPool2D:
                l.kernel = dims_from(hp.at("pool"));
                l.stride = dims_from(hp.at("stride"));
                l.padding = padding_from_string(hp.at("padding").get<std::string>());
                break;
            case LayerKind::Dense:
                l.units = hp.at("units").get<std::size_t>();
                break;
            default:
                break;
            }
            if (l.has_parameters()) {
                const auto wshape = jl.at("weight_shape").get<Shape>();
                l.weights = detail::read_tensor(c.blob, jl.at("weight_offset").get<std::uint64_t>(),
                                                jl.at("weight_len").get<std::uint64_t>(), wshape, c.blob_base);
                l.biases = detail::read_tensor(c.blob, jl.at("bias_offset").get<std::uint64_t>(),
                                               jl.at("bias_len").get<std::uint64_t>(), {l.units}, c.blob_base);
            }
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception& e) {
            throw FormatError("layer " + std::to_string(i) + " (" + l.name + "): " + e.what(), i);
        }
        net.layers.push_back(std::move(l));
    }
    validate_structure(net);
    return net;
}

std::vector<std::uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("write failed for " + path);
    }
}

NetworkSpec load_network(const std::string& path) { return parse_network(read_file(path)); }

void save_network(const NetworkSpec& net, const std::string& path) { write_file(path, serialize_network(net)); }

// ---------------------------------------------------------------------------
// VGG-9

NetworkSpec build_vgg9_skeleton(std::size_t class_count)
{
    if (class_count != 10 && class_count != 24) {
        throw Error("VGG-9 is defined for 10 or 24 classes, got " + std::to_string(class_count));
    }
    NetworkSpec net;
    net.name = class_count == 10 ? "vgg9-10" : "vgg9-24";
    net.input_shape = {1, 28, 28};
    net.class_count = class_count;
    net.layers.push_back(LayerSpec::input());
    const std::array<std::size_t, 6> filters{6, 16, 32, 32, 48, 48};
    std::size_t channels = 1;
    for (std::size_t i = 0; i < filters.size(); ++i) {
        const auto s = std::to_string(i + 1);
        net.layers.push_back(
            LayerSpec::conv2d("conv" + s, channels, filters[i], {3, 3}, {1, 1}, Padding::Same, Activation::Relu));
        net.layers.push_back(LayerSpec::avg_pool("pool" + s, {2, 2}, {2, 2}, Padding::Same));
        channels = filters[i];
    }
    net.layers.push_back(LayerSpec::flatten());
    // 28 -> 14 -> 7 -> 4 -> 2 -> 1 -> 1 leaves a 48-wide feature vector.
    net.layers.push_back(LayerSpec::dense("fc1", channels, 120, Activation::Relu));
    net.layers.push_back(LayerSpec::dense("fc2", 120, 84, Activation::Relu));
    net.layers.push_back(LayerSpec::dense("output", 84, class_count, Activation::Softmax));
    validate_structure(net);
    return net;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t off)
{
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

struct IdxHeader {
    std::uint8_t dtype = 0;
    Shape dims;
    std::size_t data_offset = 0;
};

IdxHeader read_idx_header(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4) {
        throw FormatError("truncated IDX header", bytes.size());
    }
    if (bytes[0] != 0 || bytes[1] != 0) {
        throw FormatError("IDX magic must start with two zero bytes", 0);
    }
    IdxHeader h;
    h.dtype = bytes[2];
    const std::size_t rank = bytes[3];
    if (rank == 0) {
        throw FormatError("IDX rank must be positive", 3);
    }
    if (bytes.size() < 4 + 4 * rank) {
        throw FormatError("truncated IDX dimensions", bytes.size());
    }
    for (std::size_t i = 0; i < rank; ++i) {
        const auto d = be32(bytes, 4 + 4 * i);
        if (d == 0) {
            throw FormatError("IDX dimension " + std::to_string(i) + " is zero", 4 + 4 * i);
        }
        h.dims.push_back(d);
    }
    h.data_offset = 4 + 4 * rank;
    std::size_t elem = 0;
    switch (h.dtype) {
    case 0x08: elem = 1; break;
    case 0x0D: elem = 4; break;
    default:
        throw FormatError("unsupported IDX dtype code 0x" + [&] {
            const char* hex = "0123456789ABCDEF";
            return std::string{hex[h.dtype >> 4], hex[h.dtype & 0xF]};
        }(), 2);
    }
    const std::size_t need = shape_size(h.dims) * elem;
    if (bytes.size() - h.data_offset < need) {
        throw FormatError("truncated IDX payload: need " + std::to_string(need) + " bytes, have " +
                              std::to_string(bytes.size() - h.data_offset),
                          bytes.size());
    }
    return h;
}

}  // namespace

Tensor parse_idx(std::span<const std::uint8_t> bytes)
{
    const auto h = read_idx_header(bytes);
    std::vector<float> values(shape_size(h.dims));
    if (h.dtype == 0x08) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = static_cast<float>(bytes[h.data_offset + i]) / 255.0f;
        }
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = std::bit_cast<float>(be32(bytes, h.data_offset + 4 * i));
        }
    }
    return Tensor(h.dims, std::move(values));
}

std::vector<std::uint32_t> parse_idx_labels(std::span<const std::uint8_t> bytes)
{
    const auto h = read_idx_header(bytes);
    if (h.dtype != 0x08 || h.dims.size() != 1) {
        throw FormatError("label files must be rank-1 unsigned bytes", 2);
    }
    return {bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
            bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset + h.dims[0])};
}

std::vector<std::uint8_t> encode_idx_u8(const Shape& shape, std::span<const std::uint8_t> values)
{
    if (shape.empty() || shape.size() > 255 || shape_size(shape) != values.size()) {
        throw Error("IDX shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) + " values");
    }
    std::vector<std::uint8_t> out{0, 0, 0x08, static_cast<std::uint8_t>(shape.size())};
    for (auto d : shape) {
        const auto v = static_cast<std::uint32_t>(d);
        out.insert(out.end(), {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
    }
    out.insert(out.end(), values.begin(), values.end());
    return out;
}

// ---------------------------------------------------------------------------
// LabeledDataset

Shape LabeledDataset::image_shape() const { return {images.shape()[1], images.shape()[2], images.shape()[3]}; }

Tensor LabeledDataset::image(std::size_t i) const
{
    const auto shape = image_shape();
    const std::size_t n = shape_size(shape);
    const auto first = images.values().begin() + static_cast<std::ptrdiff_t>(i * n);
    return Tensor(shape, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(n)));
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const
{
    if (indices.empty()) {
        throw Error("cannot select an empty subset");
    }
    const auto shape = image_shape();
    const std::size_t n = shape_size(shape);
    std::vector<float> data;
    data.reserve(indices.size() * n);
    LabeledDataset out;
    for (auto i : indices) {
        if (i >= size()) {
            throw Error("dataset index " + std::to_string(i) + " out of range");
        }
        const auto first = images.values().begin() + static_cast<std::ptrdiff_t>(i * n);
        data.insert(data.end(), first, first + static_cast<std::ptrdiff_t>(n));
        out.labels.push_back(labels[i]);
    }
    out.images = Tensor({indices.size(), shape[0], shape[1], shape[2]}, std::move(data));
    return out;
}

LabeledDataset LabeledDataset::head(std::size_t n) const
{
    std::vector<std::size_t> idx(std::min(n, size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    return select(idx);
}

void validate_dataset(const LabeledDataset& data, std::size_t class_count)
{
    if (data.images.rank() != 4 || data.images.shape()[0] != data.labels.size()) {
        throw Error("dataset must hold [n,1,h,w] images with one label each");
    }
    for (float v : data.images.data()) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw Error("pixel value outside [0,1]");
        }
    }
    for (auto l : data.labels) {
        if (l >= class_count) {
            throw Error("label " + std::to_string(l) + " outside [0," + std::to_string(class_count) + ")");
        }
    }
}

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path)
{
    auto images = parse_idx(read_file(images_path));
    LabeledDataset d;
    d.labels = parse_idx_labels(read_file(labels_path));
    if (images.rank() != 3) {
        throw Error(images_path + ": expected rank-3 image file, got " + shape_string(images.shape()));
    }
    const auto& s = images.shape();
    d.images = images.reshaped({s[0], 1, s[1], s[2]});
    if (d.images.shape()[0] != d.labels.size()) {
        throw Error("image count " + std::to_string(s[0]) + " != label count " + std::to_string(d.labels.size()));
    }
    return d;
}

void save_idx_dataset(const LabeledDataset& data, const std::string& images_path, const std::string& labels_path)
{
    const auto& s = data.images.shape();
    if (s.size() != 4 || s[1] != 1) {
        throw Error("only single-channel datasets can be written as IDX");
    }
    std::vector<std::uint8_t> pixels(data.images.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(data.images[i], 0.0f, 1.0f) * 255.0f));
    }
    write_file(images_path, encode_idx_u8({s[0], s[2], s[3]}, pixels));
    std::vector<std::uint8_t> labels(data.labels.begin(), data.labels.end());
    write_file(labels_path, encode_idx_u8({labels.size()}, labels));
}

}  // namespace snnport
