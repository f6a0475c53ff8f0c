#pragma once

// Network interchange types, the SNNC container and IDX dataset ingestion.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "snnport/tensor.hpp"

namespace snnport {

enum class LayerKind { Input, Conv2D, AvgPool2D, MaxPool2D, Flatten, Dense };
enum class Activation { None, Relu, Softmax, Tanh };
enum class Padding { Same, Valid };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);
std::string to_string(Padding pad);
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
Padding padding_from_string(const std::string& s);

/// Per-axis window placement for a pooled/convolved dimension.
struct AxisGeometry {
    std::size_t out = 0;
    std::size_t pad_before = 0;
};

/// Output length and leading pad along one axis. Same padding splits the
/// total pad with the extra cell after the data.
AxisGeometry axis_geometry(std::size_t in, std::size_t window, std::size_t stride, Padding pad);

struct LayerSpec {
    LayerKind kind = LayerKind::Input;
    std::string name;
    std::size_t units = 0;  // Conv2D out_channels, Dense units
    std::array<std::size_t, 2> kernel{0, 0};  // conv kernel or pool window
    std::array<std::size_t, 2> stride{1, 1};
    Padding padding = Padding::Valid;
    Activation activation = Activation::None;
    Tensor weights;  // Conv2D [out, in, kh, kw]; Dense [out, in]
    Tensor biases;   // [out]

    bool has_parameters() const { return kind == LayerKind::Conv2D || kind == LayerKind::Dense; }
    std::size_t parameter_count() const;

    static LayerSpec input(const std::string& name = "input");
    static LayerSpec conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
                            std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride,
                            Padding padding, Activation activation);
    static LayerSpec avg_pool(std::string name, std::array<std::size_t, 2> pool,
                              std::array<std::size_t, 2> stride, Padding padding);
    static LayerSpec max_pool(std::string name, std::array<std::size_t, 2> pool,
                              std::array<std::size_t, 2> stride, Padding padding);
    static LayerSpec flatten(std::string name = "flatten");
    static LayerSpec dense(std::string name, std::size_t in, std::size_t units, Activation activation);

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    std::string name;
    Shape input_shape;  // [channels, height, width]
    std::vector<LayerSpec> layers;
    std::size_t class_count = 0;
    std::map<std::string, std::string> metadata;

    std::size_t parameter_count() const;
    bool operator==(const NetworkSpec&) const = default;
};

/// Raised by the container and IDX parsers; carries the byte offset (or
/// layer index) at which decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t location)
        : Error(what + " (at " + std::to_string(location) + ")"), location_(location)
    {
    }
    std::size_t location() const { return location_; }

private:
    std::size_t location_;
};

/// Output shape of `layer` given its input shape; throws on mismatch.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t layer_index);

/// Output shape after every layer (index-aligned with net.layers).
std::vector<Shape> shape_chain(const NetworkSpec& net);

/// Throws FormatError (location = layer index) if the network is
/// structurally invalid: empty, inconsistent shapes, bad parameter tensors,
/// or a final layer that is not Dense with class_count units.
void validate_structure(const NetworkSpec& net);

struct Violation {
    std::size_t layer_index = 0;
    std::string layer_name;
    std::string message;
};

/// Conversion constraints; empty result means the network can be converted.
std::vector<Violation> validate_convertible(const NetworkSpec& net);

std::vector<std::uint8_t> serialize_network(const NetworkSpec& net);
NetworkSpec parse_network(std::span<const std::uint8_t> bytes);

NetworkSpec load_network(const std::string& path);
void save_network(const NetworkSpec& net, const std::string& path);

/// Constrained VGG-9 with zero weights, for 10 or 24 classes.
NetworkSpec build_vgg9_skeleton(std::size_t class_count);

// ---------------------------------------------------------------------------
// IDX files

/// Decodes an IDX file. Unsigned-byte payloads are scaled to [0, 1]; use
/// parse_idx_labels for label files.
Tensor parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint32_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_u8(const Shape& shape, std::span<const std::uint8_t> values);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

struct LabeledDataset {
    Tensor images;  // [n, 1, h, w], values in [0, 1]
    std::vector<std::uint32_t> labels;

    std::size_t size() const { return labels.size(); }
    Shape image_shape() const;
    Tensor image(std::size_t i) const;

    /// Subset in the given index order.
    LabeledDataset select(std::span<const std::size_t> indices) const;
    LabeledDataset head(std::size_t n) const;
};

/// Checks the dataset invariants; throws Error on violation.
void validate_dataset(const LabeledDataset& data, std::size_t class_count);

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);
void save_idx_dataset(const LabeledDataset& data, const std::string& images_path,
                      const std::string& labels_path);

}  // namespace snnport
