#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include <nlohmann/json.hpp>

#include "snnport/model_ir.hpp"

using namespace snnport;

namespace {

NetworkSpec identity_dense()
{
    NetworkSpec n;
    n.name = "identity";
    n.input_shape = {2, 1, 1};
    n.class_count = 2;
    n.layers.push_back(LayerSpec::input());
    n.layers.push_back(LayerSpec::flatten());
    auto d = LayerSpec::dense("out", 2, 2, Activation::Softmax);
    d.weights = Tensor({2, 2}, {1, 0, 0, 1});
    n.layers.push_back(d);
    return n;
}

std::vector<std::uint8_t> idx_bytes(std::uint8_t dtype, std::vector<std::uint32_t> dims, std::vector<std::uint8_t> payload)
{
    std::vector<std::uint8_t> b{0, 0, dtype, static_cast<std::uint8_t>(dims.size())};
    for (auto d : dims) {
        for (int s = 24; s >= 0; s -= 8) {
            b.push_back(static_cast<std::uint8_t>(d >> s));
        }
    }
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
}

}  // namespace

TEST(Tensor, RejectsBadShapesAndValues)
{
    EXPECT_THROW(Tensor({2, 0}), Error);
    EXPECT_THROW(Tensor({2}, {1.0f}), Error);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<float>::quiet_NaN()}), Error);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<float>::infinity()}), Error);
    Tensor t({2, 3});
    EXPECT_EQ(t.size(), 6u);
}

TEST(Snnc, DenseRoundTrip)
{
    const auto n = identity_dense();
    const auto bytes = serialize_network(n);
    EXPECT_EQ(parse_network(bytes), n);
    EXPECT_EQ(serialize_network(parse_network(bytes)), bytes);
}

TEST(Snnc, HeaderLayout)
{
    const auto bytes = serialize_network(identity_dense());
    ASSERT_GT(bytes.size(), 16u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SNNC");
    std::uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    EXPECT_EQ(version, 1u);
    std::uint64_t manifest_len = 0;
    std::memcpy(&manifest_len, bytes.data() + 8, 8);
    const std::string manifest(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(manifest_len));
    const auto j = nlohmann::json::parse(manifest);
    EXPECT_EQ(j["name"], "identity");
    // 2x2 weights + 2 biases as float32
    EXPECT_EQ(bytes.size(), 16 + manifest_len + 6 * 4);
}

TEST(Snnc, Errors)
{
    auto bytes = serialize_network(identity_dense());
    auto bad = bytes;
    std::memcpy(bad.data(), "XXXX", 4);
    try {
        parse_network(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
        EXPECT_EQ(e.location(), 0u);
    }
    bad = bytes;
    bad[4] = 2;
    EXPECT_THROW(parse_network(bad), FormatError);
    bad = bytes;
    bad.pop_back();
    try {
        parse_network(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
    }
    EXPECT_THROW(parse_network(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)), FormatError);
}

TEST(Snnc, UnsupportedKindAndShapeChain)
{
    const auto bytes = serialize_network(identity_dense());
    std::uint64_t mlen = 0;
    std::memcpy(&mlen, bytes.data() + 8, 8);
    auto j = nlohmann::json::parse(std::string(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(mlen)));
    const std::vector<std::uint8_t> blob(bytes.begin() + 16 + static_cast<long>(mlen), bytes.end());
    const auto rebuild = [&](const nlohmann::json& m) {
        const auto text = m.dump();
        std::vector<std::uint8_t> out{'S', 'N', 'N', 'C', 1, 0, 0, 0};
        const std::uint64_t len = text.size();
        for (int i = 0; i < 8; ++i) {
            out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
        }
        out.insert(out.end(), text.begin(), text.end());
        out.insert(out.end(), blob.begin(), blob.end());
        return out;
    };
    auto m = j;
    m["layers"][2]["kind"] = "LSTM";
    try {
        parse_network(rebuild(m));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.location(), 2u);
    }
    m = j;
    m["input_shape"] = {3, 1, 1};
    EXPECT_THROW(parse_network(rebuild(m)), FormatError);
}

TEST(Validation, EmptyNetworkRejectedBeforeSerialization)
{
    NetworkSpec n;
    n.class_count = 10;
    n.input_shape = {1, 28, 28};
    EXPECT_THROW(serialize_network(n), FormatError);
}

TEST(Vgg9, ParameterCountsMatchArchitectureTable)
{
    const std::vector<std::size_t> expected{60, 880, 4640, 9248, 13872, 20784, 5880, 10164, 850};
    const auto net = build_vgg9_skeleton(10);
    std::vector<std::size_t> counts;
    for (const auto& l : net.layers) {
        if (l.has_parameters()) {
            counts.push_back(l.parameter_count());
        }
    }
    EXPECT_EQ(counts, expected);
    EXPECT_EQ(net.parameter_count(), 66378u);
    const auto asl = build_vgg9_skeleton(24);
    EXPECT_EQ(asl.layers.back().parameter_count(), 2040u);
    EXPECT_EQ(asl.parameter_count(), 67568u);
    EXPECT_THROW(build_vgg9_skeleton(7), Error);
}

TEST(Vgg9, FiltersRecoveredFromParameterCounts)
{
    // f * (9 * c_in + 1) = params, solved for f layer by layer.
    const std::vector<std::size_t> params{60, 880, 4640, 9248, 13872, 20784};
    std::size_t c_in = 1;
    std::vector<std::size_t> filters;
    for (auto p : params) {
        ASSERT_EQ(p % (9 * c_in + 1), 0u);
        filters.push_back(p / (9 * c_in + 1));
        c_in = filters.back();
    }
    EXPECT_EQ(filters, (std::vector<std::size_t>{6, 16, 32, 32, 48, 48}));
    const auto net = build_vgg9_skeleton(10);
    std::vector<std::size_t> built;
    for (const auto& l : net.layers) {
        if (l.kind == LayerKind::Conv2D) {
            built.push_back(l.units);
        }
    }
    EXPECT_EQ(built, filters);
}

TEST(Vgg9, ShapeChainEndsAtWidth48)
{
    const auto net = build_vgg9_skeleton(10);
    const auto shapes = shape_chain(net);
    std::vector<std::size_t> side;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].kind == LayerKind::AvgPool2D) {
            side.push_back(shapes[i][1]);
        }
        if (net.layers[i].kind == LayerKind::Flatten) {
            EXPECT_EQ(shapes[i], Shape{48});
        }
    }
    EXPECT_EQ(side, (std::vector<std::size_t>{14, 7, 4, 2, 1, 1}));
    EXPECT_TRUE(validate_convertible(net).empty());
}

TEST(Validation, ConvertibilityViolations)
{
    auto net = build_vgg9_skeleton(10);
    net.layers[2] = LayerSpec::max_pool("pool1", {2, 2}, {2, 2}, Padding::Same);
    auto v = validate_convertible(net);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].layer_name, "pool1");

    net = build_vgg9_skeleton(10);
    for (auto& l : net.layers) {
        if (l.name == "fc1") {
            l.activation = Activation::Tanh;
        }
    }
    v = validate_convertible(net);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].layer_name, "fc1");
}

TEST(Idx, ParsesScaledBytes)
{
    const auto t = parse_idx(idx_bytes(0x08, {1, 2, 2}, {0, 255, 128, 64}));
    EXPECT_EQ(t.shape(), (Shape{1, 2, 2}));
    EXPECT_FLOAT_EQ(t[0], 0.0f);
    EXPECT_FLOAT_EQ(t[1], 1.0f);
    EXPECT_FLOAT_EQ(t[2], 128.0f / 255.0f);
    EXPECT_FLOAT_EQ(t[3], 64.0f / 255.0f);
}

TEST(Idx, LabelsAndErrors)
{
    const auto labels = parse_idx_labels(idx_bytes(0x08, {3}, {1, 7, 2}));
    EXPECT_EQ(labels, (std::vector<std::uint32_t>{1, 7, 2}));
    EXPECT_EQ(parse_idx(idx_bytes(0x08, {3}, {1, 7, 2})).shape(), Shape{3});
    EXPECT_THROW(parse_idx(idx_bytes(0x08, {1, 2, 2}, {0, 255, 128})), FormatError);
    EXPECT_THROW(parse_idx(idx_bytes(0x0B, {2}, {0, 0, 0, 0})), FormatError);
    EXPECT_THROW(parse_idx(std::vector<std::uint8_t>{0, 0, 8}), FormatError);
}

TEST(Idx, EncodeRoundTrip)
{
    const std::vector<std::uint8_t> px{0, 10, 20, 255, 3, 4};
    const auto bytes = encode_idx_u8({1, 2, 3}, px);
    EXPECT_EQ(bytes, idx_bytes(0x08, {1, 2, 3}, px));
}
