#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "snnport/dnn.hpp"

using namespace snnport;
using namespace snnport::dnn;

namespace {

// Direct loop oracle for same-padded stride-1 cross-correlation.
std::vector<float> conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b)
{
    const auto C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    const auto O = w.shape()[0], K = w.shape()[2];
    const int pad = static_cast<int>(K) / 2;
    std::vector<float> out(O * H * W, 0.0f);
    for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t xx = 0; xx < W; ++xx) {
                double acc = b[o];
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t i = 0; i < K; ++i) {
                        for (std::size_t j = 0; j < K; ++j) {
                            const int iy = static_cast<int>(y + i) - pad, ix = static_cast<int>(xx + j) - pad;
                            if (iy < 0 || ix < 0 || iy >= static_cast<int>(H) || ix >= static_cast<int>(W)) {
                                continue;
                            }
                            acc += w[((o * C + c) * K + i) * K + j] * x.at(c, iy, ix);
                        }
                    }
                }
                out[(o * H + y) * W + xx] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Tensor random_tensor(Shape s, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f)
{
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(s);
    for (auto& v : t.data()) {
        v = u(rng);
    }
    return t;
}

}  // namespace

TEST(Conv, PointKernel)
{
    auto l = LayerSpec::conv2d("c", 1, 1, {1, 1}, {1, 1}, Padding::Same, Activation::None);
    l.weights = Tensor({1, 1, 1, 1}, {2});
    l.biases = Tensor({1}, {1});
    const auto y = conv2d_forward(Tensor({1, 1, 1}, {3}), l);
    EXPECT_FLOAT_EQ(y[0], 7.0f);
}

TEST(Conv, OnesWithSamePadding)
{
    auto l = LayerSpec::conv2d("c", 1, 1, {3, 3}, {1, 1}, Padding::Same, Activation::None);
    l.weights = Tensor({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
    const auto y = conv2d_forward(Tensor({1, 3, 3}, std::vector<float>(9, 1.0f)), l);
    EXPECT_FLOAT_EQ(y.at(0, 1, 1), 9.0f);
    EXPECT_FLOAT_EQ(y.at(0, 0, 0), 4.0f);
    EXPECT_FLOAT_EQ(y.at(0, 2, 2), 4.0f);
    EXPECT_FLOAT_EQ(y.at(0, 0, 1), 6.0f);
}

TEST(Conv, MatchesLoopOracle)
{
    std::mt19937 rng(3);
    auto l = LayerSpec::conv2d("c", 3, 4, {3, 3}, {1, 1}, Padding::Same, Activation::None);
    l.weights = random_tensor({4, 3, 3, 3}, rng);
    l.biases = random_tensor({4}, rng);
    const auto x = random_tensor({3, 5, 6}, rng);
    const auto y = conv2d_forward(x, l);
    const auto ref = conv_oracle(x, l.weights, l.biases);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(y[i], ref[i], 1e-4 * (1.0 + std::abs(ref[i])));
    }
}

TEST(Conv, ReluClampsAndShapeMismatchThrows)
{
    auto l = LayerSpec::conv2d("c", 1, 1, {1, 1}, {1, 1}, Padding::Same, Activation::Relu);
    l.weights = Tensor({1, 1, 1, 1}, {1});
    l.biases = Tensor({1}, {0});
    EXPECT_FLOAT_EQ(conv2d_forward(Tensor({1, 1, 1}, {-0.5f}), l)[0], 0.0f);
    EXPECT_THROW(conv2d_forward(Tensor({2, 1, 1}, {1, 1}), l), Error);
}

TEST(Conv, LinearWithoutBiasOrRelu)
{
    std::mt19937 rng(5);
    auto l = LayerSpec::conv2d("c", 2, 3, {3, 3}, {1, 1}, Padding::Same, Activation::None);
    l.weights = random_tensor({3, 2, 3, 3}, rng);
    const auto x = random_tensor({2, 4, 4}, rng);
    Tensor x3 = x;
    for (auto& v : x3.data()) {
        v *= 3.0f;
    }
    const auto a = conv2d_forward(x, l), b = conv2d_forward(x3, l);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(b[i], 3.0f * a[i], 1e-4);
    }
}

TEST(AvgPool, Basics)
{
    const auto l = LayerSpec::avg_pool("p", {2, 2}, {2, 2}, Padding::Same);
    EXPECT_FLOAT_EQ(avgpool_forward(Tensor({1, 2, 2}, {1, 2, 3, 4}), l)[0], 2.5f);
    const auto ones = avgpool_forward(Tensor({1, 7, 7}, std::vector<float>(49, 1.0f)), l);
    EXPECT_EQ(ones.shape(), (Shape{1, 4, 4}));
    for (auto v : ones.values()) {
        EXPECT_FLOAT_EQ(v, 1.0f);
    }
    const auto zeros = avgpool_forward(Tensor({2, 3, 3}), l);
    for (auto v : zeros.values()) {
        EXPECT_FLOAT_EQ(v, 0.0f);
    }
}

TEST(AvgPool, ClippedWindowAveragesValidCells)
{
    // 3x3 input: the last row/column windows hold 2 or 1 valid cells.
    const auto l = LayerSpec::avg_pool("p", {2, 2}, {2, 2}, Padding::Same);
    const auto y = avgpool_forward(Tensor({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), l);
    EXPECT_FLOAT_EQ(y.at(0, 0, 0), 3.0f);
    EXPECT_FLOAT_EQ(y.at(0, 0, 1), 4.5f);
    EXPECT_FLOAT_EQ(y.at(0, 1, 0), 7.5f);
    EXPECT_FLOAT_EQ(y.at(0, 1, 1), 9.0f);
}

TEST(Dense, ReluAndSoftmax)
{
    auto l = LayerSpec::dense("d", 2, 2, Activation::Relu);
    l.weights = Tensor({2, 2}, {1, 0, 0, 1});
    const auto y = dense_forward(Tensor({2}, {1, -1}), l);
    EXPECT_FLOAT_EQ(y[0], 1.0f);
    EXPECT_FLOAT_EQ(y[1], 0.0f);

    Tensor t({2}, {0, 0});
    apply_activation(t, Activation::Softmax);
    EXPECT_FLOAT_EQ(t[0], 0.5f);
    Tensor u({2}, {static_cast<float>(std::log(2.0)), 0.0f});
    apply_activation(u, Activation::Softmax);
    EXPECT_NEAR(u[0], 2.0 / 3.0, 1e-6);
    EXPECT_NEAR(u[1], 1.0 / 3.0, 1e-6);
    EXPECT_THROW(dense_forward(Tensor({3}), l), Error);
}

TEST(Predict, ZeroNetworkTiesToClassZero)
{
    const auto net = build_vgg9_skeleton(10);
    const auto p = predict(net, Tensor({1, 28, 28}, std::vector<float>(784, 0.5f)));
    EXPECT_EQ(p.class_index, 0u);
    EXPECT_THROW(predict(net, Tensor({1, 27, 28})), Error);
}

TEST(Predict, RecordFollowsShapeChainAndBatchMatchesSingle)
{
    std::mt19937 rng(11);
    auto net = build_vgg9_skeleton(10);
    for (auto& l : net.layers) {
        if (l.has_parameters()) {
            l.weights = random_tensor(l.weights.shape(), rng, -0.3f, 0.3f);
            l.biases = random_tensor(l.biases.shape(), rng, -0.1f, 0.1f);
        }
    }
    LabeledDataset data;
    data.images = random_tensor({6, 1, 28, 28}, rng, 0.0f, 1.0f);
    data.labels = {0, 1, 2, 3, 4, 5};
    dnn::ActivationRecord rec;
    dnn::predict(net, data.image(0), rec);
    const auto shapes = shape_chain(net);
    ASSERT_EQ(rec.layers.size(), net.layers.size());
    for (std::size_t i = 1; i < net.layers.size(); ++i) {
        EXPECT_EQ(rec.layers[i].shape(), shapes[i]);
    }
    const auto serial = dnn::predict_batch(net, data, 1);
    const auto parallel = dnn::predict_batch(net, data, 3);
    EXPECT_EQ(serial, parallel);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto p = dnn::predict(net, data.image(i)).class_index;
        EXPECT_EQ(p, serial[i]);
        hits += p == data.labels[i];
    }
    EXPECT_DOUBLE_EQ(dnn::evaluate(net, data), static_cast<double>(hits) / 6.0);
}

TEST(Evaluate, HalfCorrectAndEmpty)
{
    NetworkSpec n;
    n.name = "id";
    n.input_shape = {2, 1, 1};
    n.class_count = 2;
    n.layers = {LayerSpec::input(), LayerSpec::flatten(), LayerSpec::dense("out", 2, 2, Activation::Softmax)};
    n.layers[2].weights = Tensor({2, 2}, {1, 0, 0, 1});
    LabeledDataset d;
    d.images = Tensor({2, 2, 1, 1}, {1, 0, 0, 1});
    d.labels = {0, 0};
    EXPECT_DOUBLE_EQ(dnn::evaluate(n, d), 0.5);
    LabeledDataset empty;
    EXPECT_THROW(dnn::evaluate(n, empty), Error);
}
