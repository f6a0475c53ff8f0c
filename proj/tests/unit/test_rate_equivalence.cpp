#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "snnport/converter.hpp"
#include "snnport/dnn.hpp"
#include "snnport/simulator.hpp"

using namespace snnport;

// Firing rates of a converted network track its normalized activations.
// The comparison is per population: mean |rate - min(a, 1)| over neurons and
// images, since a rate cannot exceed one spike per step.
TEST(RateEquivalence, FixtureNetworkAnalogInput)
{
    const std::string dir = SNNPORT_TEST_FIXTURE_DIR;
    const auto net = load_network(dir + "/mnist_vgg9.snnc");
    const auto calib = load_idx_dataset(dir + "/mnist_calib-images.idx", dir + "/mnist_calib-labels.idx");
    const auto test = load_idx_dataset(dir + "/mnist_test-images.idx", dir + "/mnist_test-labels.idx");
    const auto conv = convert::convert(net, calib);
    const sim::Simulator simulator(conv.snn);
    sim::EncodingConfig cfg;
    cfg.mode = sim::EncodingMode::Analog;
    cfg.record_neuron_counts = true;
    constexpr std::size_t kImages = 100, kT = 200;
    const auto& pops = conv.snn.populations;
    std::vector<double> err(pops.size(), 0.0);
    for (std::size_t i = 0; i < kImages; ++i) {
        dnn::ActivationRecord rec;
        dnn::predict(conv.normalized, test.image(i), rec);
        const auto tr = simulator.run(test.image(i), kT, cfg);
        for (std::size_t p = 0; p + 1 < pops.size(); ++p) {
            const auto& a = rec.layers[pops[p].source_layer];
            const auto& counts = tr.neuron_spike_counts[p + 1];
            ASSERT_EQ(counts.size(), a.size());
            for (std::size_t n = 0; n < a.size(); ++n) {
                const double rate = static_cast<double>(counts[n]) / kT;
                err[p] += std::abs(rate - std::clamp(static_cast<double>(a[n]), 0.0, 1.0)) / a.size();
            }
        }
    }
    for (std::size_t p = 0; p + 1 < pops.size(); ++p) {
        EXPECT_LE(err[p] / kImages, 0.05) << pops[p].name;
    }
}
