// End-to-end acceptance run on the committed fixture weights.
//
// Prints one PASS/FAIL line per criterion. Exit status is 0 once every
// criterion has been evaluated; --strict turns any FAIL into exit status 1.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../common/toy.hpp"
#include "snnport/bench.hpp"
#include "snnport/converter.hpp"
#include "snnport/dnn.hpp"
#include "snnport/edge.hpp"
#include "snnport/energy.hpp"
#include "snnport/optimizer.hpp"
#include "snnport/partitioner.hpp"
#include "snnport/simulator.hpp"

using namespace snnport;

namespace {

// Tolerances.
constexpr double kEnergyTolMj = 0.005;
constexpr double kFidelityPts = 1.5;
constexpr double kPlateauPts = 0.5;
constexpr std::size_t kPlateauFrom = 150;
constexpr double kSelectTolPts = 2.0;
constexpr double kValidationDropPts = 3.0;
constexpr double kMinSopDrop = 0.30;
constexpr double kMinEdgeAccuracyPct = 96.5;
constexpr double kMinEnergyRatio = 3.0;
constexpr std::size_t kMaxCores = 128;

// Sample sizes.
constexpr std::size_t kFidelityImages = 500;
constexpr std::size_t kCurveImages = 300;
constexpr std::size_t kFidelityDuration = 200;
constexpr std::uint64_t kSeed = 0;

const std::string kFixtures = SNNPORT_FIXTURE_DIR;
const std::string kResources = SNNPORT_RESOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct PublishedRow {
    const char* hardware;
    const char* label;
    double power_mw, latency_ms, energy_mj;
};

// Optimized benchmark reference rows.
constexpr PublishedRow kPublished[] = {
    {"NCS2", "ASL", 830.00, 2.27, 1.88},        {"NCS2", "MNIST", 835.00, 2.21, 1.85},
    {"NCS2", "FMNIST", 837.00, 2.20, 1.85},     {"NCS2", "Edge-ASL", 803.00, 2.50, 2.01},
    {"NCS2", "Edge-MNIST", 818.00, 2.25, 1.85}, {"Loihi", "ASL", 54.73, 9.34, 0.51},
    {"Loihi", "MNIST", 63.56, 6.13, 0.39},      {"Loihi", "FMNIST", 66.76, 9.03, 0.60},
    {"Loihi", "Edge-ASL", 50.50, 9.79, 0.49},   {"Loihi", "Edge-MNIST", 53.45, 7.01, 0.37},
};

// Published per-layer parameter counts, 10-class head.
constexpr std::size_t kLayerParams[] = {60, 880, 4640, 9248, 13872, 20784, 5880, 10164, 850};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared state: each heavy artifact is built once.

struct Runs {
    LabeledDataset calib, test;
    NetworkSpec mnist_dnn, edge_dnn;
    SpikingNetwork mnist_snn, edge_snn;
    LabeledDataset edge_calib, edge_test;
    sim::CurveResult mnist_curve, edge_curve;
    opt::OptimizationResult mnist_opt, edge_opt;
    bench::RunSummary mnist_summary, edge_summary;
    bool curves_ready = false;
};

Runs& runs()
{
    static Runs r = [] {
        Runs x;
        x.calib = load_idx_dataset(kFixtures + "/mnist_calib-images.idx", kFixtures + "/mnist_calib-labels.idx");
        x.test = load_idx_dataset(kFixtures + "/mnist_test-images.idx", kFixtures + "/mnist_test-labels.idx");
        x.mnist_dnn = load_network(kFixtures + "/mnist_vgg9.snnc");
        x.edge_dnn = load_network(kFixtures + "/edge_mnist_vgg9.snnc");
        x.mnist_snn = convert::convert(x.mnist_dnn, x.calib).snn;
        x.edge_calib = edge::canny_dataset(x.calib);
        x.edge_test = edge::canny_dataset(x.test.head(kCurveImages));
        x.edge_snn = convert::convert(x.edge_dnn, x.edge_calib).snn;
        return x;
    }();
    return r;
}

sim::EncodingConfig rate_encoding()
{
    sim::EncodingConfig e;
    e.mode = sim::EncodingMode::StochasticRate;
    e.seed = kSeed;
    return e;
}

opt::SweepConfig sweep_config()
{
    opt::SweepConfig cfg;
    cfg.durations = opt::default_durations();
    cfg.tolerance_points = kSelectTolPts;
    cfg.seed = kSeed;
    return cfg;
}

Runs& curves()
{
    auto& r = runs();
    if (!r.curves_ready) {
        const auto cfg = sweep_config();
        const auto subset = r.test.head(kCurveImages);
        r.mnist_curve = sim::accuracy_curve(sim::Simulator(r.mnist_snn), subset, cfg.durations, rate_encoding());
        r.edge_curve = sim::accuracy_curve(sim::Simulator(r.edge_snn), r.edge_test, cfg.durations, rate_encoding());
        r.mnist_opt = opt::optimize(r.mnist_curve, cfg);
        r.edge_opt = opt::optimize(r.edge_curve, cfg);
        r.mnist_summary = bench::summarize(r.mnist_curve, r.mnist_opt, "MNIST", "original", edge::mean_sparsity(subset));
        r.edge_summary = bench::summarize(r.edge_curve, r.edge_opt, "MNIST", "edge", edge::mean_sparsity(r.edge_test));
        r.curves_ready = true;
    }
    return r;
}

// ---------------------------------------------------------------------------

Outcome energy_arithmetic()
{
    std::size_t ok = 0;
    std::string bad;
    double worst = 0.0;
    for (const auto& row : kPublished) {
        const double err = std::abs(energy::energy_mj(row.power_mw, row.latency_ms) - row.energy_mj);
        worst = std::max(worst, err);
        if (err <= kEnergyTolMj + 1e-12) {
            ++ok;
        } else {
            bad += fmt(" %s/%s %.2fx%.2f=%.4f vs %.2f;", row.hardware, row.label, row.power_mw, row.latency_ms,
                       energy::energy_mj(row.power_mw, row.latency_ms), row.energy_mj);
        }
    }
    // The bundled reference table must carry the same numbers.
    const auto tables = energy::load_reference(kResources + "/reference_measurements.json");
    bool bundled = tables.optimized.size() == std::size(kPublished);
    for (const auto& row : tables.optimized) {
        bundled = bundled && std::any_of(std::begin(kPublished), std::end(kPublished), [&](const PublishedRow& p) {
                      return row.hardware == p.hardware && row.label() == p.label && row.power_mw == p.power_mw &&
                             row.latency_ms == p.latency_ms && row.energy_mj == p.energy_mj;
                  });
    }
    return {ok == std::size(kPublished) && bundled,
            fmt("%zu/%zu rows within %.3f mJ, worst %.4f", ok, std::size(kPublished), kEnergyTolMj, worst) +
                (bundled ? "" : ", bundled table differs") + (bad.empty() ? "" : ";" + bad)};
}

Outcome architecture()
{
    const auto net = build_vgg9_skeleton(10);
    std::vector<std::size_t> got;
    for (const auto& l : net.layers) {
        if (l.has_parameters()) {
            got.push_back(l.parameter_count());
        }
    }
    const bool layers = got == std::vector<std::size_t>(std::begin(kLayerParams), std::end(kLayerParams));
    const auto t10 = build_vgg9_skeleton(10).parameter_count();
    const auto t24 = build_vgg9_skeleton(24).parameter_count();
    return {layers && t10 == 66378 && t24 == 67568,
            fmt("per-layer %s, totals %zu / %zu", layers ? "match" : "differ", t10, t24)};
}

Outcome conversion_fidelity()
{
    auto& r = runs();
    const auto subset = r.test.head(kFidelityImages);
    const double dnn = 100.0 * dnn::evaluate(r.mnist_dnn, subset);
    const auto curve = sim::accuracy_curve(sim::Simulator(r.mnist_snn), subset, {kFidelityDuration}, rate_encoding());
    const double snn = 100.0 * curve.accuracy[0];
    return {std::abs(snn - dnn) <= kFidelityPts,
            fmt("C-DNN %.2f%%, SNN %.2f%% at T=%zu on %zu images, gap %.2f pt (limit %.1f)", dnn, snn,
                kFidelityDuration, kFidelityImages, std::abs(snn - dnn), kFidelityPts)};
}

Outcome plateau()
{
    const auto& c = curves().mnist_curve;
    const double best = *std::max_element(c.accuracy.begin(), c.accuracy.end());
    double worst_gap = 0.0;
    for (std::size_t d = 0; d < c.durations.size(); ++d) {
        if (c.durations[d] >= kPlateauFrom) {
            worst_gap = std::max(worst_gap, 100.0 * (best - c.accuracy[d]));
        }
    }
    return {worst_gap <= kPlateauPts + 1e-9, fmt("max %.2f%%, largest shortfall for T>=%zu is %.2f pt (limit %.1f)",
                                                 100.0 * best, kPlateauFrom, worst_gap, kPlateauPts)};
}

Outcome duration_optimizer()
{
    const auto& r = curves();
    const auto& c = r.mnist_curve;
    const auto folds = opt::split_folds(c.images, kSeed);
    bool ok = folds.size() == r.mnist_opt.folds.size();
    std::string detail;
    for (std::size_t f = 0; ok && f < folds.size(); ++f) {
        // Integer brute force: count correct search images per duration.
        std::vector<std::size_t> hits(c.durations.size(), 0);
        for (auto i : folds[f].search) {
            for (std::size_t d = 0; d < c.durations.size(); ++d) {
                hits[d] += c.is_correct(i, d);
            }
        }
        const std::size_t n = folds[f].search.size();
        const std::size_t best = *std::max_element(hits.begin(), hits.end());
        std::size_t want = 0;
        // acc >= max - 2 pt  <=>  100 * hits >= 100 * best - 2 * n
        while (100 * hits[want] + static_cast<std::size_t>(kSelectTolPts) * n < 100 * best) {
            ++want;
        }
        const auto& got = r.mnist_opt.folds[f];
        const double floor = 100.0 * got.max_search_accuracy - kValidationDropPts;
        const bool fold_ok = got.chosen_index == want && 100.0 * got.validation_accuracy >= floor - 1e-9;
        ok = ok && fold_ok;
        detail += fmt("%sfold %zu T=%zu (oracle %zu) val %.2f%% vs max %.2f%%", f ? ", " : "", f,
                      got.chosen_duration, c.durations[want], 100.0 * got.validation_accuracy,
                      100.0 * got.max_search_accuracy);
    }
    return {ok, detail + fmt("; recommended %zu ms", r.mnist_opt.recommended_duration)};
}

Outcome sparsification()
{
    const auto& r = curves();
    const auto& o = r.mnist_curve;
    const auto& e = r.edge_curve;
    const std::size_t last = o.durations.size() - 1;  // full presentation, before duration optimization
    const double s_orig = r.mnist_summary.mean_sparsity, s_edge = r.edge_summary.mean_sparsity;
    const double sops_o = o.mean_sops(last), sops_e = e.mean_sops(last);
    const double drop = 1.0 - sops_e / sops_o;
    const auto model = bench::calibrate_on(r.mnist_summary);
    const double wall = static_cast<double>(o.durations[last]);
    const double dyn_o = energy::proxy_power(sops_o, bench::mean_updates(o, last), model, wall).neuro_dynamic;
    const double dyn_e = energy::proxy_power(sops_e, bench::mean_updates(e, last), model, wall).neuro_dynamic;
    const double acc = 100.0 * r.edge_summary.accuracy_at_recommended;
    const bool ok = s_edge < s_orig && drop >= kMinSopDrop && dyn_e < dyn_o && acc >= kMinEdgeAccuracyPct;
    return {ok, fmt("sparsity %.4f -> %.4f, SOPs/image %.3g -> %.3g (drop %.1f%%, need %.0f%%), proxy dynamic "
                    "%.2f -> %.2f mW, Edge-MNIST SNN %.2f%% at %zu ms (need %.1f%%)",
                    s_orig, s_edge, sops_o, sops_e, 100.0 * drop, 100.0 * kMinSopDrop, dyn_o, dyn_e, acc,
                    r.edge_summary.recommended_duration, kMinEdgeAccuracyPct)};
}

Outcome simulator_invariants()
{
    std::vector<std::string> failed;
    auto& r = runs();
    const sim::Simulator real(r.mnist_snn);
    const auto few = r.test.head(24);
    const std::vector<std::size_t> ds{20, 60, 120};
    const auto one = sim::accuracy_curve(real, few, ds, rate_encoding(), 1);
    const auto many = sim::accuracy_curve(real, few, ds, rate_encoding(), 4);
    if (one.predicted != many.predicted || one.sops != many.sops || one.neuron_updates != many.neuron_updates) {
        failed.push_back("worker determinism");
    }
    const auto img = r.test.image(3);
    const auto longer = real.run(img, 120, rate_encoding(), 3);
    const auto shorter = real.run(img, 45, rate_encoding(), 3);
    for (std::size_t t = 1; t <= 45; ++t) {
        const auto a = shorter.snapshot(t), b = longer.snapshot(t);
        if (!std::equal(a.begin(), a.end(), b.begin()) || shorter.sops_at(t) != longer.sops_at(t)) {
            failed.push_back("causality");
            break;
        }
    }
    for (std::uint32_t seed = 0; seed < 8; ++seed) {
        std::mt19937 rng(seed);
        const auto snn = convert::build_snn(toy::three_layer(rng));
        const auto image = toy::random_image({1, 6, 6}, rng);
        auto enc = rate_encoding();
        enc.seed = seed;
        if (sim::Simulator(snn).run(image, 80, enc, seed).sops != toy::naive_simulate(snn, image, 80, enc, seed).sops) {
            failed.push_back("SOP oracle");
            break;
        }
    }
    bool rate_ok = true;
    for (float c : {0.0f, 0.1f, 0.25f, 0.333f, 0.5f, 0.77f, 1.0f}) {
        SpikingNetwork net;
        net.input_shape = {1, 1, 1};
        net.class_count = 1;
        Population p;
        p.kind = PopulationKind::IFDense;
        p.name = "if";
        p.input_shape = {1};
        p.output_shape = {1};
        p.weights = Tensor({1, 1}, {c});
        p.biases = Tensor({1});
        Population out = p;
        out.kind = PopulationKind::Accumulator;
        out.name = "out";
        out.weights = Tensor({1, 1}, {1.0f});
        net.populations = {p, out};
        sim::EncodingConfig analog;
        analog.mode = sim::EncodingMode::Analog;
        for (std::size_t T : {10, 50, 200}) {
            const auto tr = sim::Simulator(net).run(Tensor({1, 1, 1}, {1.0f}), T, analog);
            rate_ok = rate_ok && std::abs(static_cast<double>(tr.layer_spikes[1]) / T - c) <= 1.0 / T + 1e-9;
        }
    }
    if (!rate_ok) {
        failed.push_back("constant-current rate");
    }
    std::string detail = "determinism, causality, SOP oracle, constant-current rate";
    if (!failed.empty()) {
        detail = "failed:";
        for (const auto& f : failed) {
            detail += " " + f;
        }
    }
    return {failed.empty(), detail};
}

Outcome canny_suite()
{
    std::vector<std::string> failed;
    for (float v : {0.0f, 0.2f, 0.5f, 1.0f}) {
        if (edge::sparsity(edge::canny(edge::Image(28, 28, v))) != 0.0) {
            failed.push_back("constant");
            break;
        }
    }
    for (std::size_t at : {7, 14, 20}) {
        edge::Image step(28, 28);
        for (std::size_t y = 0; y < 28; ++y) {
            for (std::size_t x = at; x < 28; ++x) {
                step.at(y, x) = 1.0f;
            }
        }
        const auto e = edge::canny(step);
        for (std::size_t y = 0; y < 28; ++y) {
            std::size_t n = 0;
            for (std::size_t x = 0; x < 28; ++x) {
                n += e.at(y, x) != 0.0f;
            }
            if (n != 1) {
                failed.push_back(fmt("step at %zu row %zu has %zu pixels", at, y, n));
                break;
            }
        }
    }
    std::mt19937 rng(17);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::size_t violations = 0;
    for (int i = 0; i < 100; ++i) {
        edge::Image img(28, 28);
        for (auto& p : img.pixels) {
            p = u(rng) < 0.6f ? 0.0f : u(rng);
        }
        const double lo = 0.05 + 0.1 * u(rng), hi = lo + 0.05 + 0.2 * u(rng);
        const auto loose = edge::canny(img, {1.0, 5, lo, hi});
        const auto tight = edge::canny(img, {1.0, 5, lo + 0.05, hi + 0.1});
        for (std::size_t k = 0; k < img.pixels.size(); ++k) {
            violations += tight.pixels[k] != 0.0f && loose.pixels[k] == 0.0f;
        }
    }
    if (violations != 0) {
        failed.push_back(fmt("monotonicity (%zu pixels)", violations));
    }
    std::string detail = "constant, step line, threshold monotonicity over 100 images";
    if (!failed.empty()) {
        detail = "failed:";
        for (const auto& f : failed) {
            detail += " " + f + ";";
        }
    }
    return {failed.empty(), detail};
}

Outcome partitioner()
{
    const auto& snn = runs().mnist_snn;
    const auto plan = partition::partition(snn);
    bool covered = plan.populations.size() == snn.populations.size();
    bool within = true;
    std::size_t cores = 0;
    for (std::size_t p = 0; covered && p < snn.populations.size(); ++p) {
        std::size_t next = 0;
        for (const auto& s : plan.populations[p].cores) {
            covered = covered && s.begin == next && s.end > s.begin;
            next = s.end;
            within = within && partition::core_cost(snn, p, s.begin, s.end).fits(plan.constraints);
            ++cores;
        }
        covered = covered && next == snn.populations[p].neuron_count();
    }
    const auto problems = partition::validate_plan(snn, plan);
    return {covered && within && problems.empty() && cores == plan.total_cores && cores <= kMaxCores,
            fmt("%zu cores on %zu chip(s), %s, %s", cores, plan.chips, covered ? "every neuron placed once" : "coverage broken",
                within && problems.empty() ? "all cores within limits" : "limit violations")};
}

Outcome ratio_report()
{
    const auto& r = curves();
    const auto model = bench::calibrate_on(r.mnist_summary);
    const auto tables = energy::load_reference(kResources + "/reference_measurements.json");
    std::vector<energy::EnergyRow> rows;
    for (const auto& row : tables.optimized) {
        if (row.hardware == "NCS2") {
            rows.push_back(row);
        }
    }
    const auto proxy = bench::proxy_row(r.edge_summary, model);
    rows.push_back(proxy);
    rows.push_back(bench::proxy_row(r.mnist_summary, model));
    const auto ratios = energy::compare_report(rows);
    for (const auto& q : ratios) {
        if (q.variant == "edge" && q.dataset == "MNIST") {
            return {q.energy_ratio >= kMinEnergyRatio,
                    fmt("Edge-MNIST proxy %.2f mW x %.2f ms = %.3f mJ, energy ratio %.2fx (need %.1fx)",
                        proxy.power_mw, proxy.latency_ms, proxy.energy_mj, q.energy_ratio, kMinEnergyRatio)};
        }
    }
    return {false, "no Edge-MNIST ratio"};
}

}  // namespace

int main(int argc, char** argv)
{
    const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"energy arithmetic", energy_arithmetic},
        {"architecture reconstruction", architecture},
        {"conversion fidelity", conversion_fidelity},
        {"plateau", plateau},
        {"duration optimizer", duration_optimizer},
        {"sparsification effect", sparsification},
        {"simulator invariants", simulator_invariants},
        {"canny oracles", canny_suite},
        {"partitioner validity", partitioner},
        {"ratio report", ratio_report},
    };
    std::size_t failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2zu %s %-28s %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
    return strict && failures != 0 ? 1 : 0;
}
