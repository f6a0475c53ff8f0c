// snnport: convert, simulate and benchmark spiking versions of small CNNs.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "snnport/bench.hpp"
#include "snnport/converter.hpp"
#include "snnport/dnn.hpp"
#include "snnport/edge.hpp"
#include "snnport/energy.hpp"
#include "snnport/optimizer.hpp"
#include "snnport/partitioner.hpp"
#include "snnport/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace snnport;

namespace {

struct RunConfig {
    std::string dataset = "mnist";
    std::string variant = "original";
    std::string model;
    std::string encoding = "rate";
    std::uint64_t seed = 0;
    std::string durations = "10:200:10";
    double tolerance = 2.0;
    std::size_t subset = 500;
    std::size_t workers = 1;
    std::string out = "out";
    std::string data_dir = bench::default_cache_root();
    std::string images, labels;              // evaluation set override
    std::string calib_images, calib_labels;  // normalization set override
    std::size_t calib_count = 1000;
    double percentile = convert::kDefaultPercentile;
    double canny_sigma = 1.0;
    std::size_t canny_kernel = 5;
    double canny_low = 0.1;
    double canny_high = 0.2;
    std::string calibration;
    bool full = false;

    edge::CannyParams canny() const
    {
        edge::CannyParams p;
        p.sigma = canny_sigma;
        p.kernel_size = canny_kernel;
        p.low = canny_low;
        p.high = canny_high;
        p.validate();
        return p;
    }

    json to_json() const
    {
        return {{"dataset", dataset},
                {"variant", variant},
                {"model", model},
                {"encoding", encoding},
                {"seed", seed},
                {"durations", durations},
                {"tolerance", tolerance},
                {"subset", full ? 0 : subset},
                {"images", images},
                {"labels", labels},
                {"calib_images", calib_images},
                {"calib_count", calib_count},
                {"percentile", percentile},
                {"canny", {canny_sigma, canny_kernel, canny_low, canny_high}},
                {"calibration", calibration}};
    }
};

std::string display_name(const std::string& dataset)
{
    if (dataset == "mnist") {
        return "MNIST";
    }
    if (dataset == "fmnist") {
        return "FMNIST";
    }
    if (dataset == "asl") {
        return "ASL";
    }
    return dataset;
}

void add_common(CLI::App* cmd, RunConfig& c)
{
    cmd->add_option("--dataset", c.dataset, "mnist, fmnist or asl")->check(CLI::IsMember({"mnist", "fmnist", "asl"}));
    cmd->add_option("--variant", c.variant, "original or edge")->check(CLI::IsMember({"original", "edge"}));
    cmd->add_option("--seed", c.seed, "RNG seed for encoding and fold shuffles");
    cmd->add_option("--subset", c.subset, "number of evaluation images (leading images of the set)");
    cmd->add_flag("--full", c.full, "use the whole evaluation set");
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--data-dir", c.data_dir, "dataset cache root");
    cmd->add_option("--images", c.images, "evaluation images (IDX) instead of the cached t10k split");
    cmd->add_option("--labels", c.labels, "evaluation labels (IDX)");
    cmd->add_option("--canny-sigma", c.canny_sigma, "Gaussian sigma for edge preprocessing");
    cmd->add_option("--canny-kernel", c.canny_kernel, "Gaussian kernel size (odd)");
    cmd->add_option("--canny-low", c.canny_low, "low hysteresis threshold (normalized magnitude)");
    cmd->add_option("--canny-high", c.canny_high, "high hysteresis threshold (normalized magnitude)");
}

void add_sim_options(CLI::App* cmd, RunConfig& c)
{
    cmd->add_option("--model", c.model, "spiking SNNC model")->required()->check(CLI::ExistingFile);
    cmd->add_option("--encoding", c.encoding, "rate or analog")->check(CLI::IsMember({"rate", "analog"}));
    cmd->add_option("--durations", c.durations, "start:stop:step or a comma list (ms)");
    cmd->add_option("--tolerance", c.tolerance, "accuracy tolerance in percentage points");
}

LabeledDataset apply_variant(LabeledDataset d, const RunConfig& c)
{
    if (c.variant == "edge") {
        return edge::canny_dataset(d, c.canny(), c.workers);
    }
    return d;
}

LabeledDataset evaluation_set(const RunConfig& c)
{
    LabeledDataset d;
    if (!c.images.empty()) {
        if (c.labels.empty()) {
            throw Error("--images needs --labels");
        }
        d = load_idx_dataset(c.images, c.labels);
    } else {
        d = bench::load_split((fs::path(c.data_dir) / c.dataset).string(), "t10k");
    }
    if (!c.full) {
        if (c.subset == 0 || c.subset > d.size()) {
            throw Error("subset size " + std::to_string(c.subset) + " outside [1, " + std::to_string(d.size()) + "]");
        }
        d = d.head(c.subset);
    }
    return apply_variant(std::move(d), c);
}

LabeledDataset calibration_set(const RunConfig& c)
{
    LabeledDataset d;
    if (!c.calib_images.empty()) {
        if (c.calib_labels.empty()) {
            throw Error("--calib-images needs --calib-labels");
        }
        d = load_idx_dataset(c.calib_images, c.calib_labels);
    } else {
        d = bench::load_split((fs::path(c.data_dir) / c.dataset).string(), "train");
        if (c.calib_count > d.size()) {
            throw Error("calibration count exceeds the training split");
        }
        d = d.head(c.calib_count);
    }
    return apply_variant(std::move(d), c);
}

sim::EncodingConfig encoding(const RunConfig& c)
{
    sim::EncodingConfig e;
    e.mode = sim::encoding_mode_from_string(c.encoding);
    e.seed = c.seed;
    return e;
}

opt::SweepConfig sweep_config(const RunConfig& c)
{
    opt::SweepConfig s;
    s.durations = opt::parse_durations(c.durations);
    s.tolerance_points = c.tolerance;
    s.seed = c.seed;
    s.validate();
    return s;
}

json provenance(const RunConfig& c, const std::string& command)
{
    const json cfg = c.to_json();
    return {{"command", command}, {"config", cfg}, {"config_hash", bench::config_hash(cfg)}};
}

std::string out_path(const RunConfig& c, const std::string& file)
{
    fs::create_directories(c.out);
    return (fs::path(c.out) / file).string();
}

// ---------------------------------------------------------------------------

int cmd_fetch(const RunConfig& c, const std::optional<std::string>& mirror)
{
    const auto r = bench::fetch_dataset(c.dataset, c.data_dir, mirror);
    bench::verify_cache(r.directory);
    std::cout << c.dataset << ": " << r.downloaded << " fetched, " << r.cached << " already cached in " << r.directory
              << "\n";
    return 0;
}

int cmd_convert(const RunConfig& c, const std::string& output)
{
    const auto net = load_network(c.model);
    const auto violations = validate_convertible(net);
    if (!violations.empty()) {
        std::cerr << "model is not convertible:\n";
        for (const auto& v : violations) {
            std::cerr << "  layer " << v.layer_index << " (" << v.layer_name << "): " << v.message << "\n";
        }
        return 2;
    }
    const auto calib = calibration_set(c);
    const auto conv = convert::convert(net, calib, c.percentile, c.workers);
    const std::string path = output.empty() ? out_path(c, "snn.snnc") : output;
    save_snn(conv.snn, path);

    json j = provenance(c, "convert");
    j["output"] = path;
    j["populations"] = conv.snn.populations.size();
    j["neurons"] = conv.snn.neuron_count();
    j["warnings"] = conv.scales.warnings;
    std::cout << "percentile " << c.percentile << " over " << calib.size() << " calibration images\n";
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (conv.scales.measured[l]) {
            j["lambda"][net.layers[l].name] = conv.scales.lambda[l];
            std::printf("  %-8s lambda %.6g\n", net.layers[l].name.c_str(), conv.scales.lambda[l]);
        }
    }
    for (const auto& w : conv.scales.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    bench::write_json_file(out_path(c, "normalization.json"), j);
    std::cout << "wrote " << path << " (" << conv.snn.populations.size() << " populations, " << conv.snn.neuron_count()
              << " neurons)\n";
    return 0;
}

int cmd_edge(const RunConfig& c)
{
    auto cfg = c;
    cfg.variant = "original";
    const auto raw = evaluation_set(cfg);
    const auto edges = edge::canny_dataset(raw, c.canny(), c.workers);
    save_idx_dataset(edges, out_path(c, "edge-images.idx"), out_path(c, "edge-labels.idx"));
    json j = provenance(c, "edge");
    j["images"] = raw.size();
    j["mean_sparsity_original"] = edge::mean_sparsity(raw);
    j["mean_sparsity_edge"] = edge::mean_sparsity(edges);
    bench::write_json_file(out_path(c, "edge.json"), j);
    std::printf("sparsity (nonzero fraction) over %zu images: original %.4f, edge %.4f\n", raw.size(),
                j["mean_sparsity_original"].get<double>(), j["mean_sparsity_edge"].get<double>());
    return 0;
}

int cmd_evaluate(const RunConfig& c)
{
    const auto net = load_network(c.model);
    const auto data = evaluation_set(c);
    const double acc = dnn::evaluate(net, data, c.workers);
    json j = provenance(c, "evaluate");
    j["accuracy"] = acc;
    j["images"] = data.size();
    bench::write_json_file(out_path(c, "evaluate.json"), j);
    std::printf("%s accuracy on %zu images: %.2f%%\n", net.name.c_str(), data.size(), 100.0 * acc);
    return 0;
}

int cmd_simulate(const RunConfig& c, std::size_t duration, const std::string& trace_path)
{
    sim::Simulator simulator(load_snn(c.model));
    const auto data = evaluation_set(c);
    const auto enc = encoding(c);
    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) {
            throw Error("cannot write " + trace_path);
        }
    }
    std::size_t hits = 0;
    std::uint64_t sops = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto tr = simulator.run(data.image(i), duration, enc, i);
        hits += sim::classify(tr) == data.labels[i] ? 1 : 0;
        sops += tr.sops;
        if (trace) {
            trace << sim::trace_json_line(tr, i, data.labels[i]) << "\n";
        }
    }
    std::printf("accuracy %.2f%% over %zu images at %zu ms, mean SOPs %.0f\n",
                100.0 * static_cast<double>(hits) / static_cast<double>(data.size()), data.size(), duration,
                static_cast<double>(sops) / static_cast<double>(data.size()));
    return 0;
}

int cmd_sweep(const RunConfig& c)
{
    sim::Simulator simulator(load_snn(c.model));
    const auto data = evaluation_set(c);
    const auto sweep = sweep_config(c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto curve = sim::accuracy_curve(simulator, data, sweep.durations, encoding(c), c.workers);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json j = provenance(c, "sweep");
    j["dataset"] = display_name(c.dataset);
    j["variant"] = c.variant;
    j["mean_sparsity"] = edge::mean_sparsity(data);
    j["seconds"] = seconds;
    j["curve"] = bench::curve_to_json(curve);
    bench::write_json_file(out_path(c, "sweep.json"), j);

    std::ostringstream text;
    text << "duration_ms accuracy_% mean_sops\n";
    for (std::size_t d = 0; d < curve.durations.size(); ++d) {
        char line[96];
        std::snprintf(line, sizeof line, "%11zu %10.2f %12.0f\n", curve.durations[d], 100.0 * curve.accuracy[d],
                      curve.mean_sops(d));
        text << line;
    }
    bench::write_text_file(out_path(c, "sweep.txt"), text.str());
    std::cout << text.str();
    return 0;
}

int cmd_optimize(const RunConfig& c, const std::string& sweep_file)
{
    json sweep_json;
    sim::CurveResult curve;
    const auto sweep = sweep_config(c);
    if (!sweep_file.empty()) {
        sweep_json = bench::read_json_file(sweep_file);
        curve = bench::curve_from_json(sweep_json.at("curve"));
    } else {
        if (c.model.empty()) {
            throw Error("optimize needs --sweep FILE or --model FILE");
        }
        sim::Simulator simulator(load_snn(c.model));
        const auto data = evaluation_set(c);
        curve = sim::accuracy_curve(simulator, data, sweep.durations, encoding(c), c.workers);
        sweep_json["dataset"] = display_name(c.dataset);
        sweep_json["variant"] = c.variant;
        sweep_json["mean_sparsity"] = edge::mean_sparsity(data);
        sweep_json["curve"] = bench::curve_to_json(curve);
        bench::write_json_file(out_path(c, "sweep.json"), sweep_json);
    }
    auto cfg = sweep;
    cfg.durations = curve.durations;
    const auto result = opt::optimize(curve, cfg);
    const auto summary = bench::summarize(curve, result, sweep_json.value("dataset", display_name(c.dataset)),
                                          sweep_json.value("variant", c.variant),
                                          sweep_json.value("mean_sparsity", 0.0));
    json j = provenance(c, "optimize");
    j["result"] = opt::to_json(result);
    j["summary"] = bench::to_json(summary);
    bench::write_json_file(out_path(c, "optimize.json"), j);
    const auto table = opt::fold_table(result);
    bench::write_text_file(out_path(c, "optimize.txt"), table);
    std::cout << table;
    return 0;
}

bench::RunSummary load_summary(const std::string& run_dir)
{
    const auto path = (fs::path(run_dir) / "optimize.json").string();
    return bench::summary_from_json(bench::read_json_file(path).at("summary"));
}

int cmd_calibrate(const RunConfig& c, const std::string& run_dir)
{
    const auto summary = load_summary(run_dir);
    const auto model = bench::calibrate_on(summary);
    const std::string path = c.calibration.empty() ? out_path(c, "calibration.json") : c.calibration;
    auto j = energy::to_json(model);
    j["reference_run"] = bench::to_json(summary);
    bench::write_json_file(path, j);
    std::printf("E_sop %.6g nJ, E_update %.6g nJ, latency %.4f ms/ms + %.4f ms\nwrote %s\n", model.energy_per_sop_nj,
                model.energy_per_update_nj, model.latency.slope, model.latency.intercept, path.c_str());
    return 0;
}

int cmd_partition(const RunConfig& c, const std::string& reference)
{
    const auto snn = load_snn(c.model);
    const auto plan = partition::partition(snn);
    const auto problems = partition::validate_plan(snn, plan);
    for (const auto& p : problems) {
        std::cerr << "invalid plan: " << p << "\n";
    }
    const auto rows = partition::plan_report(plan);
    json j = provenance(c, "partition");
    j["plan"] = partition::to_json(plan);
    j["report"] = partition::to_json(rows);
    std::string text = partition::format_report(rows);
    if (!reference.empty() && fs::exists(reference)) {
        const auto ref = bench::read_json_file(reference);
        if (ref.contains("architecture")) {
            j["reference"] = ref["architecture"];
            std::ostringstream side;
            side << "Layer     ours  reference\n";
            for (const auto& r : rows) {
                for (const auto& e : ref["architecture"]) {
                    if (e.at("layer") == r.layer) {
                        char line[80];
                        std::snprintf(line, sizeof line, "%-8s %5zu %10d\n", r.layer.c_str(), r.cores,
                                      e.at("cores").get<int>());
                        side << line;
                    }
                }
            }
            text += "\n" + side.str();
        }
    }
    text += "chips: " + std::to_string(plan.chips) + "\n";
    bench::write_json_file(out_path(c, "partition.json"), j);
    bench::write_text_file(out_path(c, "partition.txt"), text);
    std::cout << text;
    return problems.empty() ? 0 : 3;
}

int cmd_report(const RunConfig& c, const std::vector<std::string>& runs, const std::string& reference)
{
    if (runs.empty()) {
        throw Error("report needs at least one --run DIR");
    }
    if (c.calibration.empty()) {
        throw Error("report needs --calibration FILE (see the calibrate subcommand)");
    }
    const auto model = energy::load_power_model(c.calibration);
    std::vector<energy::EnergyRow> rows;
    if (!reference.empty()) {
        const auto ref = energy::load_reference(reference);
        for (const auto& r : ref.optimized) {
            rows.push_back(r);
        }
    }
    json j = provenance(c, "report");
    for (const auto& dir : runs) {
        const auto s = load_summary(dir);
        rows.push_back(bench::proxy_row(s, model));
        j["runs"].push_back(bench::to_json(s));
    }
    // Only reference rows matching a simulated dataset/variant are compared.
    std::vector<energy::EnergyRow> shown;
    for (const auto& r : rows) {
        for (const auto& dir_row : rows) {
            if (dir_row.source == "proxy" && dir_row.dataset == r.dataset && dir_row.variant == r.variant) {
                shown.push_back(r);
                break;
            }
        }
    }
    const auto ratios = energy::compare_report(shown);
    for (const auto& r : shown) {
        j["rows"].push_back(energy::to_json(r));
    }
    j["ratios"] = energy::to_json(ratios);
    j["calibration"] = energy::to_json(model);
    const std::string text = energy::format_rows(shown) + "\n" + energy::format_ratios(ratios);
    bench::write_json_file(out_path(c, "report.json"), j);
    bench::write_text_file(out_path(c, "report.txt"), text);
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Convert, simulate and benchmark spiking versions of small CNNs"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::optional<std::string> mirror;
    std::string output, sweep_file, run_dir, trace_path;
    std::string reference = std::string(SNNPORT_RESOURCE_DIR) + "/reference_measurements.json";
    std::string report_reference;
    std::vector<std::string> runs;
    std::size_t duration = 200;

    auto* fetch = app.add_subcommand("fetch-data", "download and verify a dataset into the cache");
    add_common(fetch, cfg);
    fetch->add_option("--mirror", mirror, "local directory or base URL to fetch from");

    auto* conv = app.add_subcommand("convert", "normalize a trained network and convert it to a spiking model");
    add_common(conv, cfg);
    conv->add_option("--model", cfg.model, "trained network (SNNC)")->required()->check(CLI::ExistingFile);
    conv->add_option("--calib-images", cfg.calib_images, "normalization images (IDX)");
    conv->add_option("--calib-labels", cfg.calib_labels, "normalization labels (IDX)");
    conv->add_option("--calib-count", cfg.calib_count, "training images used when no calibration file is given");
    conv->add_option("--percentile", cfg.percentile, "activation percentile for normalization");
    conv->add_option("--output", output, "spiking model path (default OUT/snn.snnc)");

    auto* edge_cmd = app.add_subcommand("edge", "write edge-detected images and report sparsity");
    add_common(edge_cmd, cfg);

    auto* eval = app.add_subcommand("evaluate", "accuracy of the analog network");
    add_common(eval, cfg);
    eval->add_option("--model", cfg.model, "trained network (SNNC)")->required()->check(CLI::ExistingFile);

    auto* simulate = app.add_subcommand("simulate", "run the spiking model at one duration");
    add_common(simulate, cfg);
    add_sim_options(simulate, cfg);
    simulate->add_option("--duration", duration, "timesteps (ms)")->check(CLI::PositiveNumber);
    simulate->add_option("--trace", trace_path, "write one JSON line per image");

    auto* sweep = app.add_subcommand("sweep", "accuracy and activity over a range of durations");
    add_common(sweep, cfg);
    add_sim_options(sweep, cfg);

    auto* optimize = app.add_subcommand("optimize", "cross-validated duration selection");
    add_common(optimize, cfg);
    optimize->add_option("--sweep", sweep_file, "sweep.json from the sweep subcommand")->check(CLI::ExistingFile);
    optimize->add_option("--model", cfg.model, "spiking model, simulated when --sweep is absent");
    optimize->add_option("--encoding", cfg.encoding, "rate or analog")->check(CLI::IsMember({"rate", "analog"}));
    optimize->add_option("--durations", cfg.durations, "start:stop:step or a comma list (ms)");
    optimize->add_option("--tolerance", cfg.tolerance, "accuracy tolerance in percentage points");

    auto* part = app.add_subcommand("partition", "map the spiking model onto neuromorphic cores");
    add_common(part, cfg);
    part->add_option("--model", cfg.model, "spiking model (SNNC)")->required()->check(CLI::ExistingFile);
    part->add_option("--reference", reference, "reference measurements with per-layer core counts");

    auto* calib = app.add_subcommand("calibrate", "fit the power proxy on an optimized reference run");
    add_common(calib, cfg);
    calib->add_option("--run", run_dir, "directory with optimize.json of the original MNIST run")->required();
    calib->add_option("--calibration", cfg.calibration, "output file (default OUT/calibration.json)");

    auto* report = app.add_subcommand("report", "accuracy, power, latency and energy comparison");
    add_common(report, cfg);
    report->add_option("--run", runs, "run directories holding optimize.json")->required();
    report->add_option("--calibration", cfg.calibration, "proxy calibration file")->check(CLI::ExistingFile);
    report->add_option("--reference", report_reference, "reference hardware measurements (JSON)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*fetch) {
            return cmd_fetch(cfg, mirror);
        }
        if (*conv) {
            return cmd_convert(cfg, output);
        }
        if (*edge_cmd) {
            return cmd_edge(cfg);
        }
        if (*eval) {
            return cmd_evaluate(cfg);
        }
        if (*simulate) {
            return cmd_simulate(cfg, duration, trace_path);
        }
        if (*sweep) {
            return cmd_sweep(cfg);
        }
        if (*optimize) {
            return cmd_optimize(cfg, sweep_file);
        }
        if (*part) {
            return cmd_partition(cfg, reference);
        }
        if (*calib) {
            return cmd_calibrate(cfg, run_dir);
        }
        if (*report) {
            return cmd_report(cfg, runs, report_reference);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
