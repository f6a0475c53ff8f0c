#pragma once

// Dataset cache, provenance hashing and the artifact files exchanged by the
// command line subcommands.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnport/energy.hpp"
#include "snnport/model_ir.hpp"
#include "snnport/optimizer.hpp"
#include "snnport/simulator.hpp"

namespace snnport::bench {

struct RemoteFile {
    std::string name;    // uncompressed file name, e.g. train-images-idx3-ubyte
    std::string sha256;  // of the uncompressed file; empty = recorded on first fetch
};

struct DatasetInfo {
    std::string name;
    std::vector<RemoteFile> files;
    std::vector<std::string> base_urls;  // tried in order; files are fetched as <url><name>.gz
};

/// mnist, fmnist or asl (asl has no download source and must be supplied).
const DatasetInfo& dataset_info(const std::string& name);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> http_get(const std::string& url);

std::string default_cache_root();

struct FetchResult {
    std::string directory;
    std::size_t downloaded = 0;  // files fetched from the network or a mirror
    std::size_t cached = 0;      // files already present and verified
};

/// Ensures every file of `dataset` is present in <cache_root>/<dataset> and
/// matches manifest.json. `mirror` may be a local directory (raw or .gz
/// files) or a base URL; it replaces the built-in sources.
FetchResult fetch_dataset(const std::string& dataset, const std::string& cache_root,
                          const std::optional<std::string>& mirror = std::nullopt);

/// Throws "checksum mismatch for <file>" if any cached file disagrees with the
/// manifest.
void verify_cache(const std::string& directory);

/// "train" or "t10k" split of a cached dataset.
LabeledDataset load_split(const std::string& directory, const std::string& split);

/// First 16 hex digits of sha256 over the canonical JSON dump.
std::string config_hash(const nlohmann::json& config);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);

/// Curve plus per-image outcomes, enough to rerun the optimizer without
/// simulating again.
nlohmann::json curve_to_json(const sim::CurveResult& curve);
sim::CurveResult curve_from_json(const nlohmann::json& j);

/// Mean neuron updates per image at duration index d.
double mean_updates(const sim::CurveResult& curve, std::size_t d);

/// What the energy report needs from one dataset/variant run.
struct RunSummary {
    std::string dataset;  // display name, e.g. MNIST
    std::string variant;  // original or edge
    std::size_t recommended_duration = 0;
    std::size_t max_duration = 0;  // shortest duration reaching the curve maximum
    double accuracy_at_recommended = 0.0;
    double max_accuracy = 0.0;
    double mean_sops = 0.0;  // per image at the recommended duration
    double mean_updates = 0.0;
    double mean_sparsity = 0.0;
};

RunSummary summarize(const sim::CurveResult& curve, const opt::OptimizationResult& result, std::string dataset,
                     std::string variant, double mean_sparsity);
nlohmann::json to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

/// Proxy power at the recommended duration (wallclock = duration, 1 ms per
/// step) and latency from the calibrated line.
energy::EnergyRow proxy_row(const RunSummary& s, const energy::PowerModel& model);

/// Calibrates the proxy on a reference run (the original MNIST network).
energy::PowerModel calibrate_on(const RunSummary& reference, const energy::CalibrationTargets& targets = {});

}  // namespace snnport::bench
