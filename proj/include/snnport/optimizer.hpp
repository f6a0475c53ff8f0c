#pragma once

// Cross-validated search for the shortest simulation duration whose accuracy
// stays within a tolerance of the best accuracy on the curve.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnport/simulator.hpp"

namespace snnport::opt {

/// Durations 10, 20, ..., 200 ms.
std::vector<std::size_t> default_durations();

/// Parses "start:stop:step" (inclusive) or a comma list "10,20,50".
std::vector<std::size_t> parse_durations(const std::string& text);

struct SweepConfig {
    std::vector<std::size_t> durations = default_durations();
    double tolerance_points = 2.0;  // absolute, in accuracy percentage points
    std::uint64_t seed = 0;

    void validate() const;
};

struct Fold {
    std::vector<std::size_t> search;
    std::vector<std::size_t> validate;
};

/// Shuffles 0..n-1 with `seed` and cuts it into thirds at floor(k*n/3); fold
/// k validates on third k and searches on the other two.
std::vector<Fold> split_folds(std::size_t n, std::uint64_t seed);

/// Index of the smallest duration whose accuracy >= max - tolerance.
/// `accuracy` and `tolerance` share units. Durations must be increasing.
std::size_t select_duration(const std::vector<double>& accuracy, double tolerance);

struct FoldResult {
    std::vector<double> search_curve;  // accuracy per duration on the search subset
    std::size_t chosen_index = 0;
    std::size_t chosen_duration = 0;
    double search_accuracy = 0.0;
    double max_search_accuracy = 0.0;
    std::size_t max_duration = 0;  // shortest duration reaching the maximum
    double validation_accuracy = 0.0;
    std::size_t search_size = 0;
    std::size_t validation_size = 0;
};

struct OptimizationResult {
    std::vector<std::size_t> durations;
    double tolerance_points = 0.0;
    std::uint64_t seed = 0;
    std::vector<FoldResult> folds;
    std::size_t recommended_duration = 0;  // median of the fold choices
    std::vector<double> full_curve;        // accuracy over every image
};

/// Runs the fold procedure on an already simulated curve
/// (curve.durations must equal cfg.durations).
OptimizationResult optimize(const sim::CurveResult& curve, const SweepConfig& cfg);

/// Simulates the curve once with checkpoint reuse, then optimizes.
OptimizationResult optimize(const sim::Simulator& simulator, const LabeledDataset& test, const SweepConfig& cfg,
                            const sim::EncodingConfig& enc, std::size_t workers = 1);

nlohmann::json to_json(const OptimizationResult& r);
std::string fold_table(const OptimizationResult& r);

}  // namespace snnport::opt
