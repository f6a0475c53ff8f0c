#include "snnport/optimizer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace snnport::opt {

std::vector<std::size_t> default_durations()
{
    std::vector<std::size_t> d;
    for (std::size_t t = 10; t <= 200; t += 10) {
        d.push_back(t);
    }
    return d;
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& whole)
{
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw Error("bad duration list '" + whole + "'");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<std::size_t> parse_durations(const std::string& text)
{
    std::vector<std::size_t> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) {
            parts.push_back(p);
        }
        if (parts.size() != 3) {
            throw Error("duration range must be start:stop:step, got '" + text + "'");
        }
        const auto start = parse_count(parts[0], text);
        const auto stop = parse_count(parts[1], text);
        const auto step = parse_count(parts[2], text);
        if (step == 0 || start == 0 || stop < start) {
            throw Error("empty or invalid duration range '" + text + "'");
        }
        for (auto t = start; t <= stop; t += step) {
            out.push_back(t);
        }
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) {
            out.push_back(parse_count(p, text));
        }
    }
    SweepConfig{out}.validate();
    return out;
}

void SweepConfig::validate() const
{
    if (durations.empty()) {
        throw Error("duration list is empty");
    }
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (durations[i] == 0 || (i > 0 && durations[i] <= durations[i - 1])) {
            throw Error("durations must be positive and strictly increasing");
        }
    }
    if (!(tolerance_points > 0.0)) {
        throw Error("tolerance must be positive");
    }
}

std::vector<Fold> split_folds(std::size_t n, std::uint64_t seed)
{
    if (n < 3) {
        throw Error("need at least 3 images to build 3 folds, got " + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Explicit Fisher-Yates so the permutation does not depend on the
    // standard library's shuffle implementation.
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<Fold> folds(3);
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t lo = k * n / 3, hi = (k + 1) * n / 3;
        for (std::size_t i = 0; i < n; ++i) {
            (i >= lo && i < hi ? folds[k].validate : folds[k].search).push_back(order[i]);
        }
    }
    return folds;
}

std::size_t select_duration(const std::vector<double>& accuracy, double tolerance)
{
    if (accuracy.empty()) {
        throw Error("cannot select a duration from an empty curve");
    }
    const double best = *std::max_element(accuracy.begin(), accuracy.end());
    // Absorbs rounding in (max - tolerance) so exact-threshold points qualify.
    const double floor = best - tolerance - 1e-12;
    for (std::size_t i = 0; i < accuracy.size(); ++i) {
        if (accuracy[i] >= floor) {
            return i;
        }
    }
    return accuracy.size() - 1;
}

OptimizationResult optimize(const sim::CurveResult& curve, const SweepConfig& cfg)
{
    cfg.validate();
    if (curve.durations != cfg.durations) {
        throw Error("curve durations do not match the sweep configuration");
    }
    OptimizationResult r;
    r.durations = cfg.durations;
    r.tolerance_points = cfg.tolerance_points;
    r.seed = cfg.seed;
    r.full_curve = curve.accuracy;
    const double tol = cfg.tolerance_points / 100.0;
    std::vector<std::size_t> chosen;
    for (const auto& fold : split_folds(curve.images, cfg.seed)) {
        FoldResult f;
        f.search_size = fold.search.size();
        f.validation_size = fold.validate.size();
        for (std::size_t d = 0; d < cfg.durations.size(); ++d) {
            f.search_curve.push_back(curve.subset_accuracy(fold.search, d));
        }
        f.chosen_index = select_duration(f.search_curve, tol);
        f.chosen_duration = cfg.durations[f.chosen_index];
        f.search_accuracy = f.search_curve[f.chosen_index];
        const auto best = std::max_element(f.search_curve.begin(), f.search_curve.end());
        f.max_search_accuracy = *best;
        f.max_duration = cfg.durations[static_cast<std::size_t>(best - f.search_curve.begin())];
        f.validation_accuracy = curve.subset_accuracy(fold.validate, f.chosen_index);
        chosen.push_back(f.chosen_duration);
        r.folds.push_back(std::move(f));
    }
    std::sort(chosen.begin(), chosen.end());
    r.recommended_duration = chosen[chosen.size() / 2];
    return r;
}

OptimizationResult optimize(const sim::Simulator& simulator, const LabeledDataset& test, const SweepConfig& cfg,
                            const sim::EncodingConfig& enc, std::size_t workers)
{
    cfg.validate();
    const auto curve = sim::accuracy_curve(simulator, test, cfg.durations, enc, workers);
    return optimize(curve, cfg);
}

nlohmann::json to_json(const OptimizationResult& r)
{
    nlohmann::json j;
    j["durations"] = r.durations;
    j["tolerance_points"] = r.tolerance_points;
    j["seed"] = r.seed;
    j["full_curve"] = r.full_curve;
    j["recommended_duration"] = r.recommended_duration;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) {
        j["folds"].push_back({{"search_curve", f.search_curve},
                              {"chosen_duration", f.chosen_duration},
                              {"search_accuracy", f.search_accuracy},
                              {"max_search_accuracy", f.max_search_accuracy},
                              {"max_duration", f.max_duration},
                              {"validation_accuracy", f.validation_accuracy},
                              {"search_size", f.search_size},
                              {"validation_size", f.validation_size}});
    }
    return j;
}

std::string fold_table(const OptimizationResult& r)
{
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %10s %10s %10s %10s %10s\n", "fold", "search/val", "chosen ms", "search %",
                  "max %", "val %");
    out << line;
    for (std::size_t k = 0; k < r.folds.size(); ++k) {
        const auto& f = r.folds[k];
        const std::string sizes = std::to_string(f.search_size) + "/" + std::to_string(f.validation_size);
        std::snprintf(line, sizeof line, "%-6zu %10s %10zu %10.2f %10.2f %10.2f\n", k + 1, sizes.c_str(),
                      f.chosen_duration, 100.0 * f.search_accuracy, 100.0 * f.max_search_accuracy,
                      100.0 * f.validation_accuracy);
        out << line;
    }
    out << "recommended duration: " << r.recommended_duration << " ms (median of folds, tolerance "
        << r.tolerance_points << " pts)\n";
    return out.str();
}

}  // namespace snnport::opt
