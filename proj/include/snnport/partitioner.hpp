#pragma once

// Greedy, layer-aligned placement of spiking populations onto
// neuromorphic cores with bounded neurons, axons and synapse memory.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnport/spiking_network.hpp"

namespace snnport::partition {

struct CoreConstraints {
    std::size_t max_neurons = 1024;
    std::size_t max_fan_in = 4096;
    std::size_t max_fan_out = 4096;
    std::size_t synapse_bytes = 128 * 1024;  // 16-bit weight entries
    std::size_t cores_per_chip = 128;

    void validate() const;
};

struct CoreCost {
    std::size_t neurons = 0;
    std::size_t fan_in = 0;   // distinct presynaptic neurons feeding the slice
    std::size_t fan_out = 0;  // distinct neurons of the next population it feeds
    std::size_t synapse_bytes = 0;  // 2 bytes per incoming connection

    bool fits(const CoreConstraints& c) const;
    bool operator==(const CoreCost&) const = default;
};

/// Cost of neurons [begin, end) of population p.
CoreCost core_cost(const SpikingNetwork& net, std::size_t p, std::size_t begin, std::size_t end);

struct CoreSlice {
    std::size_t core_id = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    CoreCost cost;
};

struct PopulationPlan {
    std::string name;
    PopulationKind kind = PopulationKind::IFDense;
    std::size_t neurons = 0;
    std::size_t parameters = 0;
    std::vector<CoreSlice> cores;
};

struct PartitionPlan {
    CoreConstraints constraints;
    std::vector<PopulationPlan> populations;
    std::size_t total_cores = 0;
    std::size_t chips = 0;
};

/// Grows each core's slice one neuron at a time until the next neuron would
/// break a constraint. Populations never share a core.
PartitionPlan partition(const SpikingNetwork& net, const CoreConstraints& constraints = {});

/// Recomputes every core from scratch; returns one message per problem.
std::vector<std::string> validate_plan(const SpikingNetwork& net, const PartitionPlan& plan);

struct ReportRow {
    std::string layer;
    std::size_t parameters = 0;
    std::size_t cores = 0;
};

/// One row per parameterized layer with following pools folded in, plus a
/// final "Total" row.
std::vector<ReportRow> plan_report(const PartitionPlan& plan);
std::string format_report(const std::vector<ReportRow>& rows);
nlohmann::json to_json(const PartitionPlan& plan);
nlohmann::json to_json(const std::vector<ReportRow>& rows);

}  // namespace snnport::partition
