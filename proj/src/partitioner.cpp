#include "snnport/partitioner.hpp"

#include <cstdio>
#include <sstream>

namespace snnport::partition {

void CoreConstraints::validate() const
{
    if (max_neurons == 0 || max_fan_in == 0 || max_fan_out == 0 || synapse_bytes == 0 || cores_per_chip == 0) {
        throw Error("core constraints must all be positive");
    }
}

bool CoreCost::fits(const CoreConstraints& c) const
{
    return neurons <= c.max_neurons && fan_in <= c.max_fan_in && fan_out <= c.max_fan_out &&
           synapse_bytes <= c.synapse_bytes;
}

namespace {

// Distinct-element counter with cheap reset.
class Tally {
public:
    explicit Tally(std::size_t universe) : count_(universe, 0) {}

    std::size_t distinct() const { return touched_.size(); }
    bool seen(std::size_t i) const { return count_[i] != 0; }
    void add(std::size_t i)
    {
        if (count_[i]++ == 0) {
            touched_.push_back(i);
        }
    }
    void clear()
    {
        for (auto i : touched_) {
            count_[i] = 0;
        }
        touched_.clear();
    }

private:
    std::vector<std::uint32_t> count_;
    std::vector<std::size_t> touched_;
};

struct Neighbours {
    std::vector<std::size_t> pre;
    std::vector<std::size_t> post;
};

void neighbours(const SpikingNetwork& net, std::size_t p, std::size_t n, Neighbours& out)
{
    out.pre.clear();
    out.post.clear();
    for_each_incoming(net.populations[p], n, [&](std::size_t pre, float) { out.pre.push_back(pre); });
    if (p + 1 < net.populations.size()) {
        for_each_outgoing(net.populations[p + 1], n, [&](std::size_t post, float) { out.post.push_back(post); });
    }
}

}  // namespace

CoreCost core_cost(const SpikingNetwork& net, std::size_t p, std::size_t begin, std::size_t end)
{
    if (p >= net.populations.size()) {
        throw Error("population index out of range");
    }
    const auto& pop = net.populations[p];
    if (begin > end || end > pop.neuron_count()) {
        throw Error("slice outside population " + pop.name);
    }
    CoreCost c;
    if (begin == end) {
        return c;
    }
    Tally pre(pop.input_count());
    Tally post(p + 1 < net.populations.size() ? net.populations[p + 1].neuron_count() : 0);
    Neighbours nb;
    std::size_t connections = 0;
    for (std::size_t n = begin; n < end; ++n) {
        neighbours(net, p, n, nb);
        connections += nb.pre.size();
        for (auto i : nb.pre) {
            pre.add(i);
        }
        for (auto i : nb.post) {
            post.add(i);
        }
    }
    c.neurons = end - begin;
    c.fan_in = pre.distinct();
    c.fan_out = post.distinct();
    c.synapse_bytes = 2 * connections;
    return c;
}

PartitionPlan partition(const SpikingNetwork& net, const CoreConstraints& constraints)
{
    constraints.validate();
    PartitionPlan plan;
    plan.constraints = constraints;
    std::size_t next_core = 0;
    Neighbours nb;
    for (std::size_t p = 0; p < net.populations.size(); ++p) {
        const auto& pop = net.populations[p];
        PopulationPlan pp;
        pp.name = pop.name;
        pp.kind = pop.kind;
        pp.neurons = pop.neuron_count();
        pp.parameters = pop.weights.size() + pop.biases.size();

        Tally pre(pop.input_count());
        Tally post(p + 1 < net.populations.size() ? net.populations[p + 1].neuron_count() : 0);
        CoreSlice slice;
        slice.core_id = next_core;
        const auto close = [&](std::size_t end) {
            slice.end = end;
            slice.cost.fan_in = pre.distinct();
            slice.cost.fan_out = post.distinct();
            pp.cores.push_back(slice);
            pre.clear();
            post.clear();
            slice = CoreSlice{};
            slice.core_id = ++next_core;
            slice.begin = end;
        };
        for (std::size_t n = 0; n < pp.neurons; ++n) {
            neighbours(net, p, n, nb);
            for (int attempt = 0;; ++attempt) {
                std::size_t new_pre = 0, new_post = 0;
                for (auto i : nb.pre) {
                    new_pre += pre.seen(i) ? 0 : 1;
                }
                for (auto i : nb.post) {
                    new_post += post.seen(i) ? 0 : 1;
                }
                CoreCost next = slice.cost;
                next.neurons += 1;
                next.fan_in = pre.distinct() + new_pre;
                next.fan_out = post.distinct() + new_post;
                next.synapse_bytes += 2 * nb.pre.size();
                if (next.fits(constraints)) {
                    for (auto i : nb.pre) {
                        pre.add(i);
                    }
                    for (auto i : nb.post) {
                        post.add(i);
                    }
                    slice.cost = next;
                    break;
                }
                if (slice.cost.neurons == 0 || attempt > 0) {
                    throw Error("population " + pop.name + ": neuron " + std::to_string(n) +
                                " alone exceeds the core limits (fan-in " + std::to_string(nb.pre.size()) +
                                ", fan-out " + std::to_string(nb.post.size()) + ")");
                }
                close(n);
            }
        }
        if (slice.cost.neurons > 0) {
            close(pp.neurons);
        }
        plan.populations.push_back(std::move(pp));
    }
    plan.total_cores = next_core;
    plan.chips = (next_core + constraints.cores_per_chip - 1) / constraints.cores_per_chip;
    return plan;
}

std::vector<std::string> validate_plan(const SpikingNetwork& net, const PartitionPlan& plan)
{
    std::vector<std::string> problems;
    if (plan.populations.size() != net.populations.size()) {
        problems.push_back("plan covers " + std::to_string(plan.populations.size()) + " populations, network has " +
                           std::to_string(net.populations.size()));
        return problems;
    }
    std::vector<bool> core_used(plan.total_cores, false);
    std::size_t cores = 0;
    for (std::size_t p = 0; p < net.populations.size(); ++p) {
        const auto& pp = plan.populations[p];
        const std::string who = "population " + net.populations[p].name;
        std::size_t cursor = 0;
        for (const auto& s : pp.cores) {
            ++cores;
            if (s.core_id >= core_used.size() || core_used[s.core_id]) {
                problems.push_back(who + ": core id " + std::to_string(s.core_id) + " invalid or reused");
            } else {
                core_used[s.core_id] = true;
            }
            if (s.begin != cursor || s.end <= s.begin) {
                problems.push_back(who + ": slices are not contiguous and disjoint at neuron " + std::to_string(cursor));
            }
            cursor = s.end;
            if (s.end > net.populations[p].neuron_count()) {
                problems.push_back(who + ": slice ends past the population");
                continue;
            }
            const auto cost = core_cost(net, p, s.begin, s.end);
            if (!(cost == s.cost)) {
                problems.push_back(who + ": recorded cost of core " + std::to_string(s.core_id) + " is stale");
            }
            if (!cost.fits(plan.constraints)) {
                problems.push_back(who + ": core " + std::to_string(s.core_id) + " violates a constraint");
            }
        }
        if (cursor != net.populations[p].neuron_count()) {
            problems.push_back(who + ": " + std::to_string(cursor) + " of " +
                               std::to_string(net.populations[p].neuron_count()) + " neurons placed");
        }
    }
    if (cores != plan.total_cores) {
        problems.push_back("total core count does not match the slices");
    }
    if (plan.total_cores > plan.chips * plan.constraints.cores_per_chip) {
        problems.push_back("chip count too small for the cores used");
    }
    return problems;
}

std::vector<ReportRow> plan_report(const PartitionPlan& plan)
{
    std::vector<ReportRow> rows;
    std::size_t convs = 0, dense = 0;
    for (const auto& pp : plan.populations) {
        switch (pp.kind) {
        case PopulationKind::IFConv2D:
            rows.push_back({"Conv" + std::to_string(++convs), 0, 0});
            break;
        case PopulationKind::IFDense:
            rows.push_back({"FC" + std::to_string(++dense), 0, 0});
            break;
        case PopulationKind::Accumulator:
            rows.push_back({"Output", 0, 0});
            break;
        case PopulationKind::IFAvgPool:
            if (rows.empty()) {
                rows.push_back({pp.name, 0, 0});
            }
            break;
        }
        rows.back().parameters += pp.parameters;
        rows.back().cores += pp.cores.size();
    }
    ReportRow total{"Total", 0, 0};
    for (const auto& r : rows) {
        total.parameters += r.parameters;
        total.cores += r.cores;
    }
    rows.push_back(total);
    return rows;
}

std::string format_report(const std::vector<ReportRow>& rows)
{
    std::ostringstream out;
    char line[120];
    std::snprintf(line, sizeof line, "%-8s %10s %6s\n", "Layer", "Parameter", "Cores");
    out << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-8s %10zu %6zu\n", r.layer.c_str(), r.parameters, r.cores);
        out << line;
    }
    return out.str();
}

nlohmann::json to_json(const PartitionPlan& plan)
{
    nlohmann::json j;
    const auto& c = plan.constraints;
    j["constraints"] = {{"max_neurons", c.max_neurons},
                        {"max_fan_in", c.max_fan_in},
                        {"max_fan_out", c.max_fan_out},
                        {"synapse_bytes", c.synapse_bytes},
                        {"cores_per_chip", c.cores_per_chip}};
    j["total_cores"] = plan.total_cores;
    j["chips"] = plan.chips;
    j["populations"] = nlohmann::json::array();
    for (const auto& pp : plan.populations) {
        nlohmann::json jp = {{"name", pp.name},
                             {"kind", to_string(pp.kind)},
                             {"neurons", pp.neurons},
                             {"parameters", pp.parameters},
                             {"cores", nlohmann::json::array()}};
        for (const auto& s : pp.cores) {
            jp["cores"].push_back({{"core_id", s.core_id},
                                   {"begin", s.begin},
                                   {"end", s.end},
                                   {"neurons", s.cost.neurons},
                                   {"fan_in", s.cost.fan_in},
                                   {"fan_out", s.cost.fan_out},
                                   {"synapse_bytes", s.cost.synapse_bytes}});
        }
        j["populations"].push_back(jp);
    }
    return j;
}

nlohmann::json to_json(const std::vector<ReportRow>& rows)
{
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"layer", r.layer}, {"parameters", r.parameters}, {"cores", r.cores}});
    }
    return j;
}

}  // namespace snnport::partition
