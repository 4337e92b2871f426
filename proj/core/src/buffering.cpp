#include "mcast/buffering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace mcast {

std::vector<std::string> SmgState::violations() const {
    std::vector<std::string> out;
    if (users.empty()) out.push_back(fmt::format("SMG {} has no users", id));
    if (gains.size() != users.size()) out.push_back(fmt::format("SMG {} has {} gains for {} users", id, gains.size(), users.size()));
    for (double h : gains)
        if (!(h >= 0.0)) out.push_back(fmt::format("SMG {} has a negative channel gain {}", id, h));
    if (!buffers.valid()) out.push_back(fmt::format("SMG {} has a negative buffer level", id));
    if (!(last_quality >= 0.0 && last_quality < 1.0))
        out.push_back(fmt::format("SMG {} last quality {} outside [0,1)", id, last_quality));
    if (!(lambda_rebuffer >= 0.0) || !(lambda_variation >= 0.0))
        out.push_back(fmt::format("SMG {} has a negative sensitivity", id));
    return out;
}

double data_rate(double gain, const SystemResources &res) {
    return res.bandwidth_hz * std::log2(1.0 + gain * res.downlink_power_w / res.noise_power_w);
}

double multicast_min_rate(std::span<const SmgState> smgs, std::size_t g, const SystemResources &res) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d <= g && d < smgs.size(); ++d)
        for (double h : smgs[d].gains) lowest = std::min(lowest, data_rate(h, res));
    return lowest;
}

double buffer_requirement(std::span<const double> current_buffers, double slot_seconds, double segment_seconds) {
    double n = 0.0;
    for (double q : current_buffers) n += std::max((slot_seconds - q) / segment_seconds, 0.0);
    return n;
}

int count_affordable(std::span<const double> costs, double budget, int cap) {
    int n = 0;
    double spent = 0.0;
    for (double c : costs) {
        if (n >= cap || spent + c > budget) break;
        spent += c;
        ++n;
    }
    return std::min(n, cap);
}

int max_segments_bandwidth(const VideoCatalog &catalog, std::span<const SegmentId> candidates, int avg_version,
                           double min_rate_bps, double slot_seconds, int cap) {
    std::vector<double> costs;
    costs.reserve(candidates.size());
    for (auto id : candidates) costs.push_back(catalog.cumulative_mb(id, avg_version));
    const double budget_mb = slot_seconds * min_rate_bps / 1e6;
    return count_affordable(costs, budget_mb, cap);
}

int max_segments_computing(const VideoCatalog &catalog, std::span<const SegmentId> candidates, int avg_version,
                           const SystemResources &res, int cap) {
    if (avg_version <= 1) return cap;
    std::vector<double> costs;
    costs.reserve(candidates.size());
    for (auto id : candidates) costs.push_back(res.cycles_per_mb * catalog.enhancement_mb(id, avg_version));
    return count_affordable(costs, res.slot_seconds * res.computing_hz, cap);
}

std::vector<int> BufferingPlan::counts() const {
    std::vector<int> out;
    out.reserve(smgs.size());
    for (const auto &omega : smgs) out.push_back(static_cast<int>(omega.size()));
    return out;
}

int BufferingPlan::planned_segments() const {
    int total = 0;
    for (const auto &omega : smgs) total += static_cast<int>(omega.size());
    return total;
}

std::vector<std::string> BufferingPlan::violations() const {
    std::vector<std::string> out;
    for (std::size_t g = 0; g < smgs.size(); ++g) {
        if (static_cast<int>(smgs[g].size()) > total_count)
            out.push_back(fmt::format("SMG {} plans {} segments, more than n = {}", g + 1, smgs[g].size(), total_count));
        for (std::size_t m = 0; m < smgs[g].size(); ++m) {
            if (!(smgs[g][m].priority > 0.0)) out.push_back(fmt::format("SMG {} has a nonpositive priority", g + 1));
            if (m > 0 && !(smgs[g][m].priority < smgs[g][m - 1].priority))
                out.push_back(fmt::format("SMG {} priorities are not strictly decreasing", g + 1));
        }
    }
    return out;
}

std::vector<SegmentId> smg_candidates(std::span<const SegmentId> global_order, const SmgState &smg) {
    std::vector<SegmentId> out;
    if (smg.finished) return out;
    for (auto id : global_order)
        if (!(id < smg.playhead) && !smg.buffered.contains(id)) out.push_back(id);
    return out;
}

BufferingPlan build_plan(const VideoCatalog &catalog, std::span<const SmgState> smgs, const WatchDistribution &dist,
                         const SystemResources &res, const PlanOptions &options) {
    BufferingPlan plan;
    plan.smgs.resize(smgs.size());
    plan.capacity.assign(smgs.size(), 0);
    if (smgs.empty()) return plan;

    const std::vector<SegmentId> global = options.order == BufferingOrder::watch_probability
                                              ? buffering_order(dist, {})
                                              : sequential_order(dist, {});

    std::vector<std::vector<SegmentId>> candidates;
    candidates.reserve(smgs.size());
    std::vector<double> current;
    for (const auto &smg : smgs) {
        candidates.push_back(smg_candidates(global, smg));
        current.push_back(smg.buffers.current());
    }

    plan.buffer_requirement = buffer_requirement(current, res.slot_seconds, catalog.segment_seconds());
    for (std::size_t g = 0; g < smgs.size(); ++g) {
        const double rate = multicast_min_rate(smgs, g, res);
        const int by_bandwidth = max_segments_bandwidth(catalog, candidates[g], options.avg_version, rate,
                                                        res.slot_seconds, options.n_max);
        const int by_computing = max_segments_computing(catalog, candidates[g], options.avg_version, res, options.n_max);
        plan.capacity[g] = std::min(by_bandwidth, by_computing);
        plan.resource_requirement = std::max(plan.resource_requirement, plan.capacity[g]);
    }
    const double n = std::floor(std::max(plan.buffer_requirement, static_cast<double>(plan.resource_requirement)));
    plan.total_count = std::min(static_cast<int>(n), options.n_max);

    // Rank the distinct planned segments by their global position.
    std::map<SegmentId, int> global_rank;
    for (std::size_t r = 0; r < global.size(); ++r) global_rank.emplace(global[r], static_cast<int>(r));
    std::map<int, SegmentId> planned_by_rank;
    for (std::size_t g = 0; g < smgs.size(); ++g) {
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(plan.total_count), candidates[g].size());
        for (std::size_t m = 0; m < take; ++m) {
            plan.smgs[g].push_back({candidates[g][m], 0.0});
            planned_by_rank.emplace(global_rank.at(candidates[g][m]), candidates[g][m]);
        }
    }
    std::map<SegmentId, double> priority;
    const int planned = static_cast<int>(planned_by_rank.size());
    int rank = 1;
    for (const auto &[_, id] : planned_by_rank) priority[id] = planned - rank++ + 1;
    for (auto &omega : plan.smgs)
        for (auto &seg : omega) seg.priority = priority.at(seg.id);
    return plan;
}

}  // namespace mcast
