#pragma once

#include <span>
#include <vector>

#include "mcast/domain.hpp"
#include "mcast/smg.hpp"
#include "mcast/watch_prob.hpp"

namespace mcast {

/// Shannon rate B log2(1 + h P_D / N_0) in bits per second.
double data_rate(double gain, const SystemResources &res);

/// Lowest rate among the users of SMGs 0..g (0-based): content sent to SMG g
/// also reaches every lagging SMG.
double multicast_min_rate(std::span<const SmgState> smgs, std::size_t g, const SystemResources &res);

/// Segments needed so no SMG's current-video buffer runs dry within a slot.
double buffer_requirement(std::span<const double> current_buffers, double slot_seconds, double segment_seconds);

/// Largest n with costs[0] + ... + costs[n-1] <= budget, capped at `cap`.
int count_affordable(std::span<const double> costs, double budget, int cap);

/// Segments SMG g could receive with the whole slot's bandwidth at version `avg_version`.
int max_segments_bandwidth(const VideoCatalog &catalog, std::span<const SegmentId> candidates, int avg_version,
                           double min_rate_bps, double slot_seconds, int cap);

/// Segments whose enhancement layers fit the slot's transcoding budget.
/// The base version needs no transcoding, so the result is `cap`.
int max_segments_computing(const VideoCatalog &catalog, std::span<const SegmentId> candidates, int avg_version,
                           const SystemResources &res, int cap);

enum class BufferingOrder { watch_probability, sequential };

struct PlannedSegment {
    SegmentId id;
    double priority = 0.0;  ///< phi_{g,m}; larger means buffered earlier
};

/// Per-slot buffering decision: which segments each SMG receives, in order.
struct BufferingPlan {
    int total_count = 0;  ///< n
    std::vector<std::vector<PlannedSegment>> smgs;

    double buffer_requirement = 0.0;  ///< n_buffer
    int resource_requirement = 0;     ///< n_resource
    std::vector<int> capacity;        ///< min(n^B_g, n^C_g) per SMG

    [[nodiscard]] std::vector<int> counts() const;
    [[nodiscard]] int planned_segments() const;
    [[nodiscard]] std::vector<std::string> violations() const;
};

struct PlanOptions {
    int avg_version = 2;  ///< l-bar
    int n_max = 8;
    BufferingOrder order = BufferingOrder::watch_probability;
};

/// Candidate segments for SMG g: the global order restricted to segments at
/// or after its playhead that it has not received yet.
std::vector<SegmentId> smg_candidates(std::span<const SegmentId> global_order, const SmgState &smg);

/// `dist` must be anchored at or behind every SMG's playhead.
BufferingPlan build_plan(const VideoCatalog &catalog, std::span<const SmgState> smgs, const WatchDistribution &dist,
                         const SystemResources &res, const PlanOptions &options);

}  // namespace mcast
