#pragma once

#include <set>
#include <span>
#include <utility>
#include <vector>

#include "mcast/domain.hpp"

namespace mcast {

/// w_{i,j+1} = w_{i,j} (1 - p_{i,j}).
double next_segment_prob(double w_prev, double p_prev);

/// Probability of reaching the first segment of the next video: the viewer
/// must swipe away from one of the previous video's segments.
/// Throws std::invalid_argument if `p_prev_video` is empty.
double first_segment_prob(double w_prev_first, std::span<const double> p_prev_video);

/// w_{i,j} = w_{i,1} * prod_{k<j} (1 - p_{i,k}); `p_prefix` holds p_{i,1..j-1}.
/// Throws std::invalid_argument if `p_prefix` is empty (j starts at 2).
double subsequent_segment_prob(double w_first, std::span<const double> p_prefix);

/// Watching probabilities of every segment reachable from an anchor playhead.
/// The anchor segment has probability 1; segments behind it are unreachable.
class WatchDistribution {
public:
    WatchDistribution() = default;
    WatchDistribution(SegmentId anchor, std::vector<std::vector<double>> rows);

    [[nodiscard]] SegmentId anchor() const { return anchor_; }
    /// Zero for segments behind the anchor or outside the catalog.
    [[nodiscard]] double at(SegmentId id) const;
    /// Every reachable segment in catalog order.
    [[nodiscard]] std::vector<std::pair<SegmentId, double>> entries() const;
    [[nodiscard]] bool empty() const { return rows_.empty(); }

    /// rows()[k] covers video anchor().video + k; row 0 starts at anchor().segment.
    [[nodiscard]] const std::vector<std::vector<double>> &rows() const { return rows_; }

private:
    SegmentId anchor_{};
    std::vector<std::vector<double>> rows_;
};

/// Chains the per-segment recursions forward from `playhead` across the whole
/// remaining catalog. Throws std::out_of_range if the playhead is outside it.
WatchDistribution compute_distribution(const VideoCatalog &catalog, SegmentId playhead);

/// Unbuffered reachable segments sorted by watching probability, highest
/// first; ties resolve to catalog order.
std::vector<SegmentId> buffering_order(const WatchDistribution &dist, const std::set<SegmentId> &already_buffered);

/// Reachable unbuffered segments in plain playback order (no probability ranking).
std::vector<SegmentId> sequential_order(const WatchDistribution &dist, const std::set<SegmentId> &already_buffered);

}  // namespace mcast
