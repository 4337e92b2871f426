#include "mcast/watch_prob.hpp"

#include <algorithm>
#include <stdexcept>

namespace mcast {

double next_segment_prob(double w_prev, double p_prev) { return w_prev * (1.0 - p_prev); }

double first_segment_prob(double w_prev_first, std::span<const double> p_prev_video) {
    if (p_prev_video.empty()) throw std::invalid_argument("previous video has no segments");
    double reach = p_prev_video[0];
    double survive = 1.0;
    for (std::size_t j = 1; j < p_prev_video.size(); ++j) {
        survive *= 1.0 - p_prev_video[j - 1];
        reach += p_prev_video[j] * survive;
    }
    return w_prev_first * reach;
}

double subsequent_segment_prob(double w_first, std::span<const double> p_prefix) {
    if (p_prefix.empty()) throw std::invalid_argument("subsequent segments start at index 2");
    double w = w_first;
    for (double p : p_prefix) w *= 1.0 - p;
    return w;
}

WatchDistribution::WatchDistribution(SegmentId anchor, std::vector<std::vector<double>> rows)
    : anchor_(anchor), rows_(std::move(rows)) {}

double WatchDistribution::at(SegmentId id) const {
    const int row = id.video - anchor_.video;
    if (row < 0 || row >= static_cast<int>(rows_.size())) return 0.0;
    const int col = row == 0 ? id.segment - anchor_.segment : id.segment;
    if (col < 0 || col >= static_cast<int>(rows_[static_cast<std::size_t>(row)].size())) return 0.0;
    return rows_[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
}

std::vector<std::pair<SegmentId, double>> WatchDistribution::entries() const {
    std::vector<std::pair<SegmentId, double>> out;
    for (std::size_t row = 0; row < rows_.size(); ++row) {
        const int offset = row == 0 ? anchor_.segment : 0;
        for (std::size_t col = 0; col < rows_[row].size(); ++col)
            out.emplace_back(SegmentId{anchor_.video + static_cast<int>(row), offset + static_cast<int>(col)},
                             rows_[row][col]);
    }
    return out;
}

WatchDistribution compute_distribution(const VideoCatalog &catalog, SegmentId playhead) {
    if (!catalog.contains(playhead)) throw std::out_of_range("playhead outside the catalog");

    std::vector<std::vector<double>> rows;
    std::vector<double> swipe;
    double w_first = 1.0;
    for (int video = playhead.video; video < catalog.video_count(); ++video) {
        const int start = video == playhead.video ? playhead.segment : 0;
        const int count = catalog.segment_count(video);

        swipe.clear();
        for (int j = start; j < count; ++j) swipe.push_back(catalog.swipe_prob({video, j}));

        std::vector<double> row;
        row.reserve(swipe.size());
        row.push_back(w_first);
        for (std::size_t j = 1; j < swipe.size(); ++j) row.push_back(next_segment_prob(row.back(), swipe[j - 1]));
        rows.push_back(std::move(row));

        // Within the anchor video the recursion starts at the playhead, as if
        // the video began there.
        w_first = first_segment_prob(w_first, swipe);
    }
    return WatchDistribution(playhead, std::move(rows));
}

std::vector<SegmentId> buffering_order(const WatchDistribution &dist, const std::set<SegmentId> &already_buffered) {
    auto entries = dist.entries();
    std::erase_if(entries, [&](const auto &e) { return already_buffered.contains(e.first); });
    // entries() is already in catalog order, so a stable sort keeps the tie-break.
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second; });
    std::vector<SegmentId> order;
    order.reserve(entries.size());
    for (const auto &e : entries) order.push_back(e.first);
    return order;
}

std::vector<SegmentId> sequential_order(const WatchDistribution &dist, const std::set<SegmentId> &already_buffered) {
    std::vector<SegmentId> order;
    for (const auto &[id, w] : dist.entries())
        if (!already_buffered.contains(id)) order.push_back(id);
    return order;
}

}  // namespace mcast
