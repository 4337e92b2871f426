#include "mcast/domain.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace mcast {

namespace {

std::string join_violations(const std::vector<std::string> &violations) {
    std::string message = "invalid scenario:";
    for (const auto &v : violations) {
        message += "\n  - ";
        message += v;
    }
    return message;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

VideoCatalog::VideoCatalog(std::vector<Video> videos, double segment_seconds)
    : videos_(std::move(videos)), segment_seconds_(segment_seconds) {
    if (auto v = violations(); !v.empty()) throw ConfigError(std::move(v));
}

std::vector<std::string> VideoCatalog::check(const std::vector<Video> &videos, double segment_seconds) {
    std::vector<std::string> out;
    if (!(segment_seconds > 0.0) || !std::isfinite(segment_seconds))
        out.push_back(fmt::format("segment duration must be positive, got {}", segment_seconds));

    std::size_t layers = 0;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const auto &video = videos[i];
        if (video.segments.empty()) out.push_back(fmt::format("video {} has no segments", i + 1));
        for (std::size_t j = 0; j < video.segments.size(); ++j) {
            const auto &seg = video.segments[j];
            if (!(seg.swipe_prob >= 0.0 && seg.swipe_prob <= 1.0))
                out.push_back(fmt::format("probability out of range at video {} segment {}: {}", i + 1, j + 1,
                                          seg.swipe_prob));
            if (seg.layer_mb.empty()) {
                out.push_back(fmt::format("video {} segment {} has no layers", i + 1, j + 1));
                continue;
            }
            if (layers == 0) layers = seg.layer_mb.size();
            if (seg.layer_mb.size() != layers)
                out.push_back(fmt::format("video {} segment {} has {} layers, expected {}", i + 1, j + 1,
                                          seg.layer_mb.size(), layers));
            for (std::size_t l = 0; l < seg.layer_mb.size(); ++l) {
                const double z = seg.layer_mb[l];
                if (!(z > 0.0) || !std::isfinite(z))
                    out.push_back(fmt::format("negative or zero size at video {} segment {} layer {}: {}", i + 1,
                                              j + 1, l + 1, z));
            }
        }
    }
    return out;
}

std::vector<std::string> VideoCatalog::violations() const { return check(videos_, segment_seconds_); }

int VideoCatalog::segment_count(int video) const {
    return static_cast<int>(videos_.at(static_cast<std::size_t>(video)).segments.size());
}

int VideoCatalog::total_segments() const {
    return std::accumulate(videos_.begin(), videos_.end(), 0,
                           [](int acc, const Video &v) { return acc + static_cast<int>(v.segments.size()); });
}

int VideoCatalog::layer_count() const {
    for (const auto &v : videos_)
        for (const auto &s : v.segments) return static_cast<int>(s.layer_mb.size());
    return 0;
}

bool VideoCatalog::contains(SegmentId id) const {
    return id.video >= 0 && id.video < video_count() && id.segment >= 0 && id.segment < segment_count(id.video);
}

const Segment &VideoCatalog::segment(SegmentId id) const {
    if (!contains(id))
        throw std::out_of_range(fmt::format("segment ({}, {}) is outside the catalog", id.video, id.segment));
    return videos_[static_cast<std::size_t>(id.video)].segments[static_cast<std::size_t>(id.segment)];
}

double VideoCatalog::cumulative_mb(SegmentId id, int version) const {
    const auto &layers = segment(id).layer_mb;
    if (version < 1 || version > static_cast<int>(layers.size()))
        throw std::out_of_range(fmt::format("version {} outside 1..{}", version, layers.size()));
    return std::accumulate(layers.begin(), layers.begin() + version, 0.0);
}

double VideoCatalog::enhancement_mb(SegmentId id, int version) const {
    const auto &layers = segment(id).layer_mb;
    if (version < 1 || version > static_cast<int>(layers.size()))
        throw std::out_of_range(fmt::format("version {} outside 1..{}", version, layers.size()));
    return std::accumulate(layers.begin() + 1, layers.begin() + version, 0.0);
}

std::vector<std::string> SystemResources::violations() const {
    std::vector<std::string> out;
    auto positive = [&](double v, const char *name) {
        if (!(v > 0.0) || !std::isfinite(v)) out.push_back(fmt::format("{} must be positive, got {}", name, v));
    };
    positive(bandwidth_hz, "bandwidth_hz");
    positive(computing_hz, "computing_hz");
    positive(cycles_per_mb, "cycles_per_mb");
    positive(downlink_power_w, "downlink_power_w");
    positive(noise_power_w, "noise_power_w");
    positive(slot_seconds, "slot_seconds");
    return out;
}

}  // namespace mcast
