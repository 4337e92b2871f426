#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcast {

/// Position of a segment in the recommended list. Both indices are 0-based.
struct SegmentId {
    int video = 0;
    int segment = 0;

    auto operator<=>(const SegmentId &) const = default;
};

struct Segment {
    double swipe_prob = 0.0;       ///< Probability the viewer swipes away while this segment plays.
    std::vector<double> layer_mb;  ///< SVC layer sizes in megabits, base layer first.
};

struct Video {
    std::vector<Segment> segments;
};

/// Recommended video list with per-segment SVC layer sizes and swipe probabilities.
///
/// Every video carries the same number of layers L. Version l of a segment
/// needs layers 1..l, so its size is the cumulative sum of the first l layers.
class VideoCatalog {
public:
    VideoCatalog() = default;

    /// Throws ConfigError listing every invariant violation.
    VideoCatalog(std::vector<Video> videos, double segment_seconds);

    [[nodiscard]] const std::vector<Video> &videos() const { return videos_; }
    [[nodiscard]] int video_count() const { return static_cast<int>(videos_.size()); }
    [[nodiscard]] int segment_count(int video) const;
    [[nodiscard]] int total_segments() const;
    [[nodiscard]] int layer_count() const;
    [[nodiscard]] double segment_seconds() const { return segment_seconds_; }

    [[nodiscard]] bool contains(SegmentId id) const;
    [[nodiscard]] const Segment &segment(SegmentId id) const;
    [[nodiscard]] double swipe_prob(SegmentId id) const { return segment(id).swipe_prob; }

    /// Size in megabits of version `version` (1-based), i.e. layers 1..version.
    [[nodiscard]] double cumulative_mb(SegmentId id, int version) const;
    /// Size of enhancement layers 2..version; zero for the base version.
    [[nodiscard]] double enhancement_mb(SegmentId id, int version) const;

    /// Re-checks every invariant; empty when valid.
    [[nodiscard]] std::vector<std::string> violations() const;

    static std::vector<std::string> check(const std::vector<Video> &videos, double segment_seconds);

private:
    std::vector<Video> videos_;
    double segment_seconds_ = 2.0;
};

/// Reserved resources of the multicast group and the slot length.
struct SystemResources {
    double bandwidth_hz = 10e6;          ///< B
    double computing_hz = 10e9;          ///< C, cycles per second
    double cycles_per_mb = 4e9;          ///< mu, transcoding cycles per megabit
    double downlink_power_w = 0.501187;  ///< P_D (27 dBm)
    double noise_power_w = 3.98107e-14;  ///< N_0
    double slot_seconds = 5.0;           ///< T_s

    [[nodiscard]] std::vector<std::string> violations() const;
};

/// Joint per-slot action: one version per planned segment plus slot-division ratios.
struct SchedulingDecision {
    /// versions[g][m] in 1..L for the m-th segment of SMG g's plan.
    std::vector<std::vector<int>> versions;
    /// beta[g], the share of the slot granted to SMG g.
    std::vector<double> slot_ratios;
};

/// Aggregated QoE terms of one sub-multicast group for one slot.
struct SmgQoe {
    double transmission_delay = 0.0;  ///< D_g
    double service_delay = 0.0;       ///< S_g
    double rebuffering = 0.0;         ///< R_g
    double quality = 0.0;             ///< Q_g (sum over buffered segments)
    double variation = 0.0;           ///< V_g
    double qoe = 0.0;                 ///< Upsilon_g
    double weight = 0.0;              ///< omega_g
    double weighted = 0.0;            ///< omega_g * Upsilon_g
    std::vector<double> segment_quality;
};

struct QoeReport {
    std::vector<SmgQoe> smgs;
    double mg_total = 0.0;
};

/// Raised for malformed scenarios. Carries every violation found, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations);

    [[nodiscard]] const std::vector<std::string> &violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

}  // namespace mcast
