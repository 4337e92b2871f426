#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcast/bdqn.hpp"
#include "mcast/domain.hpp"

namespace mcast {

struct UserSpec {
    int id = 0;
    double distance_m = 100.0;  ///< initial distance to the base station

    bool operator==(const UserSpec &) const = default;
};

struct SmgSpec {
    std::vector<int> users;
    double lambda_rebuffer = 0.3;
    double lambda_variation = 0.6;
    int start_video = 0;  ///< 0-based video the SMG is watching at reset

    bool operator==(const SmgSpec &) const = default;
};

/// Log-distance path loss with optional unit-mean exponential fading and
/// optional back-and-forth pedestrian mobility along a line.
struct ChannelModel {
    double reference_gain = 1e-5;  ///< power gain at reference_distance_m
    double reference_distance_m = 1.0;
    double path_loss_exponent = 4.0;
    bool fading = true;
    bool mobility = false;
    double speed_min_mps = 2.0 / 3.6;
    double speed_max_mps = 5.0 / 3.6;
    double min_distance_m = 20.0;
    double max_distance_m = 300.0;

    bool operator==(const ChannelModel &) const = default;
};

/// Measured per-slot gains; row t holds gain by user id for slot t. Slots
/// beyond the trace wrap around.
struct ChannelTrace {
    std::vector<std::map<int, double>> slots;

    bool operator==(const ChannelTrace &) const = default;
};

/// Parameters of the synthetic catalog generator. Each video gets a constant
/// per-segment swipe hazard (geometric retention) around `mean_swipe`.
struct SyntheticCatalogSpec {
    int videos = 60;
    int min_segments = 4;
    int max_segments = 10;
    double mean_swipe = 0.2;
    double swipe_spread = 0.5;  ///< hazard drawn uniformly in mean * [1 - spread, 1 + spread]
    std::vector<double> layer_mb{1.0, 0.6, 0.8, 1.0};
    double size_jitter = 0.2;  ///< per-segment layer sizes scaled by U[1 - jitter, 1 + jitter]
    double segment_seconds = 2.0;
    std::uint64_t seed = 1;
};

std::vector<Video> generate_catalog(const SyntheticCatalogSpec &spec);

struct Scenario {
    VideoCatalog catalog;
    std::vector<UserSpec> users;
    std::vector<SmgSpec> smgs;
    SystemResources resources;
    ChannelModel channel;
    std::optional<ChannelTrace> trace;
    int horizon = 75;
    int n_max = 8;
    std::uint64_t seed = 1;
    AgentConfig agent;

    [[nodiscard]] int smg_count() const { return static_cast<int>(smgs.size()); }
    [[nodiscard]] std::vector<std::string> violations() const;
};

/// Every problem with a candidate scenario; empty when valid. Nothing is clamped.
std::vector<std::string> validate_config(const std::vector<Video> &videos, double segment_seconds,
                                         std::span<const UserSpec> users, std::span<const SmgSpec> smgs,
                                         const SystemResources &res);

/// Parses the JSON scenario format. Relative CSV paths resolve against
/// `base_dir`. Throws ConfigError with every violation found.
Scenario parse_scenario(std::string_view json_text, const std::filesystem::path &base_dir = {});
Scenario load_scenario(const std::filesystem::path &path);
/// Self-contained JSON (catalog and trace inlined); parse_scenario inverts it.
std::string serialize_scenario(const Scenario &scenario);

/// `video_id,segment_id,swipe_prob,layer1_mb,...,layerL_mb` with 1-based ids.
std::vector<Video> read_catalog_csv(const std::filesystem::path &path);
void write_catalog_csv(const std::filesystem::path &path, const VideoCatalog &catalog);
/// `slot,user_id,gain` with 0-based contiguous slots.
ChannelTrace read_channel_trace(const std::filesystem::path &path);
void write_channel_trace(const std::filesystem::path &path, const ChannelTrace &trace);

}  // namespace mcast
