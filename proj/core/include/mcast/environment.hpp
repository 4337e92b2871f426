#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcast/buffering.hpp"
#include "mcast/qoe.hpp"
#include "mcast/rng.hpp"
#include "mcast/scenario.hpp"
#include "mcast/slot_division.hpp"
#include "mcast/smg.hpp"
#include "mcast/watch_prob.hpp"

namespace mcast {

/// proposed: watch-probability buffering order, rebuffering against the
/// current-video buffer. wdt: sequential order, rebuffering estimated against
/// everything buffered across all virtual buffers.
enum class Scheme { proposed, wdt };

std::string_view to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

struct StepResult {
    QoeReport report;               ///< true QoE of the slot
    double reward = 0.0;            ///< report.mg_total
    double estimated_reward = 0.0;  ///< QoE under the scheme's own buffer accounting
    std::vector<double> observation;
    bool terminal = false;
    std::vector<bool> swiped;
    std::vector<bool> finished_video;  ///< reached the end of the video by playback
};

/// One Bernoulli draw per playhead with that segment's swipe probability.
/// A draw is consumed even for playheads outside the catalog, which never swipe.
std::vector<bool> sample_swipes(Rng &rng, std::span<const SegmentId> playheads, const VideoCatalog &catalog);

/// Mean power gain at `distance_m` under log-distance path loss.
double path_loss_gain(const ChannelModel &model, double distance_m);

/// Per-user gains, one unit-mean exponential fading draw each when enabled.
std::vector<double> channel_gains(Rng &rng, const ChannelModel &model, std::span<const double> distances_m);

/// Slot-level simulator of one multicast group.
class Environment {
public:
    /// Throws ConfigError if the scenario is invalid.
    explicit Environment(Scenario scenario, Scheme scheme = Scheme::proposed);

    /// Zero buffers, start playheads, fresh channels, plan for slot 0.
    std::vector<double> reset();
    std::vector<double> reset(std::uint64_t seed);

    /// Applies one slot. Throws std::invalid_argument for an infeasible
    /// decision and std::logic_error after the horizon.
    StepResult step(const SchedulingDecision &decision);

    [[nodiscard]] const Scenario &scenario() const { return scenario_; }
    [[nodiscard]] Scheme scheme() const { return scheme_; }
    [[nodiscard]] BufferAccounting accounting() const;
    [[nodiscard]] int horizon() const { return horizon_; }
    void set_horizon(int slots);

    [[nodiscard]] const BufferingPlan &plan() const { return plan_; }
    [[nodiscard]] const WatchDistribution &distribution() const { return distribution_; }
    [[nodiscard]] std::span<const SmgState> smgs() const { return smgs_; }
    [[nodiscard]] int slot() const { return slot_; }
    [[nodiscard]] bool done() const { return slot_ >= horizon_; }
    [[nodiscard]] int avg_version() const { return avg_version_; }
    [[nodiscard]] QoeContext context() const;

    /// Per SMG: buffer / (10 T_s), worst gain over SMGs 1..g / scenario gain scale, Q_{g,0}.
    [[nodiscard]] std::vector<double> observation() const;
    [[nodiscard]] std::size_t observation_size() const { return 3 * smgs_.size(); }
    /// One branch per (SMG, plan slot), n_max slots per SMG.
    [[nodiscard]] int branch_count() const;
    [[nodiscard]] int action_count() const { return scenario_.catalog.layer_count(); }

    /// Maps per-branch action indices to versions for the current plan;
    /// padded branches are ignored.
    [[nodiscard]] std::vector<std::vector<int>> versions_from_actions(std::span<const int> actions) const;
    [[nodiscard]] std::vector<SmgLoad> loads(std::span<const std::vector<int>> versions, BufferAccounting accounting) const;
    /// Slot ratios from the SQP solver on the scheme's own view of the loads.
    [[nodiscard]] SchedulingDecision complete_decision(std::vector<std::vector<int>> versions,
                                                       const SqpOptions &options = {},
                                                       SqpResult *trace = nullptr) const;
    [[nodiscard]] std::vector<std::string> decision_violations(const SchedulingDecision &decision) const;

private:
    void sample_channels();
    void refresh_plan();
    void play(std::size_t g, double seconds, bool &finished_video);
    void next_video(std::size_t g);

    Scenario scenario_;
    Scheme scheme_;
    int horizon_;
    double gain_scale_ = 1.0;
    std::vector<std::vector<std::size_t>> members_;  ///< per SMG, indices into scenario users

    std::vector<SmgState> smgs_;
    std::vector<double> distances_;
    std::vector<double> speeds_;  ///< signed, m/s
    Rng swipe_rng_;
    Rng channel_rng_;
    int slot_ = 0;
    int avg_version_ = 1;
    WatchDistribution distribution_;
    BufferingPlan plan_;
};

}  // namespace mcast
