#pragma once

#include <span>
#include <vector>

#include "mcast/buffering.hpp"
#include "mcast/domain.hpp"
#include "mcast/smg.hpp"

namespace mcast {

/// Everything the QoE model needs about one SMG once versions are fixed.
struct SmgLoad {
    std::vector<double> selected_mb;  ///< cumulative selected size per planned segment, in plan order
    std::vector<double> priorities;   ///< phi_{g,m}, parallel to selected_mb
    double min_rate_bps = 0.0;        ///< min rate over users of SMGs 1..g
    double buffer_s = 0.0;            ///< buffer the rebuffering estimate is measured against
    double last_quality = 0.0;        ///< Q_{g,0}
    double lambda_rebuffer = 0.0;
    double lambda_variation = 0.0;

    [[nodiscard]] double total_mb() const;
    [[nodiscard]] bool empty() const { return selected_mb.empty(); }
};

struct QoeContext {
    double segment_seconds = 2.0;
    double cycles_per_mb = 4e9;
    double computing_hz = 10e9;
};

/// How rebuffering is estimated: against the current-video virtual buffer, or
/// against everything buffered across all virtual buffers.
enum class BufferAccounting { current_video, aggregate };

/// D_g. Zero for an empty plan; +infinity when beta = 0 with work pending.
double multicast_delay(const SmgLoad &load, double beta);
/// Transcoding time of the selected bits with share beta of the computing capacity.
double transcode_delay(const SmgLoad &load, double beta, const QoeContext &ctx);
/// S_g = max(D_g, transcode time); transmission and transcoding overlap.
double service_delay(const SmgLoad &load, double beta, const QoeContext &ctx);
double rebuffering(double service_delay_s, double buffer_s);

/// SSIM from bitrate in Mbps: 1 - 1/(2b + 1).
double ssim_from_bitrate(double mbps);
std::vector<double> segment_qualities(std::span<const double> selected_mb, double segment_seconds);
double video_quality(std::span<const double> segment_quality);
/// Mean absolute quality change between consecutive segments, starting from
/// `last_quality`. Zero for an empty sequence.
double quality_variation(std::span<const double> segment_quality, double last_quality);
double smg_qoe(double quality, double rebuffering_s, double variation, double lambda_rebuffer,
               double lambda_variation);

/// omega_g = sum_m phi_{g,m} / sum_g sum_m phi_{g,m}; uniform when no SMG has priority mass.
std::vector<double> weighting(std::span<const std::vector<double>> priorities);
std::vector<double> weighting(std::span<const SmgLoad> loads);

double weighted_qoe(double qoe, double weight);

/// Full multicast QoE for one slot. `betas` has one ratio per SMG.
QoeReport evaluate_qoe(std::span<const SmgLoad> loads, std::span<const double> betas, const QoeContext &ctx);

/// Resolves a decision against the plan, the channels and the catalog.
/// Throws std::invalid_argument if the decision's shape does not match the plan.
std::vector<SmgLoad> make_loads(const SchedulingDecision &decision, const BufferingPlan &plan,
                                std::span<const SmgState> smgs, const VideoCatalog &catalog,
                                const SystemResources &res, BufferAccounting accounting);

/// Same as make_loads but with explicit per-SMG versions and no slot ratios.
std::vector<SmgLoad> make_loads(std::span<const std::vector<int>> versions, const BufferingPlan &plan,
                                std::span<const SmgState> smgs, const VideoCatalog &catalog,
                                const SystemResources &res, BufferAccounting accounting);

QoeContext make_context(const VideoCatalog &catalog, const SystemResources &res);

}  // namespace mcast
