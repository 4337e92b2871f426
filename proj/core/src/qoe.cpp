#include "mcast/qoe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace mcast {

double SmgLoad::total_mb() const { return std::accumulate(selected_mb.begin(), selected_mb.end(), 0.0); }

double multicast_delay(const SmgLoad &load, double beta) {
    const double bits = load.total_mb();
    if (bits == 0.0) return 0.0;
    const double rate_mbps = beta * load.min_rate_bps / 1e6;
    if (!(rate_mbps > 0.0)) return std::numeric_limits<double>::infinity();
    return bits / rate_mbps;
}

double transcode_delay(const SmgLoad &load, double beta, const QoeContext &ctx) {
    const double bits = load.total_mb();
    if (bits == 0.0) return 0.0;
    if (!(beta > 0.0)) return std::numeric_limits<double>::infinity();
    return ctx.cycles_per_mb * bits / (beta * ctx.computing_hz);
}

double service_delay(const SmgLoad &load, double beta, const QoeContext &ctx) {
    return std::max(multicast_delay(load, beta), transcode_delay(load, beta, ctx));
}

double rebuffering(double service_delay_s, double buffer_s) { return std::max(service_delay_s - buffer_s, 0.0); }

double ssim_from_bitrate(double mbps) { return 1.0 - 1.0 / (2.0 * mbps + 1.0); }

std::vector<double> segment_qualities(std::span<const double> selected_mb, double segment_seconds) {
    std::vector<double> out;
    out.reserve(selected_mb.size());
    for (double mb : selected_mb) out.push_back(ssim_from_bitrate(mb / segment_seconds));
    return out;
}

double video_quality(std::span<const double> segment_quality) {
    return std::accumulate(segment_quality.begin(), segment_quality.end(), 0.0);
}

double quality_variation(std::span<const double> segment_quality, double last_quality) {
    if (segment_quality.empty()) return 0.0;
    double sum = 0.0;
    double previous = last_quality;
    for (double q : segment_quality) {
        sum += std::abs(q - previous);
        previous = q;
    }
    return sum / static_cast<double>(segment_quality.size());
}

double smg_qoe(double quality, double rebuffering_s, double variation, double lambda_rebuffer,
               double lambda_variation) {
    return quality - lambda_rebuffer * rebuffering_s - lambda_variation * variation;
}

std::vector<double> weighting(std::span<const std::vector<double>> priorities) {
    std::vector<double> mass;
    mass.reserve(priorities.size());
    for (const auto &phi : priorities) mass.push_back(std::accumulate(phi.begin(), phi.end(), 0.0));
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total > 0.0)) return std::vector<double>(priorities.size(), 1.0 / static_cast<double>(priorities.size()));
    for (double &m : mass) m /= total;
    return mass;
}

std::vector<double> weighting(std::span<const SmgLoad> loads) {
    std::vector<std::vector<double>> phi;
    phi.reserve(loads.size());
    for (const auto &load : loads) phi.push_back(load.priorities);
    return weighting(phi);
}

double weighted_qoe(double qoe, double weight) { return weight * qoe; }

QoeReport evaluate_qoe(std::span<const SmgLoad> loads, std::span<const double> betas, const QoeContext &ctx) {
    if (betas.size() != loads.size()) throw std::invalid_argument("one slot ratio per SMG is required");
    QoeReport report;
    report.smgs.resize(loads.size());
    const auto weights = weighting(loads);
    for (std::size_t g = 0; g < loads.size(); ++g) {
        const auto &load = loads[g];
        auto &out = report.smgs[g];
        out.weight = weights[g];
        if (load.empty()) continue;  // neutral element: nothing buffered this slot
        out.transmission_delay = multicast_delay(load, betas[g]);
        out.service_delay = service_delay(load, betas[g], ctx);
        out.rebuffering = rebuffering(out.service_delay, load.buffer_s);
        out.segment_quality = segment_qualities(load.selected_mb, ctx.segment_seconds);
        out.quality = video_quality(out.segment_quality);
        out.variation = quality_variation(out.segment_quality, load.last_quality);
        out.qoe = smg_qoe(out.quality, out.rebuffering, out.variation, load.lambda_rebuffer, load.lambda_variation);
        out.weighted = weighted_qoe(out.qoe, out.weight);
    }
    for (const auto &s : report.smgs) report.mg_total += s.weighted;
    return report;
}

QoeContext make_context(const VideoCatalog &catalog, const SystemResources &res) {
    return {catalog.segment_seconds(), res.cycles_per_mb, res.computing_hz};
}

std::vector<SmgLoad> make_loads(std::span<const std::vector<int>> versions, const BufferingPlan &plan,
                                std::span<const SmgState> smgs, const VideoCatalog &catalog,
                                const SystemResources &res, BufferAccounting accounting) {
    if (versions.size() != plan.smgs.size() || smgs.size() != plan.smgs.size())
        throw std::invalid_argument(fmt::format("decision covers {} SMGs, plan has {}", versions.size(), plan.smgs.size()));
    std::vector<SmgLoad> loads(smgs.size());
    for (std::size_t g = 0; g < smgs.size(); ++g) {
        const auto &omega = plan.smgs[g];
        if (versions[g].size() != omega.size())
            throw std::invalid_argument(
                fmt::format("SMG {} has {} versions for {} planned segments", g + 1, versions[g].size(), omega.size()));
        auto &load = loads[g];
        for (std::size_t m = 0; m < omega.size(); ++m) {
            load.selected_mb.push_back(catalog.cumulative_mb(omega[m].id, versions[g][m]));
            load.priorities.push_back(omega[m].priority);
        }
        load.min_rate_bps = multicast_min_rate(smgs, g, res);
        load.buffer_s = accounting == BufferAccounting::current_video ? smgs[g].buffers.current()
                                                                      : smgs[g].buffers.total();
        load.last_quality = smgs[g].last_quality;
        load.lambda_rebuffer = smgs[g].lambda_rebuffer;
        load.lambda_variation = smgs[g].lambda_variation;
    }
    return loads;
}

std::vector<SmgLoad> make_loads(const SchedulingDecision &decision, const BufferingPlan &plan,
                                std::span<const SmgState> smgs, const VideoCatalog &catalog,
                                const SystemResources &res, BufferAccounting accounting) {
    return make_loads(std::span<const std::vector<int>>(decision.versions), plan, smgs, catalog, res, accounting);
}

}  // namespace mcast
