#include "mcast/environment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace mcast {

std::string_view to_string(Scheme scheme) { return scheme == Scheme::proposed ? "proposed" : "wdt"; }

std::optional<Scheme> parse_scheme(std::string_view name) {
    if (name == "proposed") return Scheme::proposed;
    if (name == "wdt") return Scheme::wdt;
    return std::nullopt;
}

std::vector<bool> sample_swipes(Rng &rng, std::span<const SegmentId> playheads, const VideoCatalog &catalog) {
    std::vector<bool> out(playheads.size());
    for (std::size_t g = 0; g < playheads.size(); ++g) {
        const double u = uniform01(rng);
        out[g] = catalog.contains(playheads[g]) && u < catalog.swipe_prob(playheads[g]);
    }
    return out;
}

double path_loss_gain(const ChannelModel &model, double distance_m) {
    return model.reference_gain * std::pow(distance_m / model.reference_distance_m, -model.path_loss_exponent);
}

std::vector<double> channel_gains(Rng &rng, const ChannelModel &model, std::span<const double> distances_m) {
    std::vector<double> gains(distances_m.size());
    for (std::size_t k = 0; k < gains.size(); ++k) {
        gains[k] = path_loss_gain(model, distances_m[k]);
        if (model.fading) gains[k] *= exponential(rng);
    }
    return gains;
}

Environment::Environment(Scenario scenario, Scheme scheme)
    : scenario_(std::move(scenario)), scheme_(scheme), horizon_(scenario_.horizon) {
    auto problems = scenario_.violations();
    if (!problems.empty()) throw ConfigError(std::move(problems));

    std::map<int, std::size_t> index;
    for (std::size_t k = 0; k < scenario_.users.size(); ++k) index[scenario_.users[k].id] = k;
    for (const auto &smg : scenario_.smgs) {
        auto &m = members_.emplace_back();
        for (int u : smg.users) m.push_back(index.at(u));
    }

    gain_scale_ = 0.0;
    if (scenario_.trace) {
        for (const auto &slot : scenario_.trace->slots)
            for (const auto &[_, gain] : slot) gain_scale_ = std::max(gain_scale_, gain);
    } else {
        for (const auto &u : scenario_.users) {
            const double d = scenario_.channel.mobility ? std::max(scenario_.channel.min_distance_m,
                                                                   std::min(u.distance_m, scenario_.channel.max_distance_m))
                                                        : u.distance_m;
            gain_scale_ = std::max(gain_scale_, path_loss_gain(scenario_.channel, d));
        }
    }
    if (!(gain_scale_ > 0.0)) gain_scale_ = 1.0;
    reset();
}

BufferAccounting Environment::accounting() const {
    return scheme_ == Scheme::proposed ? BufferAccounting::current_video : BufferAccounting::aggregate;
}

void Environment::set_horizon(int slots) {
    if (slots < 1) throw std::invalid_argument("horizon must be at least one slot");
    horizon_ = slots;
}

QoeContext Environment::context() const { return make_context(scenario_.catalog, scenario_.resources); }

int Environment::branch_count() const { return static_cast<int>(smgs_.size()) * scenario_.n_max; }

std::vector<double> Environment::reset() { return reset(scenario_.seed); }

std::vector<double> Environment::reset(std::uint64_t seed) {
    swipe_rng_.seed(mix_seed(seed, 10));
    channel_rng_.seed(mix_seed(seed, 11));
    slot_ = 0;
    avg_version_ = (scenario_.catalog.layer_count() + 1) / 2;

    const auto G = scenario_.smgs.size();
    smgs_.assign(G, SmgState{});
    for (std::size_t g = 0; g < G; ++g) {
        const auto &spec = scenario_.smgs[g];
        auto &smg = smgs_[g];
        smg.id = static_cast<int>(g) + 1;
        smg.users = spec.users;
        smg.buffers = VirtualBufferSet(G - g);
        smg.lambda_rebuffer = spec.lambda_rebuffer;
        smg.lambda_variation = spec.lambda_variation;
        smg.playhead = {spec.start_video, 0};
    }

    distances_.clear();
    speeds_.clear();
    for (const auto &u : scenario_.users) distances_.push_back(u.distance_m);
    if (scenario_.channel.mobility) {
        const auto &c = scenario_.channel;
        for (auto &d : distances_) {
            d = std::clamp(d, c.min_distance_m, c.max_distance_m);
            const double speed = uniform(channel_rng_, c.speed_min_mps, c.speed_max_mps);
            speeds_.push_back(uniform01(channel_rng_) < 0.5 ? -speed : speed);
        }
    }
    sample_channels();
    refresh_plan();
    return observation();
}

void Environment::sample_channels() {
    std::vector<double> gains;
    if (scenario_.trace) {
        const auto &row = scenario_.trace->slots[static_cast<std::size_t>(slot_) % scenario_.trace->slots.size()];
        for (const auto &u : scenario_.users) gains.push_back(row.at(u.id));
    } else {
        gains = channel_gains(channel_rng_, scenario_.channel, distances_);
    }
    for (std::size_t g = 0; g < smgs_.size(); ++g) {
        smgs_[g].gains.clear();
        for (auto k : members_[g]) smgs_[g].gains.push_back(gains[k]);
    }
}

void Environment::refresh_plan() {
    std::optional<SegmentId> anchor;
    for (const auto &smg : smgs_)
        if (!smg.finished && (!anchor || smg.playhead < *anchor)) anchor = smg.playhead;
    distribution_ = anchor ? compute_distribution(scenario_.catalog, *anchor) : WatchDistribution{};

    PlanOptions options;
    options.avg_version = avg_version_;
    options.n_max = scenario_.n_max;
    options.order = scheme_ == Scheme::proposed ? BufferingOrder::watch_probability : BufferingOrder::sequential;
    plan_ = build_plan(scenario_.catalog, smgs_, distribution_, scenario_.resources, options);
}

std::vector<double> Environment::observation() const {
    std::vector<double> obs;
    obs.reserve(observation_size());
    const double buffer_scale = 10.0 * scenario_.resources.slot_seconds;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto &smg : smgs_) {
        for (double h : smg.gains) worst = std::min(worst, h);
        const double buffer = accounting() == BufferAccounting::current_video ? smg.buffers.current() : smg.buffers.total();
        obs.push_back(buffer / buffer_scale);
        obs.push_back(worst / gain_scale_);
        obs.push_back(smg.last_quality);
    }
    return obs;
}

std::vector<std::vector<int>> Environment::versions_from_actions(std::span<const int> actions) const {
    if (actions.size() != static_cast<std::size_t>(branch_count()))
        throw std::invalid_argument(fmt::format("expected {} branch actions, got {}", branch_count(), actions.size()));
    std::vector<std::vector<int>> versions(smgs_.size());
    for (std::size_t g = 0; g < smgs_.size(); ++g)
        for (std::size_t m = 0; m < plan_.smgs[g].size(); ++m)
            versions[g].push_back(actions[g * scenario_.n_max + m] + 1);
    return versions;
}

std::vector<SmgLoad> Environment::loads(std::span<const std::vector<int>> versions, BufferAccounting accounting) const {
    return make_loads(versions, plan_, smgs_, scenario_.catalog, scenario_.resources, accounting);
}

SchedulingDecision Environment::complete_decision(std::vector<std::vector<int>> versions, const SqpOptions &options,
                                                  SqpResult *trace) const {
    const auto view = loads(versions, accounting());
    const auto objective = TransformedObjective::from_loads(view, context());
    auto result = slsqp_optimize(objective, initial_split(objective, options.beta_min), options);
    SchedulingDecision decision{std::move(versions), result.beta};
    if (trace) *trace = std::move(result);
    return decision;
}

std::vector<std::string> Environment::decision_violations(const SchedulingDecision &d) const {
    std::vector<std::string> out;
    const auto G = smgs_.size();
    if (d.versions.size() != G || d.slot_ratios.size() != G) {
        out.push_back(fmt::format("decision covers {} version lists and {} ratios for {} SMGs", d.versions.size(),
                                  d.slot_ratios.size(), G));
        return out;
    }
    const int L = scenario_.catalog.layer_count();
    double sum = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        if (d.versions[g].size() != plan_.smgs[g].size())
            out.push_back(fmt::format("SMG {} selects {} versions for {} planned segments", g + 1, d.versions[g].size(),
                                      plan_.smgs[g].size()));
        for (int v : d.versions[g])
            if (v < 1 || v > L) out.push_back(fmt::format("SMG {} selects version {} outside 1..{}", g + 1, v, L));
        const double beta = d.slot_ratios[g];
        if (!(beta >= 0.0 && beta <= 1.0)) out.push_back(fmt::format("SMG {} slot ratio {} outside [0, 1]", g + 1, beta));
        if (beta == 0.0 && !plan_.smgs[g].empty())
            out.push_back(fmt::format("SMG {} has planned segments but no slot share", g + 1));
        sum += beta;
    }
    if (sum > 1.0 + 1e-9) out.push_back(fmt::format("slot ratios sum to {} > 1", sum));
    return out;
}

void Environment::next_video(std::size_t g) {
    auto &smg = smgs_[g];
    smg.segment_offset_s = 0.0;
    if (smg.playhead.video + 1 >= scenario_.catalog.video_count()) {
        smg.finished = true;
        smg.playhead = {scenario_.catalog.video_count(), 0};
    } else {
        smg.playhead = {smg.playhead.video + 1, 0};
    }
}

void Environment::play(std::size_t g, double seconds, bool &finished_video) {
    auto &smg = smgs_[g];
    finished_video = false;
    if (smg.finished) return;
    const double tau = scenario_.catalog.segment_seconds();
    double position = smg.segment_offset_s + seconds;
    while (position >= tau) {
        position -= tau;
        if (smg.playhead.segment + 1 >= scenario_.catalog.segment_count(smg.playhead.video)) {
            finished_video = true;
            next_video(g);
            return;
        }
        ++smg.playhead.segment;
    }
    smg.segment_offset_s = position;
}

StepResult Environment::step(const SchedulingDecision &decision) {
    if (done()) throw std::logic_error("episode already reached its horizon");
    if (auto problems = decision_violations(decision); !problems.empty()) {
        std::string joined = "infeasible decision:";
        for (const auto &p : problems) joined += " " + p + ";";
        throw std::invalid_argument(joined);
    }

    const auto G = smgs_.size();
    const auto ctx = context();
    StepResult result;
    const auto truth = loads(decision.versions, BufferAccounting::current_video);
    result.report = evaluate_qoe(truth, decision.slot_ratios, ctx);
    result.reward = result.report.mg_total;
    result.estimated_reward =
        accounting() == BufferAccounting::current_video
            ? result.reward
            : evaluate_qoe(loads(decision.versions, accounting()), decision.slot_ratios, ctx).mg_total;

    // Content multicast to SMG g is also received by every lagging SMG d <= g.
    for (std::size_t g = 0; g < G; ++g)
        for (const auto &seg : plan_.smgs[g])
            for (std::size_t d = 0; d <= g; ++d) smgs_[d].buffered.insert(seg.id);

    const auto counts = plan_.counts();
    const double T = scenario_.resources.slot_seconds;
    const double tau = scenario_.catalog.segment_seconds();
    std::vector<SegmentId> playheads;
    result.finished_video.assign(G, false);
    for (std::size_t g = 0; g < G; ++g) {
        auto &smg = smgs_[g];
        const double before = smg.buffers.current();
        smg.buffers.advance(std::span<const int>(counts).subspan(g), T, tau);
        const double played = before + tau * counts[g] - smg.buffers.current();
        bool finished_video = false;
        play(g, played, finished_video);
        if (finished_video) smg.buffers.video_transition();
        result.finished_video[g] = finished_video;
        playheads.push_back(smg.playhead);
    }

    const auto draws = sample_swipes(swipe_rng_, playheads, scenario_.catalog);
    result.swiped.assign(G, false);
    for (std::size_t g = 0; g < G; ++g) {
        if (result.finished_video[g] || smgs_[g].finished || !draws[g]) continue;
        result.swiped[g] = true;
        smgs_[g].buffers.apply_swipe(true);
        next_video(g);
    }

    int versions = 0, total = 0;
    for (std::size_t g = 0; g < G; ++g) {
        auto &smg = smgs_[g];
        const auto &quality = result.report.smgs[g].segment_quality;
        if (!quality.empty()) smg.last_quality = quality.back();
        for (int v : decision.versions[g]) {
            total += v;
            ++versions;
        }
        std::erase_if(smg.buffered, [&](const SegmentId &id) { return id < smg.playhead; });
    }
    if (versions > 0)
        avg_version_ = std::clamp(static_cast<int>(std::lround(static_cast<double>(total) / versions)), 1,
                                  scenario_.catalog.layer_count());

    ++slot_;
    if (scenario_.channel.mobility && !scenario_.trace) {
        const auto &c = scenario_.channel;
        for (std::size_t k = 0; k < distances_.size(); ++k) {
            double d = distances_[k] + speeds_[k] * T;
            while (d < c.min_distance_m || d > c.max_distance_m) {
                d = d < c.min_distance_m ? 2.0 * c.min_distance_m - d : 2.0 * c.max_distance_m - d;
                speeds_[k] = -speeds_[k];
            }
            distances_[k] = d;
        }
    }
    sample_channels();
    refresh_plan();
    result.observation = observation();
    result.terminal = done();
    return result;
}

}  // namespace mcast
