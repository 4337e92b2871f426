#include "outputs.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "mcast/stats.hpp"

namespace mcast::cli {

using json = nlohmann::ordered_json;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    return fmt::format("{:.17g}", value);
}

std::string report_line(int episode, const StepRecord &record) {
    const auto &r = record.result;
    json smgs = json::array();
    for (std::size_t g = 0; g < r.report.smgs.size(); ++g) {
        const auto &s = r.report.smgs[g];
        smgs.push_back({{"smg", g + 1},
                        {"slot_ratio", record.decision.slot_ratios[g]},
                        {"segments", record.decision.versions[g].size()},
                        {"versions", record.decision.versions[g]},
                        {"transmission_delay", s.transmission_delay},
                        {"service_delay", s.service_delay},
                        {"rebuffering", s.rebuffering},
                        {"quality", s.quality},
                        {"variation", s.variation},
                        {"qoe", s.qoe},
                        {"weight", s.weight},
                        {"weighted_qoe", s.weighted},
                        {"swiped", static_cast<bool>(r.swiped[g])},
                        {"finished_video", static_cast<bool>(r.finished_video[g])}});
    }
    json line{{"episode", episode},
              {"slot", record.slot},
              {"reward", r.reward},
              {"estimated_reward", r.estimated_reward},
              {"smgs", std::move(smgs)}};
    return line.dump();
}

std::string sqp_trace_line(int episode, int slot, const SqpIterate &it) {
    json line{{"episode", episode},
              {"slot", slot},
              {"iteration", it.iteration},
              {"beta", it.beta},
              {"objective", it.objective},
              {"step", it.step}};
    return line.dump();
}

std::vector<std::pair<std::string, std::vector<double>>> &SummaryCollector::series() {
    if (series_.empty())
        for (const char *name : {"reward", "rebuffering", "quality", "variation", "qoe", "weighted_qoe", "slot_ratio",
                                 "service_delay"})
            series_.emplace_back(name, std::vector<double>{});
    return series_;
}

void SummaryCollector::add(const StepRecord &record) {
    auto &s = series();
    s[0].second.push_back(record.result.reward);
    for (std::size_t g = 0; g < record.result.report.smgs.size(); ++g) {
        if (record.decision.versions[g].empty()) continue;
        const auto &q = record.result.report.smgs[g];
        s[1].second.push_back(q.rebuffering);
        s[2].second.push_back(q.quality);
        s[3].second.push_back(q.variation);
        s[4].second.push_back(q.qoe);
        s[5].second.push_back(q.weighted);
        s[6].second.push_back(record.decision.slot_ratios[g]);
        s[7].second.push_back(q.service_delay);
    }
}

void SummaryCollector::write_csv(std::ostream &out) const {
    out << "metric,count,mean,median,q1,q3,iqr,min,max\n";
    for (const auto &[name, values] : series_) {
        const auto s = summarize(values);
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", name, s.count, format_double(s.mean), format_double(s.median),
                           format_double(s.q1), format_double(s.q3), format_double(s.iqr()), format_double(s.min),
                           format_double(s.max));
    }
}

void write_curve_csv(std::ostream &out, const std::vector<CurvePoint> &curve) {
    out << "episode,mean_reward,epsilon,loss\n";
    for (const auto &p : curve)
        out << fmt::format("{},{},{},{}\n", p.episode, format_double(p.mean_reward), format_double(p.epsilon),
                           format_double(p.loss));
}

void write_envelope_csv(std::ostream &out, const std::vector<std::vector<CurvePoint>> &trials) {
    out << "episode,trials,min,mean,max\n";
    if (trials.empty()) return;
    std::size_t episodes = trials.front().size();
    for (const auto &t : trials) episodes = std::min(episodes, t.size());
    for (std::size_t e = 0; e < episodes; ++e) {
        double lo = trials.front()[e].mean_reward, hi = lo, sum = 0.0;
        for (const auto &t : trials) {
            lo = std::min(lo, t[e].mean_reward);
            hi = std::max(hi, t[e].mean_reward);
            sum += t[e].mean_reward;
        }
        out << fmt::format("{},{},{},{},{}\n", e, trials.size(), format_double(lo),
                           format_double(sum / static_cast<double>(trials.size())), format_double(hi));
    }
}

}  // namespace mcast::cli
