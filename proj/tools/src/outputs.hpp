#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mcast/policies.hpp"
#include "mcast/slot_division.hpp"

namespace mcast::cli {

/// One JSON object per slot, keys in fixed order.
std::string report_line(int episode, const StepRecord &record);
/// One JSON object per SQP iterate.
std::string sqp_trace_line(int episode, int slot, const SqpIterate &iterate);

/// Collects per-metric samples for the summary CSV. `reward` is per slot; the
/// QoE components are per (slot, SMG) over SMGs that had planned segments.
class SummaryCollector {
public:
    void add(const StepRecord &record);
    /// Header `metric,count,mean,median,q1,q3,iqr,min,max`.
    void write_csv(std::ostream &out) const;

private:
    std::vector<std::pair<std::string, std::vector<double>>> &series();
    std::vector<std::pair<std::string, std::vector<double>>> series_;
};

void write_curve_csv(std::ostream &out, const std::vector<CurvePoint> &curve);
/// Per-episode min/mean/max of mean_reward across trials.
void write_envelope_csv(std::ostream &out, const std::vector<std::vector<CurvePoint>> &trials);

std::string format_double(double value);

}  // namespace mcast::cli
