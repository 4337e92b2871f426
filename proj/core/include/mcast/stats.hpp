#pragma once

#include <span>
#include <string>
#include <vector>

namespace mcast {

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;

    [[nodiscard]] double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);
/// Box-plot statistics; all zero for empty input.
Summary summarize(std::span<const double> values);

/// Average ranks (ties share the mean rank).
std::vector<double> ranks(std::span<const double> values);
double spearman(std::span<const double> x, std::span<const double> y);
/// One-sided exact sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p(int wins, int trials);

}  // namespace mcast
