#pragma once

#include <limits>
#include <span>
#include <vector>

#include "mcast/qoe.hpp"

namespace mcast {

/// beta-dependence of one SMG's contribution to -sum_g weighted QoE once the
/// versions are fixed. The binding delay is work_s / beta, so the term is
///   constant + weight * lambda_rebuffer * max(work_s / beta - buffer_s, 0).
struct ObjectiveTerm {
    double work_s = 0.0;    ///< max(transmission, transcoding) delay at beta = 1
    double buffer_s = 0.0;  ///< buffer the rebuffering is measured against
    double weight = 0.0;
    double lambda_rebuffer = 0.0;
    double constant = 0.0;  ///< -weight * (Q_g - lambda_2 V_g)

    /// phi_{g,1}: coefficient of 1/beta while rebuffering is active.
    [[nodiscard]] double active_coefficient() const { return weight * lambda_rebuffer * work_s; }
    /// Slot share at which the service delay equals the buffer. Rebuffering is
    /// active below it; +infinity for an empty buffer.
    [[nodiscard]] double kink() const;
    [[nodiscard]] bool has_work() const { return work_s > 0.0; }
    [[nodiscard]] double value(double beta) const;
};

/// Convex, separable objective over the slot-division ratios.
class TransformedObjective {
public:
    TransformedObjective() = default;
    explicit TransformedObjective(std::vector<ObjectiveTerm> terms);

    static TransformedObjective from_loads(std::span<const SmgLoad> loads, const QoeContext &ctx);

    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] const std::vector<ObjectiveTerm> &terms() const { return terms_; }

    [[nodiscard]] double value(std::span<const double> beta) const;
    /// Per-SMG subgradient; at the kink the active slope is scaled by `kink_sigma`.
    [[nodiscard]] std::vector<double> subgradient(std::span<const double> beta, double kink_sigma = 0.5) const;
    /// Diagonal second derivative; zero wherever rebuffering is inactive.
    [[nodiscard]] std::vector<double> curvature(std::span<const double> beta) const;

private:
    std::vector<ObjectiveTerm> terms_;
};

struct QpSolution {
    std::vector<double> direction;
    double multiplier = 0.0;    ///< for sum(beta + d) <= budget
    double kkt_residual = 0.0;  ///< scaled stationarity/feasibility/complementarity residual
};

/// min g'd + d'Hd/2  s.t.  sum(beta + d) <= budget,  lower <= beta + d <= upper,
/// with H = diag(hessian_diag) strictly positive. Solved exactly by walking the
/// breakpoints of the single multiplier, which fixes the active bound set.
/// Throws std::domain_error if sum(lower) > budget.
QpSolution solve_qp_subproblem(std::span<const double> beta, std::span<const double> gradient,
                               std::span<const double> hessian_diag, std::span<const double> lower,
                               std::span<const double> upper, double budget = 1.0);

struct SqpOptions {
    double tolerance = 1e-6;
    int max_iterations = 200;
    double beta_min = 1e-4;
    double hessian_regularization = 1e-6;
    double armijo_c = 1e-4;
    bool record_trace = false;
};

struct SqpIterate {
    int iteration = 0;
    std::vector<double> beta;
    double objective = 0.0;
    double step = 0.0;  ///< accepted line-search step alpha
};

struct SqpResult {
    std::vector<double> beta;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool hit_iteration_cap = false;
    std::vector<SqpIterate> trace;
};

/// Feasible start: idle SMGs at beta_min, the rest split evenly.
std::vector<double> initial_split(const TransformedObjective &objective, double beta_min);

/// Sequential quadratic programming with Armijo backtracking. SMGs without
/// work are pinned at beta_min. The objective is flat past each kink, so every
/// share is capped there and the search runs on a smooth box; spare slot left
/// once every SMG stops rebuffering is handed out pro rata. Throws
/// std::invalid_argument if beta0 is infeasible.
SqpResult slsqp_optimize(const TransformedObjective &objective, std::span<const double> beta0,
                         const SqpOptions &options = {});

/// Midpoint-convexity check of the objective along the segment between two points.
bool convexity_probe(const TransformedObjective &objective, std::span<const double> beta_a,
                     std::span<const double> beta_b, double theta, double slack = 1e-9);

}  // namespace mcast
