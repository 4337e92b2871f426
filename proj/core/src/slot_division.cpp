#include "mcast/slot_division.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool at_kink(double beta, double kink) {
    return std::isfinite(kink) && std::abs(beta - kink) <= 1e-12 * std::max(1.0, kink);
}

// Rounding can leave a convex combination of feasible points a few ulps over
// the slot; take the excess from the largest share.
void trim_to_budget(std::vector<double> &beta, std::span<const double> lower) {
    const double excess = std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0;
    if (excess <= 0.0) return;
    const auto top = std::max_element(beta.begin(), beta.end());
    *top = std::max(lower[static_cast<std::size_t>(top - beta.begin())], *top - excess);
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

double ObjectiveTerm::kink() const {
    if (!has_work()) return 0.0;
    if (!(buffer_s > 0.0)) return kInf;
    return work_s / buffer_s;
}

double ObjectiveTerm::value(double beta) const {
    if (!has_work()) return constant;
    return constant + weight * lambda_rebuffer * std::max(work_s / beta - buffer_s, 0.0);
}

TransformedObjective::TransformedObjective(std::vector<ObjectiveTerm> terms) : terms_(std::move(terms)) {}

TransformedObjective TransformedObjective::from_loads(std::span<const SmgLoad> loads, const QoeContext &ctx) {
    const auto weights = weighting(loads);
    std::vector<ObjectiveTerm> terms;
    terms.reserve(loads.size());
    for (std::size_t g = 0; g < loads.size(); ++g) {
        const auto &load = loads[g];
        ObjectiveTerm t;
        t.weight = weights[g];
        t.lambda_rebuffer = load.lambda_rebuffer;
        t.buffer_s = load.buffer_s;
        if (!load.empty()) {
            t.work_s = std::max(multicast_delay(load, 1.0), transcode_delay(load, 1.0, ctx));
            const auto quality = segment_qualities(load.selected_mb, ctx.segment_seconds);
            const double q = video_quality(quality);
            const double v = quality_variation(quality, load.last_quality);
            t.constant = -t.weight * (q - load.lambda_variation * v);
        }
        terms.push_back(t);
    }
    return TransformedObjective(std::move(terms));
}

double TransformedObjective::value(std::span<const double> beta) const {
    double total = 0.0;
    for (std::size_t g = 0; g < terms_.size(); ++g) total += terms_[g].value(beta[g]);
    return total;
}

std::vector<double> TransformedObjective::subgradient(std::span<const double> beta, double kink_sigma) const {
    std::vector<double> grad(terms_.size(), 0.0);
    for (std::size_t g = 0; g < terms_.size(); ++g) {
        const auto &t = terms_[g];
        if (!t.has_work()) continue;
        const double slope = -t.active_coefficient() / (beta[g] * beta[g]);
        const double kink = t.kink();
        if (at_kink(beta[g], kink))
            grad[g] = kink_sigma * slope;
        else if (beta[g] < kink)
            grad[g] = slope;
    }
    return grad;
}

std::vector<double> TransformedObjective::curvature(std::span<const double> beta) const {
    std::vector<double> h(terms_.size(), 0.0);
    for (std::size_t g = 0; g < terms_.size(); ++g) {
        const auto &t = terms_[g];
        if (t.has_work() && beta[g] < t.kink() && !at_kink(beta[g], t.kink()))
            h[g] = 2.0 * t.active_coefficient() / (beta[g] * beta[g] * beta[g]);
    }
    return h;
}

QpSolution solve_qp_subproblem(std::span<const double> beta, std::span<const double> gradient,
                               std::span<const double> hessian_diag, std::span<const double> lower,
                               std::span<const double> upper, double budget) {
    const std::size_t n = beta.size();
    if (gradient.size() != n || hessian_diag.size() != n || lower.size() != n || upper.size() != n)
        throw std::invalid_argument("QP subproblem dimensions disagree");
    for (double h : hessian_diag)
        if (!(h > 0.0)) throw std::invalid_argument("QP subproblem needs a positive definite diagonal");
    if (std::accumulate(lower.begin(), lower.end(), 0.0) > budget * (1.0 + 1e-12))
        throw std::domain_error("linearized slot constraint is infeasible");

    auto point = [&](double nu, std::size_t i) {
        return std::clamp(beta[i] - (gradient[i] + nu) / hessian_diag[i], lower[i], upper[i]);
    };
    auto total = [&](double nu) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += point(nu, i);
        return s;
    };

    double nu = 0.0;
    if (total(0.0) > budget) {
        // Breakpoints where a coordinate leaves its upper bound or reaches its lower one.
        std::vector<double> knots{0.0};
        for (std::size_t i = 0; i < n; ++i) {
            for (double bound : {upper[i], lower[i]}) {
                const double k = hessian_diag[i] * (beta[i] - bound) - gradient[i];
                if (k > 0.0) knots.push_back(k);
            }
        }
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

        std::size_t k = 1;
        while (k < knots.size() && total(knots[k]) > budget) ++k;
        if (k == knots.size()) {
            // Past the last knot every coordinate sits at its lower bound.
            nu = knots.back();
        } else {
            const double mid = 0.5 * (knots[k - 1] + knots[k]);
            double fixed = 0.0, free_offset = 0.0, free_slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double unclamped = beta[i] - (gradient[i] + mid) / hessian_diag[i];
                if (unclamped <= lower[i] || unclamped >= upper[i]) {
                    fixed += std::clamp(unclamped, lower[i], upper[i]);
                } else {
                    free_offset += beta[i] - gradient[i] / hessian_diag[i];
                    free_slope += 1.0 / hessian_diag[i];
                }
            }
            nu = free_slope > 0.0 ? (fixed + free_offset - budget) / free_slope : knots[k];
            nu = std::clamp(nu, knots[k - 1], knots[k]);
        }
    }

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = point(nu, i);
    // With curvatures spanning many decades, g + nu cancels badly on flat
    // coordinates and the sum misses the budget. Close the gap along 1/h, which
    // is the same as nudging the multiplier and keeps stationarity intact.
    if (nu > 0.0) {
        for (int pass = 0; pass < 4; ++pass) {
            const double gap = std::accumulate(x.begin(), x.end(), 0.0) - budget;
            if (gap == 0.0) break;
            double inverse = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (x[i] > lower[i] && x[i] < upper[i]) inverse += 1.0 / hessian_diag[i];
            if (!(inverse > 0.0)) break;
            const double shift = gap / inverse;
            for (std::size_t i = 0; i < n; ++i)
                if (x[i] > lower[i] && x[i] < upper[i])
                    x[i] = std::clamp(x[i] - shift / hessian_diag[i], lower[i], upper[i]);
            nu += shift;
        }
    }

    QpSolution sol;
    sol.multiplier = nu;
    sol.direction.resize(n);
    double residual = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += x[i];
        sol.direction[i] = x[i] - beta[i];
        const double r = gradient[i] + hessian_diag[i] * sol.direction[i] + nu;
        const double scale = 1.0 + std::abs(gradient[i]) + std::abs(hessian_diag[i] * sol.direction[i]) + std::abs(nu);
        double violation = 0.0;
        if (lower[i] == upper[i])
            violation = 0.0;
        else if (x[i] <= lower[i])
            violation = std::max(0.0, -r);
        else if (x[i] >= upper[i])
            violation = std::max(0.0, r);
        else
            violation = std::abs(r);
        residual = std::max(residual, violation / scale);
    }
    residual = std::max(residual, std::max(0.0, sum - budget));
    residual = std::max(residual, std::abs(nu * (sum - budget)) / (1.0 + nu));
    sol.kkt_residual = residual;
    return sol;
}

std::vector<double> initial_split(const TransformedObjective &objective, double beta_min) {
    const auto &terms = objective.terms();
    std::vector<double> beta(terms.size(), beta_min);
    const auto working = static_cast<double>(std::count_if(terms.begin(), terms.end(),
                                                           [](const ObjectiveTerm &t) { return t.has_work(); }));
    if (working == 0.0) return beta;
    const double idle = static_cast<double>(terms.size()) - working;
    const double share = (1.0 - idle * beta_min) / working;
    for (std::size_t g = 0; g < terms.size(); ++g)
        if (terms[g].has_work()) beta[g] = share;
    return beta;
}

SqpResult slsqp_optimize(const TransformedObjective &objective, std::span<const double> beta0,
                         const SqpOptions &options) {
    const std::size_t n = objective.size();
    if (beta0.size() != n) throw std::invalid_argument("initial slot division has the wrong dimension");

    const auto &terms = objective.terms();
    std::vector<double> lower(n, options.beta_min), upper(n, 1.0);
    for (std::size_t g = 0; g < n; ++g)
        upper[g] = terms[g].has_work() ? std::clamp(terms[g].kink(), options.beta_min, 1.0) : options.beta_min;

    std::vector<double> beta(beta0.begin(), beta0.end());
    for (std::size_t g = 0; g < n; ++g) {
        if (beta[g] < lower[g] - 1e-12 || beta[g] > 1.0 + 1e-12)
            throw std::invalid_argument("initial slot division is outside the box");
    }
    if (std::accumulate(beta.begin(), beta.end(), 0.0) > 1.0 + 1e-9)
        throw std::invalid_argument("initial slot division exceeds the slot");
    for (std::size_t g = 0; g < n; ++g) beta[g] = std::clamp(beta[g], lower[g], upper[g]);
    trim_to_budget(beta, lower);

    SqpResult result;
    double f = objective.value(beta);
    if (options.record_trace) result.trace.push_back({0, beta, f, 0.0});

    std::vector<double> trial(n);
    for (int it = 1; it <= options.max_iterations; ++it) {
        result.iterations = it;
        // Below its cap every working term is the smooth c / beta.
        std::vector<double> grad(n, 0.0), hess(n, options.hessian_regularization);
        for (std::size_t g = 0; g < n; ++g) {
            const double c = terms[g].has_work() ? terms[g].active_coefficient() : 0.0;
            grad[g] = -c / (beta[g] * beta[g]);
            hess[g] += 2.0 * c / (beta[g] * beta[g] * beta[g]);
        }
        const auto qp = solve_qp_subproblem(beta, grad, hess, lower, upper, 1.0);

        const double slope = std::inner_product(grad.begin(), grad.end(), qp.direction.begin(), 0.0);
        if (!(slope < 0.0) || norm2(qp.direction) < options.tolerance) {
            result.converged = true;
            break;
        }

        double alpha = 1.0;
        double f_trial = f;
        bool accepted = false;
        while (alpha > 1e-16) {
            for (std::size_t g = 0; g < n; ++g)
                trial[g] = std::clamp(beta[g] + alpha * qp.direction[g], lower[g], upper[g]);
            trim_to_budget(trial, lower);
            f_trial = objective.value(trial);
            if (f_trial <= f + options.armijo_c * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            result.converged = true;
            break;
        }

        double moved = 0.0;
        for (std::size_t g = 0; g < n; ++g) moved += (trial[g] - beta[g]) * (trial[g] - beta[g]);
        beta = trial;
        f = f_trial;
        if (options.record_trace) result.trace.push_back({it, beta, f, alpha});
        if (std::sqrt(moved) < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.hit_iteration_cap = !result.converged;

    // Past its kink a share no longer changes the objective, so spare slot
    // only appears once every working SMG has stopped rebuffering.
    const double spare = 1.0 - std::accumulate(beta.begin(), beta.end(), 0.0);
    double working = 0.0;
    for (std::size_t g = 0; g < n; ++g)
        if (terms[g].has_work()) working += beta[g];
    if (spare > 0.0 && working > 0.0) {
        const double scale = (working + spare) / working;
        for (std::size_t g = 0; g < n; ++g)
            if (terms[g].has_work()) beta[g] = std::min(1.0, beta[g] * scale);
        trim_to_budget(beta, lower);
        f = objective.value(beta);
    }
    result.beta = std::move(beta);
    result.objective = f;
    return result;
}

bool convexity_probe(const TransformedObjective &objective, std::span<const double> beta_a,
                     std::span<const double> beta_b, double theta, double slack) {
    std::vector<double> mid(beta_a.size());
    for (std::size_t g = 0; g < mid.size(); ++g) mid[g] = theta * beta_a[g] + (1.0 - theta) * beta_b[g];
    return objective.value(mid) <= theta * objective.value(beta_a) + (1.0 - theta) * objective.value(beta_b) + slack;
}

}  // namespace mcast
