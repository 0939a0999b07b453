#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gridfreq/comm_graph.hpp"
#include "gridfreq/types.hpp"

namespace gridfreq {

/// Minimizer of the quadratic dispatch cost under the balance constraint.
/// Marginal costs are equal across resources at the optimum.
struct DispatchSolution {
    std::vector<double> control;  // u*, pu
    double marginal_price = 0.0;  // common marginal cost, cost-units per pu
    double total_cost = 0.0;      // quadratic term only; linear/fixed terms do
                                  // not depend on the allocation
};

/// Closed form of: minimize sum a_i u_i^2 subject to sum u_i = load_dev.
inline DispatchSolution optimal_dispatch(const std::vector<double>& cost_quad, double load_dev) {
    if (cost_quad.empty()) throw std::invalid_argument("optimal_dispatch: empty resource list");
    double inv_sum = 0.0;
    for (double a : cost_quad) {
        if (!(a > 0.0)) throw std::invalid_argument("cost curvatures must be > 0");
        inv_sum += 1.0 / a;
    }
    DispatchSolution sol;
    sol.marginal_price = 2.0 * load_dev / inv_sum;
    sol.control.resize(cost_quad.size());
    for (std::size_t i = 0; i < cost_quad.size(); ++i) {
        sol.control[i] = sol.marginal_price / (2.0 * cost_quad[i]);
        sol.total_cost += cost_quad[i] * sol.control[i] * sol.control[i];
    }
    return sol;
}

/// Deviation of a price/control pair from the dispatch optimum for the same
/// load. relative_error is empty when every optimal control is zero.
struct DispatchGap {
    double max_price_dev = 0.0;
    double max_control_dev = 0.0;
    std::optional<double> relative_error;
};

inline DispatchGap dispatch_gap(const std::vector<double>& price, const std::vector<double>& control,
                                const std::vector<double>& cost_quad, double load_dev) {
    if (price.size() != cost_quad.size() || control.size() != cost_quad.size())
        throw std::invalid_argument("dispatch_gap: inconsistent vector lengths");
    const DispatchSolution opt = optimal_dispatch(cost_quad, load_dev);
    DispatchGap gap;
    bool any_rel = false;
    double rel = 0.0;
    for (std::size_t i = 0; i < cost_quad.size(); ++i) {
        gap.max_price_dev = std::max(gap.max_price_dev, std::abs(price[i] - opt.marginal_price));
        const double du = std::abs(control[i] - opt.control[i]);
        gap.max_control_dev = std::max(gap.max_control_dev, du);
        if (opt.control[i] != 0.0) {
            rel = std::max(rel, du / std::abs(opt.control[i]));
            any_rel = true;
        }
    }
    if (any_rel) gap.relative_error = rel;
    return gap;
}

/// Steady-state tracking bound of the consensus iteration: after transients,
/// price deviations stay within c * epsilon of the optimum when the spectral
/// condition holds.
struct CostBound {
    double gamma = 0.0;   // per-step contraction factor
    double delta = 0.0;   // per-step disturbance gain
    double c = 0.0;       // delta / (1 - gamma)
    double epsilon = 0.0; // max per-slot load change, pu
};

inline CostBound compute_cost_bound(const CommGraph& graph, double beta,
                                    const std::vector<double>& cost_quad, double epsilon) {
    const SpectralReport rep = check_condition(graph, beta, cost_quad);
    if (!rep.satisfied)
        throw std::invalid_argument(
            "spectral condition not satisfied (needs gamma < 1 on a connected graph); "
            "tracking bound undefined");
    CostBound b;
    b.gamma = rep.gamma;
    b.epsilon = epsilon;
    const int n = static_cast<int>(cost_quad.size());
    double inv_sum = 0.0;
    for (double a : cost_quad) inv_sum += 1.0 / a;
    const double common = 2.0 / inv_sum;
    for (double a : cost_quad)
        b.delta = std::max(b.delta, std::abs(2.0 * a / n - common));
    b.c = b.delta / (1.0 - b.gamma);
    return b;
}

/// Per-resource test of the ramping-relaxation condition
///   (2 beta c deg_i + 1/n) * epsilon <= ramp_limit_i.
/// Where it holds, per-slot control moves never exceed the ramp limit and
/// dropping the ramping constraints from the dispatch problem is exact.
struct RampCheck {
    bool satisfied = false;
    double margin = 0.0; // ramp_limit - required slack, pu
};

inline std::vector<RampCheck> ramp_relaxation_check(const CostBound& bound, const CommGraph& graph,
                                                    double beta,
                                                    const std::vector<ResourceParams>& resources) {
    if (static_cast<int>(resources.size()) != graph.size())
        throw std::invalid_argument("one resource per graph node required");
    const int n = graph.size();
    std::vector<RampCheck> out(resources.size());
    for (int i = 0; i < n; ++i) {
        const double lhs = (2.0 * beta * bound.c * graph.degree(i) + 1.0 / n) * bound.epsilon;
        out[i].margin = resources[i].ramp_limit - lhs;
        out[i].satisfied = lhs <= resources[i].ramp_limit;
    }
    return out;
}

} // namespace gridfreq
