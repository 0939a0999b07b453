#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "gridfreq/comm_graph.hpp"
#include "gridfreq/types.hpp"

namespace gridfreq {

/// Where the supply/demand mismatch term comes from: the exact load deviation
/// (available in simulation, used to verify the balance property exactly) or
/// the swing-equation estimate built from two frequency samples.
enum class InnovationMode { oracle_load, frequency_estimated };

/// Per-area state of the peer-to-peer price-consensus controller.
struct DistributedControllerState {
    std::vector<double> lambda; // per-resource marginal price iterate
    double beta = 0.0;          // consensus gain
    InnovationMode mode = InnovationMode::frequency_estimated;
    CommGraph graph;
};

/// Re-anchors every price iterate to the marginal cost of the measured
/// mechanical output: lambda_i = 2 a_i P_m_i.
inline void anchor_marginal_prices(DistributedControllerState& ctrl,
                                   const std::vector<ResourceParams>& resources,
                                   std::span<const double> mech_power) {
    if (resources.size() != mech_power.size() || ctrl.lambda.size() != resources.size())
        throw std::invalid_argument("controller/resource dimension mismatch");
    for (std::size_t i = 0; i < resources.size(); ++i)
        ctrl.lambda[i] = 2.0 * resources[i].cost_quad * mech_power[i];
}

struct ConsensusStep {
    std::vector<double> control;         // u for the next slot, pu
    std::vector<double> lambda_estimate; // price estimates that produced u
};

/// One synchronous update of every price iterate from a common snapshot:
///   lambda~_i = lambda_i - 2 a_i beta * sum_{l in nbrs(i)} (lambda_i - lambda_l)
///               + (2 a_i / n) * innovation
///   u_i       = lambda~_i / (2 a_i)
/// All reads use the snapshot, so evaluation order cannot change the result.
/// Summing u over all resources reproduces the previous total output plus the
/// innovation exactly, which is what makes the balance property hold slot by
/// slot in oracle mode.
inline ConsensusStep consensus_innovation_step(const DistributedControllerState& ctrl,
                                               const std::vector<ResourceParams>& resources,
                                               double innovation) {
    const std::size_t n = resources.size();
    if (ctrl.lambda.size() != n)
        throw std::invalid_argument("controller/resource dimension mismatch");
    if (static_cast<std::size_t>(ctrl.graph.size()) != n)
        throw std::invalid_argument("graph size does not match the resource list");

    ConsensusStep step;
    step.control.resize(n);
    step.lambda_estimate.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double two_a = 2.0 * resources[i].cost_quad;
        double disagreement = 0.0;
        for (int l : ctrl.graph.neighbors(static_cast<int>(i)))
            disagreement += ctrl.lambda[i] - ctrl.lambda[l];
        const double est = ctrl.lambda[i] - two_a * ctrl.beta * disagreement +
                           two_a * innovation / static_cast<double>(n);
        step.lambda_estimate[i] = est;
        step.control[i] = est / two_a;
    }
    return step;
}

/// Supply/demand mismatch from two consecutive slot-boundary frequency
/// samples via the discretized swing equation:
///   -2H (f_next - f_now) / slot_len - D f_now - tie_flow.
/// Single-area callers pass tie_flow = 0.
inline double estimate_innovation(const AreaParams& area, double freq_now, double freq_next,
                                  double tie_flow, double slot_len) {
    if (!(slot_len > 0.0)) throw std::invalid_argument("slot_len must be > 0");
    return -2.0 * area.inertia * (freq_next - freq_now) / slot_len - area.damping * freq_now -
           tie_flow;
}

/// Area control error sample handed to the AGC baseline.
struct AceSignal {
    int area_id = 0;
    double value = 0.0;         // ACE, pu (single area: the frequency deviation)
    double freq_dev_now = 0.0;  // Hz
    double freq_dev_prev = 0.0; // Hz
    double tie_flow = 0.0;      // pu
};

/// Conventional AGC baseline: PI on the ACE, split by participation factors.
struct AgcControllerState {
    double kp = 0.0;
    double ki = 0.0;
    double integral_acc = 0.0;  // accumulated ACE integral, pu*s
    std::vector<double> alpha;  // participation factors, nonnegative, sum 1
};

/// Advances the ACE integral by one slot (rectangle rule), then splits the
/// total command -(kp*ACE + ki*integral) across resources.
inline std::vector<double> agc_step(AgcControllerState& ctrl, const AceSignal& ace,
                                    double slot_len) {
    if (!(slot_len > 0.0)) throw std::invalid_argument("slot_len must be > 0");
    if (ctrl.alpha.empty()) throw std::invalid_argument("participation factors missing");
    ctrl.integral_acc += ace.value * slot_len;
    const double command = -(ctrl.kp * ace.value + ctrl.ki * ctrl.integral_acc);
    std::vector<double> u(ctrl.alpha.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = ctrl.alpha[i] * command;
    return u;
}

/// Cost-weighted participation factors: alpha_i = (1/a_i) / sum_j (1/a_j).
inline std::vector<double> participation_factors(const std::vector<double>& cost_quad) {
    if (cost_quad.empty()) throw std::invalid_argument("empty resource list");
    double inv_sum = 0.0;
    for (double a : cost_quad) {
        if (!(a > 0.0)) throw std::invalid_argument("cost curvatures must be > 0");
        inv_sum += 1.0 / a;
    }
    std::vector<double> alpha(cost_quad.size());
    for (std::size_t i = 0; i < cost_quad.size(); ++i) alpha[i] = (1.0 / cost_quad[i]) / inv_sum;
    return alpha;
}

/// First-order PI reading of the consensus controller, for diagnostics: each
/// resource behaves like a PI loop with time constant slot_len + Tg + Tt and
/// proportional gain 2H / (n * T_u). Higher-order terms are dropped.
struct PiEquivalent {
    double t_u = 0.0;               // s
    double proportional_gain = 0.0; // dimensionless
};

inline std::vector<PiEquivalent> pi_equivalent_gains(const std::vector<ResourceParams>& resources,
                                                     const AreaParams& area, double slot_len) {
    if (resources.empty()) throw std::invalid_argument("empty resource list");
    const double n = static_cast<double>(resources.size());
    std::vector<PiEquivalent> out(resources.size());
    for (std::size_t i = 0; i < resources.size(); ++i) {
        const double tu = slot_len + resources[i].governor_tc + resources[i].turbine_tc;
        if (!(tu > 0.0))
            throw std::invalid_argument("slot_len + governor_tc + turbine_tc must be > 0");
        out[i].t_u = tu;
        out[i].proportional_gain = 2.0 * area.inertia / (n * tu);
    }
    return out;
}

} // namespace gridfreq
