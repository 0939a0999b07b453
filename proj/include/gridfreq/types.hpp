#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gridfreq {

/// Cost and actuator parameters of one regulation resource. Providing a
/// regulation amount p costs cost_quad*p^2 + cost_lin*p + cost_const; the
/// actuator is a governor/turbine pair with first-order lags and a speed
/// droop feedback.
struct ResourceParams {
    double cost_quad = 0.0;   // cost-units per pu^2, > 0
    double cost_lin = 0.0;    // cost-units per pu, identical across a scenario
    double cost_const = 0.0;  // cost-units
    double droop = 0.0;       // Hz per pu, > 0
    double governor_tc = 0.0; // s, >= 0 (0 only meaningful in ideal mode)
    double turbine_tc = 0.0;  // s, >= 0
    double ramp_limit = 0.0;  // pu per control slot, > 0

    bool operator==(const ResourceParams&) const = default;

    void validate() const {
        if (!(cost_quad > 0.0)) throw std::invalid_argument("resource cost_quad must be > 0");
        if (!(droop > 0.0)) throw std::invalid_argument("resource droop must be > 0");
        if (!(governor_tc >= 0.0)) throw std::invalid_argument("resource governor_tc must be >= 0");
        if (!(turbine_tc >= 0.0)) throw std::invalid_argument("resource turbine_tc must be >= 0");
        if (!(ramp_limit > 0.0)) throw std::invalid_argument("resource ramp_limit must be > 0");
    }
};

/// One directed half of a tie-line coupling; the scenario must carry the
/// mirror entry with the same stiffness on the neighbor area.
struct TieCoupling {
    int neighbor = -1;        // area index
    double stiffness = 0.0;   // pu per (Hz * s), > 0, symmetric across the pair

    bool operator==(const TieCoupling&) const = default;
};

/// Aggregate swing parameters of one control area.
struct AreaParams {
    double inertia = 0.0; // equivalent inertia H, pu*s, > 0
    double damping = 0.0; // equivalent damping D, pu per Hz, >= 0
    std::vector<TieCoupling> ties;

    bool operator==(const AreaParams&) const = default;

    void validate() const {
        if (!(inertia > 0.0)) throw std::invalid_argument("area inertia must be > 0");
        if (!(damping >= 0.0)) throw std::invalid_argument("area damping must be >= 0");
        for (const auto& t : ties) {
            if (t.neighbor < 0) throw std::invalid_argument("tie neighbor must be a valid area index");
            if (!(t.stiffness > 0.0)) throw std::invalid_argument("tie stiffness must be > 0");
        }
    }
};

/// Full dynamic state at one instant. Resource-indexed vectors are flattened
/// area-major; tie_pair_flow is aligned with the plant's unique tie pair
/// list, and tie_flow holds the derived per-area net outflow.
struct SystemState {
    std::vector<double> freq_dev;       // per area, Hz
    std::vector<double> mech_power;     // per resource, pu
    std::vector<double> valve_pos;      // per resource, pu
    std::vector<double> marginal_price; // per resource, cost-units per pu
    std::vector<double> control;        // per resource, pu
    std::vector<double> tie_pair_flow;  // per tie pair, pu, oriented low->high area id
    std::vector<double> tie_flow;       // per area, net outflow, pu

    bool finite() const {
        auto ok = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(freq_dev) && ok(mech_power) && ok(valve_pos) && ok(marginal_price) &&
               ok(control) && ok(tie_pair_flow) && ok(tie_flow);
    }
};

} // namespace gridfreq
