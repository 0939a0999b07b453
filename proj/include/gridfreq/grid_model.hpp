#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "gridfreq/errors.hpp"
#include "gridfreq/types.hpp"

namespace gridfreq {

/// Unique undirected tie line between two areas.
struct TiePair {
    int area_a = -1; // low index
    int area_b = -1; // high index
    double stiffness = 0.0;
};

/// Physical system: areas, their resources, and the tie lines derived from
/// the per-area coupling lists. Resource-indexed quantities everywhere else
/// follow this object's area-major flattening.
class Plant {
public:
    Plant(std::vector<AreaParams> areas, std::vector<std::vector<ResourceParams>> resources)
        : areas_(std::move(areas)), resources_(std::move(resources)) {
        if (areas_.empty()) throw std::invalid_argument("plant needs at least one area");
        if (resources_.size() != areas_.size())
            throw std::invalid_argument("one resource list per area required");
        for (const auto& a : areas_) a.validate();
        offsets_.reserve(areas_.size() + 1);
        offsets_.push_back(0);
        for (const auto& list : resources_) {
            for (const auto& r : list) r.validate();
            offsets_.push_back(offsets_.back() + static_cast<int>(list.size()));
        }
        build_tie_pairs();
    }

    int n_areas() const { return static_cast<int>(areas_.size()); }
    int n_resources() const { return offsets_.back(); }
    int n_resources(int area) const { return static_cast<int>(resources_[area].size()); }
    int resource_offset(int area) const { return offsets_[area]; }
    int area_of_resource(int r) const {
        int a = 0;
        while (offsets_[a + 1] <= r) ++a;
        return a;
    }
    const AreaParams& area(int j) const { return areas_[j]; }
    const std::vector<AreaParams>& areas() const { return areas_; }
    const std::vector<ResourceParams>& resources(int area) const { return resources_[area]; }
    const std::vector<std::vector<ResourceParams>>& resources() const { return resources_; }
    const std::vector<TiePair>& tie_pairs() const { return tie_pairs_; }

    SystemState zero_state() const {
        SystemState s;
        s.freq_dev.assign(n_areas(), 0.0);
        s.mech_power.assign(n_resources(), 0.0);
        s.valve_pos.assign(n_resources(), 0.0);
        s.marginal_price.assign(n_resources(), 0.0);
        s.control.assign(n_resources(), 0.0);
        s.tie_pair_flow.assign(tie_pairs_.size(), 0.0);
        s.tie_flow.assign(n_areas(), 0.0);
        return s;
    }

    void check_state(const SystemState& s) const {
        if (static_cast<int>(s.freq_dev.size()) != n_areas() ||
            static_cast<int>(s.mech_power.size()) != n_resources() ||
            static_cast<int>(s.valve_pos.size()) != n_resources() ||
            static_cast<int>(s.control.size()) != n_resources() ||
            s.tie_pair_flow.size() != tie_pairs_.size() ||
            static_cast<int>(s.tie_flow.size()) != n_areas())
            throw std::invalid_argument("state dimensions do not match the plant");
    }

    /// Net tie outflow of every area from the pairwise flows.
    void net_tie_flows(std::span<const double> pair_flow, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t p = 0; p < tie_pairs_.size(); ++p) {
            out[tie_pairs_[p].area_a] += pair_flow[p];
            out[tie_pairs_[p].area_b] -= pair_flow[p];
        }
    }

private:
    void build_tie_pairs() {
        const int n = n_areas();
        for (int j = 0; j < n; ++j) {
            for (const auto& t : areas_[j].ties) {
                if (t.neighbor < 0 || t.neighbor >= n || t.neighbor == j)
                    throw std::invalid_argument("tie neighbor out of range");
                // the mirror entry must exist with the same stiffness
                const auto& back = areas_[t.neighbor].ties;
                auto it = std::find_if(back.begin(), back.end(),
                                       [j](const TieCoupling& c) { return c.neighbor == j; });
                if (it == back.end() || it->stiffness != t.stiffness)
                    throw std::invalid_argument("tie couplings must be symmetric across area pairs");
                if (t.neighbor > j)
                    tie_pairs_.push_back({j, t.neighbor, t.stiffness});
            }
        }
    }

    std::vector<AreaParams> areas_;
    std::vector<std::vector<ResourceParams>> resources_;
    std::vector<int> offsets_;
    std::vector<TiePair> tie_pairs_;
};

/// Time derivative of the dynamic fields of SystemState.
struct StateDerivative {
    std::vector<double> freq_dev;
    std::vector<double> mech_power;
    std::vector<double> valve_pos;
    std::vector<double> tie_pair_flow;
};

/// Continuous-time plant dynamics:
///   2H df/dt      = sum(P_m) - load - tie_out - D*f        (per area)
///   Tt dP_m/dt    = P_g - P_m                              (per resource)
///   Tg dP_g/dt    = -f/droop - P_g + u                     (per resource)
///   dflow/dt      = stiffness * (f_a - f_b)                (per tie pair)
/// Zero governor or turbine time constants are rejected; the zero-lag
/// idealization is handled algebraically by ideal_resource_mode instead.
inline StateDerivative plant_derivatives(const Plant& plant, const SystemState& state,
                                         std::span<const double> load_dev,
                                         std::span<const double> controls) {
    plant.check_state(state);
    if (static_cast<int>(load_dev.size()) != plant.n_areas())
        throw std::invalid_argument("load_dev must have one entry per area");
    if (static_cast<int>(controls.size()) != plant.n_resources())
        throw std::invalid_argument("controls must have one entry per resource");

    StateDerivative d;
    d.freq_dev.resize(plant.n_areas());
    d.mech_power.resize(plant.n_resources());
    d.valve_pos.resize(plant.n_resources());
    d.tie_pair_flow.resize(plant.tie_pairs().size());

    std::vector<double> net_tie(plant.n_areas());
    plant.net_tie_flows(state.tie_pair_flow, net_tie);

    for (int j = 0; j < plant.n_areas(); ++j) {
        const auto& ap = plant.area(j);
        double sum_pm = 0.0;
        const int lo = plant.resource_offset(j);
        const int hi = lo + plant.n_resources(j);
        for (int r = lo; r < hi; ++r) sum_pm += state.mech_power[r];
        d.freq_dev[j] = (-ap.damping * state.freq_dev[j] + sum_pm - load_dev[j] - net_tie[j]) /
                        (2.0 * ap.inertia);
    }

    for (int j = 0; j < plant.n_areas(); ++j) {
        const int lo = plant.resource_offset(j);
        for (int i = 0; i < plant.n_resources(j); ++i) {
            const auto& rp = plant.resources(j)[i];
            if (rp.turbine_tc == 0.0 || rp.governor_tc == 0.0)
                throw std::invalid_argument(
                    "zero governor/turbine time constant: use the ideal resource mode");
            const int r = lo + i;
            d.mech_power[r] = (state.valve_pos[r] - state.mech_power[r]) / rp.turbine_tc;
            d.valve_pos[r] = -state.freq_dev[j] / (rp.governor_tc * rp.droop) -
                             (state.valve_pos[r] - controls[r]) / rp.governor_tc;
        }
    }

    const auto& pairs = plant.tie_pairs();
    for (std::size_t p = 0; p < pairs.size(); ++p)
        d.tie_pair_flow[p] =
            pairs[p].stiffness * (state.freq_dev[pairs[p].area_a] - state.freq_dev[pairs[p].area_b]);

    return d;
}

/// Pins mechanical output and valve position to the control signal, the
/// zero-time-constant idealization of the governor/turbine pair.
inline SystemState ideal_resource_mode(SystemState state, std::span<const double> controls) {
    if (controls.size() != state.mech_power.size())
        throw std::invalid_argument("controls must have one entry per resource");
    std::copy(controls.begin(), controls.end(), state.mech_power.begin());
    std::copy(controls.begin(), controls.end(), state.valve_pos.begin());
    return state;
}

namespace detail {

// Flat ODE view over the dynamic fields. In ideal mode the resource states
// are pinned to the controls and only frequency and tie flows integrate.
struct FlatOde {
    const Plant& plant;
    std::span<const double> load;
    std::span<const double> controls;
    bool ideal;

    int dim() const {
        const int base = plant.n_areas() + static_cast<int>(plant.tie_pairs().size());
        return ideal ? base : base + 2 * plant.n_resources();
    }

    void pack(const SystemState& s, std::vector<double>& x) const {
        x.clear();
        x.insert(x.end(), s.freq_dev.begin(), s.freq_dev.end());
        if (!ideal) {
            x.insert(x.end(), s.mech_power.begin(), s.mech_power.end());
            x.insert(x.end(), s.valve_pos.begin(), s.valve_pos.end());
        }
        x.insert(x.end(), s.tie_pair_flow.begin(), s.tie_pair_flow.end());
    }

    void unpack(const std::vector<double>& x, SystemState& s) const {
        const int na = plant.n_areas();
        const int nr = plant.n_resources();
        std::copy_n(x.begin(), na, s.freq_dev.begin());
        int at = na;
        if (!ideal) {
            std::copy_n(x.begin() + at, nr, s.mech_power.begin());
            at += nr;
            std::copy_n(x.begin() + at, nr, s.valve_pos.begin());
            at += nr;
        }
        std::copy_n(x.begin() + at, plant.tie_pairs().size(), s.tie_pair_flow.begin());
    }

    void operator()(const std::vector<double>& x, std::vector<double>& dx) const {
        const int na = plant.n_areas();
        const int nr = plant.n_resources();
        const auto& pairs = plant.tie_pairs();
        const int tie_at = ideal ? na : na + 2 * nr;

        for (int j = 0; j < na; ++j) {
            const auto& ap = plant.area(j);
            double sum_pm = 0.0;
            const int lo = plant.resource_offset(j);
            const int hi = lo + plant.n_resources(j);
            if (ideal) {
                for (int r = lo; r < hi; ++r) sum_pm += controls[r];
            } else {
                for (int r = lo; r < hi; ++r) sum_pm += x[na + r];
            }
            double net_tie = 0.0;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                if (pairs[p].area_a == j) net_tie += x[tie_at + static_cast<int>(p)];
                if (pairs[p].area_b == j) net_tie -= x[tie_at + static_cast<int>(p)];
            }
            dx[j] = (-ap.damping * x[j] + sum_pm - load[j] - net_tie) / (2.0 * ap.inertia);
        }

        if (!ideal) {
            for (int j = 0; j < na; ++j) {
                const int lo = plant.resource_offset(j);
                for (int i = 0; i < plant.n_resources(j); ++i) {
                    const auto& rp = plant.resources(j)[i];
                    const int r = lo + i;
                    dx[na + r] = (x[na + nr + r] - x[na + r]) / rp.turbine_tc;
                    dx[na + nr + r] = -x[j] / (rp.governor_tc * rp.droop) -
                                      (x[na + nr + r] - controls[r]) / rp.governor_tc;
                }
            }
        }

        for (std::size_t p = 0; p < pairs.size(); ++p)
            dx[tie_at + static_cast<int>(p)] =
                pairs[p].stiffness * (x[pairs[p].area_a] - x[pairs[p].area_b]);
    }
};

} // namespace detail

/// Advances the plant over one control slot with classical fixed-step RK4.
/// Controls and loads are held constant; identical inputs give bit-identical
/// outputs. slot_len must be a whole multiple of inner_step.
inline SystemState integrate_slot(const Plant& plant, SystemState state,
                                  std::span<const double> load_dev,
                                  std::span<const double> controls, double slot_len,
                                  double inner_step, bool ideal_resources = false) {
    plant.check_state(state);
    if (static_cast<int>(load_dev.size()) != plant.n_areas())
        throw std::invalid_argument("load_dev must have one entry per area");
    if (static_cast<int>(controls.size()) != plant.n_resources())
        throw std::invalid_argument("controls must have one entry per resource");
    if (!(inner_step > 0.0) || inner_step > slot_len)
        throw std::invalid_argument("inner_step must lie in (0, slot_len]");
    const long long n_steps = std::llround(slot_len / inner_step);
    if (n_steps < 1 || std::abs(static_cast<double>(n_steps) * inner_step - slot_len) >
                           1e-9 * std::max(1.0, slot_len))
        throw std::invalid_argument("slot_len must be a whole multiple of inner_step");
    if (!ideal_resources) {
        for (const auto& list : plant.resources())
            for (const auto& rp : list)
                if (rp.turbine_tc == 0.0 || rp.governor_tc == 0.0)
                    throw std::invalid_argument(
                        "zero governor/turbine time constant: use the ideal resource mode");
    }

    if (ideal_resources) state = ideal_resource_mode(std::move(state), controls);

    detail::FlatOde ode{plant, load_dev, controls, ideal_resources};
    const int dim = ode.dim();
    std::vector<double> x, k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    x.reserve(dim);
    ode.pack(state, x);

    const double h = inner_step;
    for (long long step = 0; step < n_steps; ++step) {
        ode(x, k1);
        for (int i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        ode(tmp, k2);
        for (int i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        ode(tmp, k3);
        for (int i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
        ode(tmp, k4);
        for (int i = 0; i < dim; ++i)
            x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        for (int i = 0; i < dim; ++i)
            if (!std::isfinite(x[i]))
                throw SimulationError("integration diverged (non-finite state)");
    }

    ode.unpack(x, state);
    plant.net_tie_flows(state.tie_pair_flow, state.tie_flow);
    return state;
}

} // namespace gridfreq
