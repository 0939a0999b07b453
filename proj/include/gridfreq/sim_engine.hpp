#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gridfreq/comm_graph.hpp"
#include "gridfreq/controllers.hpp"
#include "gridfreq/dispatch.hpp"
#include "gridfreq/errors.hpp"
#include "gridfreq/grid_model.hpp"

namespace gridfreq {

/// Per-area load deviation profile. Values change only at slot boundaries;
/// random draws are reproducible from the scenario seed.
struct LoadProfile {
    enum class Kind { zero, step, piecewise_random, ramp, from_file };

    Kind kind = Kind::zero;
    double step_magnitude = 0.0; // pu (step)
    double change_period = 0.0;  // s (piecewise_random / ramp)
    double max_change = 0.0;     // pu bound per change (piecewise_random)
    double ramp_rate = 0.0;      // pu added per change (ramp)
    std::vector<std::pair<double, double>> samples; // (time s, value pu) for from_file

    bool operator==(const LoadProfile&) const = default;

    /// Bound on the per-slot load change, the epsilon of the tracking bound.
    double epsilon() const {
        switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::step: return std::abs(step_magnitude);
        case Kind::piecewise_random: return max_change;
        case Kind::ramp: return std::abs(ramp_rate);
        case Kind::from_file: {
            double eps = 0.0, prev = 0.0;
            for (const auto& [t, v] : samples) {
                eps = std::max(eps, std::abs(v - prev));
                prev = v;
            }
            return eps;
        }
        }
        return 0.0;
    }
};

struct ControllerConfig {
    enum class Kind { distributed, agc };
    enum class AlphaMode { uniform, cost_weighted };

    Kind kind = Kind::distributed;
    double beta = 0.0;
    InnovationMode innovation = InnovationMode::frequency_estimated;
    double agc_kp = 0.0;
    double agc_ki = 0.0;
    AlphaMode alpha_mode = AlphaMode::uniform;

    bool operator==(const ControllerConfig&) const = default;
};

/// Everything needed for one deterministic run.
struct ScenarioConfig {
    std::vector<AreaParams> areas;
    std::vector<std::vector<ResourceParams>> resources; // per area
    std::vector<CommGraph> graphs;                      // per area, distributed controller
    ControllerConfig controller;
    double slot_len = 4.0;   // s between control updates
    double inner_step = 0.0; // s; 0 picks min(0.01, slot_len/10)
    double horizon = 0.0;    // s, whole multiple of slot_len
    std::uint64_t seed = 0;
    std::vector<LoadProfile> loads; // per area
    double settling_band = 5e-4;    // Hz
    bool ideal_resources = false;
    bool enforce_ramp_limits = false;

    double effective_inner_step() const {
        return inner_step > 0.0 ? inner_step : std::min(0.01, slot_len / 10.0);
    }

    int n_slots() const { return static_cast<int>(std::llround(horizon / slot_len)); }

    void validate() const;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform in [lo, hi) from the top 53 bits; keeps draws identical across
// standard library implementations.
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u01 * (hi - lo);
}

inline bool is_multiple_of(double value, double base) {
    if (!(base > 0.0)) return false;
    const double k = std::round(value / base);
    return k >= 0.0 && std::abs(k * base - value) <= 1e-9 * std::max(1.0, std::abs(value));
}

// Load value for every slot. Changes land on multiples of change_period
// (including t = 0).
inline std::vector<double> build_load_series(const LoadProfile& p, double slot_len, int n_slots,
                                             std::uint64_t seed, int area_index) {
    std::vector<double> out(n_slots, 0.0);
    std::mt19937_64 rng(splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (area_index + 1))));
    double value = 0.0;
    std::size_t next_sample = 0;
    for (int k = 0; k < n_slots; ++k) {
        const double t = k * slot_len;
        switch (p.kind) {
        case LoadProfile::Kind::zero: break;
        case LoadProfile::Kind::step:
            value = p.step_magnitude;
            break;
        case LoadProfile::Kind::piecewise_random:
            if (is_multiple_of(t, p.change_period))
                value += uniform_in(rng, -p.max_change, p.max_change);
            break;
        case LoadProfile::Kind::ramp:
            if (is_multiple_of(t, p.change_period)) value += p.ramp_rate;
            break;
        case LoadProfile::Kind::from_file:
            while (next_sample < p.samples.size() &&
                   p.samples[next_sample].first <= t + 1e-9 * std::max(1.0, t)) {
                value = p.samples[next_sample].second;
                ++next_sample;
            }
            break;
        }
        out[k] = value;
    }
    return out;
}

} // namespace detail

inline void ScenarioConfig::validate() const {
    if (areas.empty()) throw std::invalid_argument("scenario needs at least one area");
    if (resources.size() != areas.size())
        throw std::invalid_argument("one resource list per area required");
    if (loads.size() != areas.size())
        throw std::invalid_argument("one load profile per area required");
    Plant plant(areas, resources); // validates params and tie symmetry
    if (plant.n_resources() == 0) throw std::invalid_argument("scenario needs resources");

    std::optional<double> common_b;
    for (const auto& list : resources)
        for (const auto& r : list) {
            if (!common_b) common_b = r.cost_lin;
            if (r.cost_lin != *common_b)
                throw std::invalid_argument("linear cost coefficients must be identical");
            if (!ideal_resources && (r.governor_tc <= 0.0 || r.turbine_tc <= 0.0))
                throw std::invalid_argument(
                    "governor/turbine time constants must be > 0 unless ideal_resources is set");
        }

    if (!(slot_len > 0.0)) throw std::invalid_argument("slot_len must be > 0");
    const double h = effective_inner_step();
    if (!(h > 0.0) || h > slot_len) throw std::invalid_argument("inner_step must lie in (0, slot_len]");
    if (!detail::is_multiple_of(slot_len, h))
        throw std::invalid_argument("slot_len must be a whole multiple of inner_step");
    if (!(horizon > 0.0) || !detail::is_multiple_of(horizon, slot_len))
        throw std::invalid_argument("horizon must be a positive whole multiple of slot_len (horizon = " +
                                    std::to_string(horizon) + ", slot_len = " +
                                    std::to_string(slot_len) + ")");

    if (controller.kind == ControllerConfig::Kind::distributed) {
        if (!(controller.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
        if (graphs.size() != areas.size())
            throw std::invalid_argument("one communication graph per area required");
        for (std::size_t j = 0; j < areas.size(); ++j)
            if (graphs[j].size() != static_cast<int>(resources[j].size()))
                throw std::invalid_argument("graph size must match the area's resource count");
    } else {
        if (controller.agc_kp < 0.0 || controller.agc_ki < 0.0)
            throw std::invalid_argument("AGC gains must be >= 0");
    }

    for (const auto& p : loads) {
        switch (p.kind) {
        case LoadProfile::Kind::piecewise_random:
            if (!(p.max_change >= 0.0)) throw std::invalid_argument("load bound must be >= 0");
            [[fallthrough]];
        case LoadProfile::Kind::ramp:
            if (!detail::is_multiple_of(p.change_period, slot_len) || !(p.change_period > 0.0))
                throw std::invalid_argument(
                    "load change period must be a positive whole multiple of slot_len");
            break;
        case LoadProfile::Kind::from_file: {
            double prev = -1.0;
            for (const auto& [t, v] : p.samples) {
                if (!detail::is_multiple_of(t, slot_len))
                    throw std::invalid_argument("load sample times must land on slot boundaries");
                if (t <= prev) throw std::invalid_argument("load sample times must increase");
                if (!std::isfinite(v)) throw std::invalid_argument("load sample value must be finite");
                prev = t;
            }
            break;
        }
        default: break;
        }
    }
}

/// Per-slot deviation of the applied controls from the dispatch optimum.
struct SlotGap {
    double time = 0.0;
    double max_price_dev = 0.0;
    double max_control_dev = 0.0;
    double relative_error = 0.0; // NaN when the optimum is all-zero
};

struct TraceMetrics {
    std::optional<double> settling_time; // s; empty when never settled
    double freq_nadir = 0.0;             // signed extremal frequency deviation, Hz
    std::vector<SlotGap> dispatch_gap;   // one entry per slot
};

/// Time-indexed record of one run, sampled on the integration grid.
/// Resource series are area-major, matching Plant's flattening.
struct SimTrace {
    std::vector<double> times;
    std::vector<int> resources_per_area;
    std::vector<std::vector<double>> freq;    // [area][sample], Hz
    std::vector<std::vector<double>> load;    // [area][sample], pu
    std::vector<std::vector<double>> tie;     // [area][sample], pu net outflow
    std::vector<std::vector<double>> mech;    // [resource][sample], pu
    std::vector<std::vector<double>> valve;   // [resource][sample], pu
    std::vector<std::vector<double>> control; // [resource][sample], pu
    std::vector<std::vector<double>> price;   // [resource][sample], cost-units/pu

    TraceMetrics metrics;
    std::vector<std::string> warnings;

    int n_areas() const { return static_cast<int>(freq.size()); }
    int n_resources() const { return static_cast<int>(mech.size()); }
    std::size_t n_samples() const { return times.size(); }
};

/// First time at or after the last load change from which the worst-area
/// |frequency deviation| stays within the band until the end of the trace.
inline std::optional<double> settling_time(const SimTrace& trace, double band) {
    if (trace.times.empty()) throw std::invalid_argument("empty trace");
    const std::size_t n = trace.n_samples();

    std::size_t last_change = 0;
    for (std::size_t k = 1; k < n; ++k)
        for (const auto& series : trace.load)
            if (series[k] != series[k - 1]) {
                last_change = k;
                break;
            }

    auto worst = [&](std::size_t k) {
        double w = 0.0;
        for (const auto& series : trace.freq) w = std::max(w, std::abs(series[k]));
        return w;
    };

    std::size_t settle = n; // first index from which the band holds to the end
    for (std::size_t k = n; k-- > 0;) {
        if (worst(k) > band) break;
        settle = k;
    }
    if (settle == n) return std::nullopt;
    return trace.times[std::max(settle, last_change)];
}

namespace detail {

inline void compute_metrics(SimTrace& tr, const ScenarioConfig& cfg, int steps_per_slot) {
    tr.metrics.settling_time = settling_time(tr, cfg.settling_band);

    double nadir = 0.0;
    for (const auto& series : tr.freq)
        for (double f : series)
            if (std::abs(f) > std::abs(nadir)) nadir = f;
    tr.metrics.freq_nadir = nadir;

    const int n_slots = cfg.n_slots();
    std::vector<std::vector<double>> load_series(cfg.areas.size());
    for (std::size_t j = 0; j < cfg.areas.size(); ++j)
        load_series[j] =
            build_load_series(cfg.loads[j], cfg.slot_len, n_slots, cfg.seed, static_cast<int>(j));

    tr.metrics.dispatch_gap.clear();
    tr.metrics.dispatch_gap.reserve(n_slots);
    for (int k = 0; k < n_slots; ++k) {
        // controls chosen for slot k are in force from one sample past the
        // boundary (the measurement step)
        const std::size_t at = std::min(static_cast<std::size_t>(k) * steps_per_slot + 1,
                                        tr.times.size() - 1);
        SlotGap gap;
        gap.time = tr.times[static_cast<std::size_t>(k) * steps_per_slot];
        gap.relative_error = std::numeric_limits<double>::quiet_NaN();
        bool any_rel = false;
        int offset = 0;
        for (std::size_t j = 0; j < cfg.areas.size(); ++j) {
            const int nr = static_cast<int>(cfg.resources[j].size());
            std::vector<double> a(nr), price(nr), control(nr);
            for (int i = 0; i < nr; ++i) {
                a[i] = cfg.resources[j][i].cost_quad;
                price[i] = tr.price[offset + i][at];
                control[i] = tr.control[offset + i][at];
            }
            const DispatchGap g = dispatch_gap(price, control, a, load_series[j][k]);
            gap.max_price_dev = std::max(gap.max_price_dev, g.max_price_dev);
            gap.max_control_dev = std::max(gap.max_control_dev, g.max_control_dev);
            if (g.relative_error) {
                gap.relative_error =
                    any_rel ? std::max(gap.relative_error, *g.relative_error) : *g.relative_error;
                any_rel = true;
            }
            offset += nr;
        }
        tr.metrics.dispatch_gap.push_back(gap);
    }
}

} // namespace detail

/// Runs the slot sequence: apply the load for the upcoming slot, form the
/// innovation from the two most recent boundary measurements, update the
/// controller, then integrate the plant across the slot. Deterministic for
/// a fixed config and seed.
inline SimTrace run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Plant plant(cfg.areas, cfg.resources);
    const int n_areas = plant.n_areas();
    const int n_res = plant.n_resources();
    const double dt = cfg.slot_len;
    const double h = cfg.effective_inner_step();
    const int n_slots = cfg.n_slots();
    const int steps_per_slot = static_cast<int>(std::llround(dt / h));

    std::vector<std::vector<double>> load_series(n_areas);
    for (int j = 0; j < n_areas; ++j)
        load_series[j] = detail::build_load_series(cfg.loads[j], dt, n_slots, cfg.seed, j);

    const bool distributed = cfg.controller.kind == ControllerConfig::Kind::distributed;
    std::vector<DistributedControllerState> dctrl;
    std::vector<AgcControllerState> actrl;
    SimTrace tr;
    if (distributed) {
        for (int j = 0; j < n_areas; ++j) {
            DistributedControllerState c;
            c.lambda.assign(plant.n_resources(j), 0.0);
            c.beta = cfg.controller.beta;
            c.mode = cfg.controller.innovation;
            c.graph = cfg.graphs[j];
            std::vector<double> a(plant.n_resources(j));
            for (int i = 0; i < plant.n_resources(j); ++i) a[i] = cfg.resources[j][i].cost_quad;
            const SpectralReport rep = check_condition(c.graph, c.beta, a);
            if (!rep.satisfied)
                tr.warnings.push_back("area " + std::to_string(j + 1) +
                                      ": spectral condition not satisfied (gamma = " +
                                      std::to_string(rep.gamma) +
                                      "); tracking bound does not apply");
            dctrl.push_back(std::move(c));
        }
    } else {
        for (int j = 0; j < n_areas; ++j) {
            AgcControllerState c;
            c.kp = cfg.controller.agc_kp;
            c.ki = cfg.controller.agc_ki;
            const int nr = plant.n_resources(j);
            if (cfg.controller.alpha_mode == ControllerConfig::AlphaMode::uniform) {
                c.alpha.assign(nr, 1.0 / nr);
            } else {
                std::vector<double> a(nr);
                for (int i = 0; i < nr; ++i) a[i] = cfg.resources[j][i].cost_quad;
                c.alpha = participation_factors(a);
            }
            actrl.push_back(std::move(c));
        }
    }

    const std::size_t n_samples = static_cast<std::size_t>(n_slots) * steps_per_slot + 1;
    tr.resources_per_area.resize(n_areas);
    for (int j = 0; j < n_areas; ++j) tr.resources_per_area[j] = plant.n_resources(j);
    tr.times.reserve(n_samples);
    tr.freq.assign(n_areas, {});
    tr.load.assign(n_areas, {});
    tr.tie.assign(n_areas, {});
    tr.mech.assign(n_res, {});
    tr.valve.assign(n_res, {});
    tr.control.assign(n_res, {});
    tr.price.assign(n_res, {});
    for (auto& v : tr.freq) v.reserve(n_samples);
    for (auto& v : tr.load) v.reserve(n_samples);
    for (auto& v : tr.tie) v.reserve(n_samples);
    for (auto& v : tr.mech) v.reserve(n_samples);
    for (auto& v : tr.valve) v.reserve(n_samples);
    for (auto& v : tr.control) v.reserve(n_samples);
    for (auto& v : tr.price) v.reserve(n_samples);

    SystemState s = plant.zero_state();
    std::vector<double> cur_load(n_areas, 0.0);
    // The slot sequence: the load switches at the boundary, the plant runs
    // one integration step under the previous controls while the measurement
    // is taken, and the control update lands one step after the boundary.
    // The two frequency samples bracketing that step feed the innovation
    // estimate, so the reading reflects the new load. (Differencing across a
    // whole slot instead lags the actuators and destabilizes the loop once
    // slots get shorter than the turbine lag.)
    std::vector<double> meas_freq(n_areas, 0.0); // f at the boundary
    std::vector<double> meas_tie(n_areas, 0.0);  // net tie outflow at the boundary

    auto record = [&](double t) {
        tr.times.push_back(t);
        for (int j = 0; j < n_areas; ++j) {
            tr.freq[j].push_back(s.freq_dev[j]);
            tr.load[j].push_back(cur_load[j]);
            tr.tie[j].push_back(s.tie_flow[j]);
        }
        for (int r = 0; r < n_res; ++r) {
            tr.mech[r].push_back(s.mech_power[r]);
            tr.valve[r].push_back(s.valve_pos[r]);
            tr.control[r].push_back(s.control[r]);
            tr.price[r].push_back(s.marginal_price[r]);
        }
    };

    std::vector<double> u(n_res, 0.0), u_prev(n_res, 0.0);
    auto advance = [&](int slot) {
        try {
            s = integrate_slot(plant, std::move(s), cur_load, u, h, h, cfg.ideal_resources);
        } catch (const SimulationError& e) {
            throw SimulationError(std::string(e.what()) + " in slot " + std::to_string(slot + 1));
        }
    };

    for (int k = 0; k < n_slots; ++k) {
        const double tau = k * dt;
        for (int j = 0; j < n_areas; ++j) cur_load[j] = load_series[j][k];

        record(tau); // boundary sample: new load, previous controls still in force

        // measurement step: the new load acts for one integration step while
        // the boundary frequency samples are taken and broadcast
        for (int j = 0; j < n_areas; ++j) {
            meas_freq[j] = s.freq_dev[j];
            meas_tie[j] = s.tie_flow[j];
        }
        advance(k);

        if (distributed) {
            for (int j = 0; j < n_areas; ++j) {
                const int lo = plant.resource_offset(j);
                const int nr = plant.n_resources(j);
                auto& ctrl = dctrl[j];
                anchor_marginal_prices(ctrl, cfg.resources[j],
                                       std::span<const double>(s.mech_power).subspan(lo, nr));
                double innovation = 0.0;
                if (ctrl.mode == InnovationMode::oracle_load) {
                    double sum_pm = 0.0;
                    for (int i = 0; i < nr; ++i) sum_pm += s.mech_power[lo + i];
                    innovation = cur_load[j] - sum_pm;
                } else {
                    innovation = estimate_innovation(cfg.areas[j], meas_freq[j], s.freq_dev[j],
                                                     meas_tie[j], h);
                }
                const ConsensusStep step = consensus_innovation_step(ctrl, cfg.resources[j], innovation);
                for (int i = 0; i < nr; ++i) {
                    u[lo + i] = step.control[i];
                    s.marginal_price[lo + i] = step.lambda_estimate[i];
                }
            }
        } else {
            for (int j = 0; j < n_areas; ++j) {
                const int lo = plant.resource_offset(j);
                const int nr = plant.n_resources(j);
                AceSignal ace;
                ace.area_id = j;
                ace.freq_dev_now = s.freq_dev[j];
                ace.freq_dev_prev = meas_freq[j];
                ace.tie_flow = s.tie_flow[j];
                if (n_areas == 1) {
                    ace.value = s.freq_dev[j];
                } else {
                    double bias = cfg.areas[j].damping;
                    for (const auto& rp : cfg.resources[j]) bias += 1.0 / rp.droop;
                    ace.value = s.tie_flow[j] + bias * s.freq_dev[j];
                }
                const std::vector<double> ua = agc_step(actrl[j], ace, dt);
                for (int i = 0; i < nr; ++i) {
                    u[lo + i] = ua[i];
                    s.marginal_price[lo + i] = 2.0 * cfg.resources[j][i].cost_quad * ua[i];
                }
            }
        }

        if (cfg.enforce_ramp_limits) {
            int r = 0;
            for (const auto& list : cfg.resources)
                for (const auto& rp : list) {
                    u[r] = std::clamp(u[r], u_prev[r] - rp.ramp_limit, u_prev[r] + rp.ramp_limit);
                    ++r;
                }
        }
        u_prev = u;
        s.control = u;
        if (cfg.ideal_resources) s = ideal_resource_mode(std::move(s), u);

        if (1 < steps_per_slot || k == n_slots - 1) record(tau + h);
        for (int m = 2; m <= steps_per_slot; ++m) {
            advance(k);
            if (m < steps_per_slot || k == n_slots - 1) record(tau + m * h);
        }
    }

    detail::compute_metrics(tr, cfg, steps_per_slot);
    return tr;
}

/// Multi-area entry point: at least two areas coupled by tie lines, each
/// with its own communication graph. The innovation of an area subtracts its
/// net tie outflow, which drives tie flows back to the zero schedule.
inline SimTrace run_multi_area(const ScenarioConfig& cfg) {
    if (cfg.areas.size() < 2)
        throw std::invalid_argument("multi-area run needs at least two areas");
    bool any_tie = false;
    for (const auto& a : cfg.areas) any_tie = any_tie || !a.ties.empty();
    if (!any_tie) throw std::invalid_argument("multi-area run needs tie couplings");
    return run_scenario(cfg);
}

/// Same plant and load driven by two controller setups.
struct ComparisonReport {
    SimTrace first;
    SimTrace second;
};

inline ComparisonReport compare_controllers(const ScenarioConfig& a, const ScenarioConfig& b) {
    const bool same_plant = a.areas == b.areas && a.resources == b.resources &&
                            a.loads == b.loads && a.seed == b.seed && a.horizon == b.horizon &&
                            a.ideal_resources == b.ideal_resources;
    if (!same_plant)
        throw std::invalid_argument("controller comparison requires identical plant and load");
    return ComparisonReport{run_scenario(a), run_scenario(b)};
}

} // namespace gridfreq
