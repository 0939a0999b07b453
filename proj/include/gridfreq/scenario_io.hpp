#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gridfreq/errors.hpp"
#include "gridfreq/sim_engine.hpp"

namespace gridfreq {

/// A scenario file plus the optional [compare] controller variant.
struct ParsedScenario {
    ScenarioConfig primary;
    std::optional<ScenarioConfig> variant;
};

namespace detail {

struct KeyLine {
    int line_no = 0;
    std::string key;
    std::string value;
    std::vector<std::string> tokens;
    bool used = false;
};

struct RawSection {
    std::string name; // "" = global
    int line_no = 0;
    std::vector<KeyLine> keys;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline double to_double(const std::string& tok, int line, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
        throw ConfigError(line, key + ": '" + tok + "' is not a finite number");
    return v;
}

inline long long to_int(const std::string& tok, int line, const std::string& key) {
    char* end = nullptr;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError(line, key + ": '" + tok + "' is not an integer");
    return v;
}

inline bool to_bool(const std::string& tok, int line, const std::string& key) {
    if (tok == "true" || tok == "1" || tok == "yes") return true;
    if (tok == "false" || tok == "0" || tok == "no") return false;
    throw ConfigError(line, key + ": '" + tok + "' is not a boolean (true/false)");
}

// Per-resource value spec: explicit list (size 1 broadcasts) or a seeded
// uniform draw "uniform <lo> <hi>".
struct ValueSpec {
    bool present = false;
    bool uniform = false;
    double lo = 0.0, hi = 0.0;
    std::vector<double> values;
    int line = 0;
    std::string key;

    std::vector<double> resolve(int n, std::mt19937_64& rng, double fallback) const {
        if (!present) return std::vector<double>(n, fallback);
        if (uniform) {
            std::vector<double> out(n);
            for (int i = 0; i < n; ++i) out[i] = uniform_in(rng, lo, hi);
            return out;
        }
        if (values.size() == 1) return std::vector<double>(n, values[0]);
        if (static_cast<int>(values.size()) != n)
            throw ConfigError(line, key + ": expected 1 or " + std::to_string(n) +
                                        " values, got " + std::to_string(values.size()));
        return values;
    }
};

inline ValueSpec parse_value_spec(const KeyLine& kl) {
    ValueSpec spec;
    spec.present = true;
    spec.line = kl.line_no;
    spec.key = kl.key;
    if (!kl.tokens.empty() && kl.tokens[0] == "uniform") {
        if (kl.tokens.size() != 3)
            throw ConfigError(kl.line_no, kl.key + ": uniform needs '<lo> <hi>'");
        spec.uniform = true;
        spec.lo = to_double(kl.tokens[1], kl.line_no, kl.key);
        spec.hi = to_double(kl.tokens[2], kl.line_no, kl.key);
        if (!(spec.lo <= spec.hi))
            throw ConfigError(kl.line_no, kl.key + ": uniform needs lo <= hi");
        return spec;
    }
    if (kl.tokens.empty()) throw ConfigError(kl.line_no, kl.key + ": empty value");
    for (const auto& t : kl.tokens) spec.values.push_back(to_double(t, kl.line_no, kl.key));
    return spec;
}

inline std::vector<RawSection> read_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::vector<RawSection> sections;
    sections.push_back({});
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name != "area" && name != "compare")
                throw ConfigError(line_no, "unknown section [" + name + "] (expected [area] or [compare])");
            sections.push_back({name, line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value'");
        KeyLine kl;
        kl.line_no = line_no;
        kl.key = trim(line.substr(0, eq));
        kl.value = trim(line.substr(eq + 1));
        kl.tokens = tokenize(kl.value);
        if (kl.key.empty()) throw ConfigError(line_no, "missing key before '='");
        if (kl.tokens.empty()) throw ConfigError(line_no, kl.key + ": missing value");
        auto& sec = sections.back();
        for (const auto& other : sec.keys)
            if (other.key == kl.key && kl.key != "tie")
                throw ConfigError(line_no, "duplicate key '" + kl.key + "' (first at line " +
                                               std::to_string(other.line_no) + ")");
        sec.keys.push_back(std::move(kl));
    }
    return sections;
}

inline KeyLine* find_key(RawSection& sec, const std::string& key) {
    for (auto& kl : sec.keys)
        if (kl.key == key) {
            kl.used = true;
            return &kl;
        }
    return nullptr;
}

inline CommGraph parse_graph(const KeyLine& kl, int n_resources) {
    const auto& t = kl.tokens;
    try {
        if (t[0] == "ring") {
            if (n_resources == 2) return CommGraph(2, {{0, 1}});
            return build_ring(n_resources);
        }
        if (t[0] == "complete") return CommGraph::complete(n_resources);
        if (t[0] == "k-neighbor-ring") {
            if (t.size() != 2) throw ConfigError(kl.line_no, "graph: k-neighbor-ring needs '<k>'");
            return build_k_neighbor_ring(n_resources,
                                         static_cast<int>(to_int(t[1], kl.line_no, kl.key)));
        }
        if (t[0] == "edges") {
            std::vector<std::pair<int, int>> edges;
            for (std::size_t i = 1; i < t.size(); ++i) {
                const auto dash = t[i].find('-');
                if (dash == std::string::npos)
                    throw ConfigError(kl.line_no, "graph: edge '" + t[i] + "' must look like 'i-j'");
                const int a = static_cast<int>(to_int(t[i].substr(0, dash), kl.line_no, kl.key));
                const int b = static_cast<int>(to_int(t[i].substr(dash + 1), kl.line_no, kl.key));
                if (a < 1 || b < 1 || a > n_resources || b > n_resources)
                    throw ConfigError(kl.line_no, "graph: edge endpoint out of range 1.." +
                                                      std::to_string(n_resources));
                edges.emplace_back(a - 1, b - 1);
            }
            return CommGraph(n_resources, std::move(edges));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kl.line_no, std::string("graph: ") + e.what());
    }
    throw ConfigError(kl.line_no,
                      "graph: unknown generator '" + t[0] +
                          "' (expected ring, complete, k-neighbor-ring, edges)");
}

inline LoadProfile parse_load(const KeyLine& kl) {
    const auto& t = kl.tokens;
    LoadProfile p;
    if (t[0] == "zero") {
        if (t.size() != 1) throw ConfigError(kl.line_no, "load: zero takes no arguments");
        return p;
    }
    if (t[0] == "step") {
        if (t.size() != 2) throw ConfigError(kl.line_no, "load: step needs '<pu>'");
        p.kind = LoadProfile::Kind::step;
        p.step_magnitude = to_double(t[1], kl.line_no, kl.key);
        return p;
    }
    if (t[0] == "random") {
        if (t.size() != 3) throw ConfigError(kl.line_no, "load: random needs '<period_s> <bound_pu>'");
        p.kind = LoadProfile::Kind::piecewise_random;
        p.change_period = to_double(t[1], kl.line_no, kl.key);
        p.max_change = to_double(t[2], kl.line_no, kl.key);
        return p;
    }
    if (t[0] == "ramp") {
        if (t.size() != 3) throw ConfigError(kl.line_no, "load: ramp needs '<pu_per_change> <period_s>'");
        p.kind = LoadProfile::Kind::ramp;
        p.ramp_rate = to_double(t[1], kl.line_no, kl.key);
        p.change_period = to_double(t[2], kl.line_no, kl.key);
        return p;
    }
    if (t[0] == "file") {
        if (t.size() != 2) throw ConfigError(kl.line_no, "load: file needs '<path>'");
        p.kind = LoadProfile::Kind::from_file;
        std::ifstream in(t[1]);
        if (!in) throw ConfigError(kl.line_no, "load: cannot open '" + t[1] + "'");
        double tt, v;
        while (in >> tt >> v) p.samples.emplace_back(tt, v);
        return p;
    }
    throw ConfigError(kl.line_no, "load: unknown kind '" + t[0] +
                                      "' (expected zero, step, random, ramp, file)");
}

inline void reject_unused(const RawSection& sec) {
    for (const auto& kl : sec.keys)
        if (!kl.used)
            throw ConfigError(kl.line_no, "unknown key '" + kl.key + "'" +
                                              (sec.name.empty() ? "" : " in [" + sec.name + "]"));
}

} // namespace detail

/// Parses and fully validates a scenario file. Uniformly drawn parameters are
/// resolved here, in a fixed order, from the scenario seed (or its override),
/// so a parsed config is always concrete and reproducible.
inline ParsedScenario parse_scenario(const std::string& path,
                                     std::optional<std::uint64_t> seed_override = {}) {
    using detail::find_key;
    auto sections = detail::read_sections(path);

    ScenarioConfig cfg;
    auto& global = sections[0];

    if (auto* kl = find_key(global, "seed")) {
        const long long v = detail::to_int(kl->tokens[0], kl->line_no, kl->key);
        if (v < 0) throw ConfigError(kl->line_no, "seed must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(v);
    } else {
        cfg.seed = 1;
    }
    if (seed_override) cfg.seed = *seed_override;

    auto* slot = find_key(global, "slot_len");
    if (!slot) throw ConfigError("missing required key 'slot_len'");
    cfg.slot_len = detail::to_double(slot->tokens[0], slot->line_no, "slot_len");
    if (auto* kl = find_key(global, "inner_step"))
        cfg.inner_step = detail::to_double(kl->tokens[0], kl->line_no, "inner_step");
    auto* horizon = find_key(global, "horizon");
    if (!horizon) throw ConfigError("missing required key 'horizon'");
    cfg.horizon = detail::to_double(horizon->tokens[0], horizon->line_no, "horizon");
    if (auto* kl = find_key(global, "settling_band"))
        cfg.settling_band = detail::to_double(kl->tokens[0], kl->line_no, "settling_band");
    if (auto* kl = find_key(global, "ideal_resources"))
        cfg.ideal_resources = detail::to_bool(kl->tokens[0], kl->line_no, "ideal_resources");
    if (auto* kl = find_key(global, "enforce_ramp_limits"))
        cfg.enforce_ramp_limits = detail::to_bool(kl->tokens[0], kl->line_no, "enforce_ramp_limits");

    auto parse_controller = [&](detail::RawSection& sec, ControllerConfig& out,
                                bool require_kind) {
        if (auto* kl = find_key(sec, "controller")) {
            const std::string& v = kl->tokens[0];
            if (v == "distributed")
                out.kind = ControllerConfig::Kind::distributed;
            else if (v == "agc")
                out.kind = ControllerConfig::Kind::agc;
            else
                throw ConfigError(kl->line_no, "controller must be 'distributed' or 'agc'");
        } else if (require_kind) {
            throw ConfigError("missing required key 'controller'");
        }
        if (auto* kl = find_key(sec, "beta"))
            out.beta = detail::to_double(kl->tokens[0], kl->line_no, "beta");
        if (auto* kl = find_key(sec, "innovation")) {
            const std::string& v = kl->tokens[0];
            if (v == "frequency")
                out.innovation = InnovationMode::frequency_estimated;
            else if (v == "oracle")
                out.innovation = InnovationMode::oracle_load;
            else
                throw ConfigError(kl->line_no, "innovation must be 'frequency' or 'oracle'");
        }
        if (auto* kl = find_key(sec, "agc_kp"))
            out.agc_kp = detail::to_double(kl->tokens[0], kl->line_no, "agc_kp");
        if (auto* kl = find_key(sec, "agc_ki"))
            out.agc_ki = detail::to_double(kl->tokens[0], kl->line_no, "agc_ki");
        if (auto* kl = find_key(sec, "agc_alpha")) {
            const std::string& v = kl->tokens[0];
            if (v == "uniform")
                out.alpha_mode = ControllerConfig::AlphaMode::uniform;
            else if (v == "cost_weighted")
                out.alpha_mode = ControllerConfig::AlphaMode::cost_weighted;
            else
                throw ConfigError(kl->line_no, "agc_alpha must be 'uniform' or 'cost_weighted'");
        }
    };
    parse_controller(global, cfg.controller, true);

    // ties are declared once per pair at global scope, 1-based area ids
    struct RawTie {
        int line;
        int a, b;
        double stiffness;
    };
    std::vector<RawTie> raw_ties;
    for (auto& kl : global.keys) {
        if (kl.key != "tie") continue;
        kl.used = true;
        if (kl.tokens.size() != 3)
            throw ConfigError(kl.line_no, "tie needs '<area_a> <area_b> <stiffness>'");
        RawTie t;
        t.line = kl.line_no;
        t.a = static_cast<int>(detail::to_int(kl.tokens[0], kl.line_no, "tie"));
        t.b = static_cast<int>(detail::to_int(kl.tokens[1], kl.line_no, "tie"));
        t.stiffness = detail::to_double(kl.tokens[2], kl.line_no, "tie");
        if (t.a == t.b) throw ConfigError(kl.line_no, "tie cannot couple an area to itself");
        raw_ties.push_back(t);
    }

    // area sections
    std::vector<detail::RawSection*> area_secs;
    detail::RawSection* compare_sec = nullptr;
    for (std::size_t i = 1; i < sections.size(); ++i) {
        if (sections[i].name == "area")
            area_secs.push_back(&sections[i]);
        else if (compare_sec)
            throw ConfigError(sections[i].line_no, "only one [compare] section is allowed");
        else
            compare_sec = &sections[i];
    }
    if (area_secs.empty()) throw ConfigError("scenario needs at least one [area] section");

    const bool need_graph = cfg.controller.kind == ControllerConfig::Kind::distributed ||
                            (compare_sec != nullptr);
    for (std::size_t j = 0; j < area_secs.size(); ++j) {
        auto& sec = *area_secs[j];
        AreaParams area;
        auto* inertia = find_key(sec, "inertia");
        if (!inertia)
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) + ": missing 'inertia'");
        area.inertia = detail::to_double(inertia->tokens[0], inertia->line_no, "inertia");
        auto* damping = find_key(sec, "damping");
        if (!damping)
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) + ": missing 'damping'");
        area.damping = detail::to_double(damping->tokens[0], damping->line_no, "damping");

        detail::ValueSpec a_spec, b_spec, c_spec, droop_spec, gov_spec, turb_spec, ramp_spec;
        if (auto* kl = find_key(sec, "a")) a_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "b")) b_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "c")) c_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "droop")) droop_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "governor_tc")) gov_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "turbine_tc")) turb_spec = detail::parse_value_spec(*kl);
        if (auto* kl = find_key(sec, "ramp_limit")) ramp_spec = detail::parse_value_spec(*kl);
        if (!a_spec.present)
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) + ": missing 'a'");
        if (!droop_spec.present)
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) + ": missing 'droop'");

        int n = 0;
        if (auto* kl = find_key(sec, "n")) {
            n = static_cast<int>(detail::to_int(kl->tokens[0], kl->line_no, "n"));
            if (n < 1) throw ConfigError(kl->line_no, "n must be >= 1");
        }
        for (const auto* spec : {&a_spec, &b_spec, &c_spec, &droop_spec, &gov_spec, &turb_spec, &ramp_spec}) {
            if (spec->present && !spec->uniform && spec->values.size() > 1) {
                const int sz = static_cast<int>(spec->values.size());
                if (n == 0) n = sz;
                if (sz != n)
                    throw ConfigError(spec->line, spec->key + ": expected " + std::to_string(n) +
                                                      " values, got " + std::to_string(sz));
            }
        }
        if (n == 0)
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) +
                                               ": resource count undetermined; give a list or 'n'");

        // fixed draw order keeps seeded scenarios stable: a, droop,
        // governor_tc, turbine_tc, ramp_limit
        std::mt19937_64 rng(
            detail::splitmix64(cfg.seed ^ (0xD1B54A32D192ED03ULL * (j + 1))));
        std::vector<ResourceParams> list(n);
        const auto a_vals = a_spec.resolve(n, rng, 0.0);
        const auto b_vals = b_spec.resolve(n, rng, 0.0);
        const auto c_vals = c_spec.resolve(n, rng, 0.0);
        const auto droop_vals = droop_spec.resolve(n, rng, 0.0);
        const auto gov_vals = gov_spec.resolve(n, rng, 0.0);
        const auto turb_vals = turb_spec.resolve(n, rng, 0.0);
        const auto ramp_vals = ramp_spec.resolve(n, rng, 1.0);
        for (int i = 0; i < n; ++i) {
            if (!(a_vals[i] > 0.0)) throw ConfigError(a_spec.line, "a must be > 0");
            if (!(droop_vals[i] > 0.0)) throw ConfigError(droop_spec.line, "droop must be > 0");
            if (gov_vals[i] < 0.0)
                throw ConfigError(gov_spec.line, "governor_tc must be >= 0");
            if (turb_vals[i] < 0.0)
                throw ConfigError(turb_spec.line, "turbine_tc must be >= 0");
            if (!(ramp_vals[i] > 0.0))
                throw ConfigError(ramp_spec.present ? ramp_spec.line : sec.line_no,
                                  "ramp_limit must be > 0");
            list[i].cost_quad = a_vals[i];
            list[i].cost_lin = b_vals[i];
            list[i].cost_const = c_vals[i];
            list[i].droop = droop_vals[i];
            list[i].governor_tc = gov_vals[i];
            list[i].turbine_tc = turb_vals[i];
            list[i].ramp_limit = ramp_vals[i];
        }

        LoadProfile load;
        if (auto* kl = find_key(sec, "load")) load = detail::parse_load(*kl);

        cfg.areas.push_back(area);
        cfg.resources.push_back(std::move(list));
        cfg.loads.push_back(std::move(load));

        if (auto* kl = find_key(sec, "graph")) {
            cfg.graphs.push_back(detail::parse_graph(*kl, n));
        } else if (need_graph) {
            throw ConfigError(sec.line_no, "area " + std::to_string(j + 1) + ": missing 'graph'");
        }
    }

    for (const auto& t : raw_ties) {
        const int na = static_cast<int>(cfg.areas.size());
        if (t.a < 1 || t.a > na || t.b < 1 || t.b > na)
            throw ConfigError(t.line, "tie area id out of range 1.." + std::to_string(na));
        cfg.areas[t.a - 1].ties.push_back({t.b - 1, t.stiffness});
        cfg.areas[t.b - 1].ties.push_back({t.a - 1, t.stiffness});
    }

    ParsedScenario out;
    out.primary = cfg;

    if (compare_sec) {
        ScenarioConfig variant = cfg;
        parse_controller(*compare_sec, variant.controller, false);
        if (auto* kl = find_key(*compare_sec, "slot_len"))
            variant.slot_len = detail::to_double(kl->tokens[0], kl->line_no, "slot_len");
        if (auto* kl = find_key(*compare_sec, "inner_step"))
            variant.inner_step = detail::to_double(kl->tokens[0], kl->line_no, "inner_step");
        if (auto* kl = find_key(*compare_sec, "settling_band"))
            variant.settling_band = detail::to_double(kl->tokens[0], kl->line_no, "settling_band");
        detail::reject_unused(*compare_sec);
        out.variant = std::move(variant);
    }

    detail::reject_unused(global);
    for (auto* sec : area_secs) detail::reject_unused(*sec);

    try {
        out.primary.validate();
        if (out.variant) out.variant->validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()) + " (in '" + path + "')");
    }
    return out;
}

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
        if (!out) throw std::runtime_error("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
}

} // namespace detail

/// Writes the trace as CSV, one row per sample, 17 significant digits so a
/// read-back reproduces every double exactly. The write is atomic
/// (temp file + rename).
inline void write_trace(const SimTrace& trace, const std::string& path) {
    std::string out;
    out.reserve(trace.n_samples() * (trace.n_areas() * 3 + trace.n_resources() * 4 + 1) * 20);

    out += "time_s";
    for (int j = 0; j < trace.n_areas(); ++j) {
        const std::string aj = "a" + std::to_string(j + 1);
        out += ",freq_hz[" + aj + "],load_pu[" + aj + "],tie_pu[" + aj + "]";
    }
    int r = 0;
    for (int j = 0; j < trace.n_areas(); ++j)
        for (int i = 0; i < trace.resources_per_area[j]; ++i, ++r) {
            const std::string rj = "a" + std::to_string(j + 1) + ".r" + std::to_string(i + 1);
            out += ",mech_pu[" + rj + "],valve_pu[" + rj + "],control_pu[" + rj + "],price[" + rj + "]";
        }
    out += "\n";

    for (std::size_t k = 0; k < trace.n_samples(); ++k) {
        out += detail::fmt_g17(trace.times[k]);
        for (int j = 0; j < trace.n_areas(); ++j) {
            out += ',';
            out += detail::fmt_g17(trace.freq[j][k]);
            out += ',';
            out += detail::fmt_g17(trace.load[j][k]);
            out += ',';
            out += detail::fmt_g17(trace.tie[j][k]);
        }
        for (int i = 0; i < trace.n_resources(); ++i) {
            out += ',';
            out += detail::fmt_g17(trace.mech[i][k]);
            out += ',';
            out += detail::fmt_g17(trace.valve[i][k]);
            out += ',';
            out += detail::fmt_g17(trace.control[i][k]);
            out += ',';
            out += detail::fmt_g17(trace.price[i][k]);
        }
        out += "\n";
    }
    detail::atomic_write(path, out);
}

/// Reads a CSV trace back. Series and times are restored exactly; metrics
/// are not stored in the file and stay empty.
inline SimTrace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace file '" + path + "' is empty");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) header.push_back(col);
    }
    if (header.empty() || header[0] != "time_s")
        throw std::runtime_error("trace header must start with time_s");
    for (std::size_t i = 0; i < header.size(); ++i)
        for (std::size_t j = i + 1; j < header.size(); ++j)
            if (header[i] == header[j])
                throw std::runtime_error("duplicate trace column '" + header[i] + "'");

    SimTrace tr;
    int n_areas = 0;
    while (header.size() > static_cast<std::size_t>(1 + 3 * n_areas) &&
           header[1 + 3 * n_areas] == "freq_hz[a" + std::to_string(n_areas + 1) + "]")
        ++n_areas;
    if (n_areas == 0) throw std::runtime_error("trace has no area columns");
    const std::size_t res_cols = header.size() - 1 - 3 * n_areas;
    if (res_cols % 4 != 0) throw std::runtime_error("trace has a partial resource column group");
    const int n_res = static_cast<int>(res_cols / 4);

    tr.freq.assign(n_areas, {});
    tr.load.assign(n_areas, {});
    tr.tie.assign(n_areas, {});
    tr.mech.assign(n_res, {});
    tr.valve.assign(n_res, {});
    tr.control.assign(n_res, {});
    tr.price.assign(n_res, {});
    tr.resources_per_area.assign(n_areas, 0);
    for (int i = 0; i < n_res; ++i) {
        const std::string& col = header[1 + 3 * n_areas + 4 * i];
        const auto a_at = col.find("[a");
        const auto dot = col.find('.', a_at);
        if (a_at == std::string::npos || dot == std::string::npos)
            throw std::runtime_error("malformed resource column '" + col + "'");
        const int area = std::stoi(col.substr(a_at + 2, dot - a_at - 2));
        if (area < 1 || area > n_areas)
            throw std::runtime_error("resource column '" + col + "' names an unknown area");
        ++tr.resources_per_area[area - 1];
    }

    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        std::vector<double> fields;
        fields.reserve(header.size());
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p)
                throw std::runtime_error("trace row " + std::to_string(row) + ": bad number near '" +
                                         std::string(p).substr(0, 12) + "'");
            fields.push_back(v);
            p = end;
            if (*p == ',') {
                ++p;
            } else if (*p == '\0' || *p == '\r') {
                break;
            } else {
                throw std::runtime_error("trace row " + std::to_string(row) + ": unexpected character '" +
                                         std::string(1, *p) + "'");
            }
        }
        if (fields.size() != header.size())
            throw std::runtime_error("trace row " + std::to_string(row) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        if (!tr.times.empty() && fields[0] <= tr.times.back())
            throw std::runtime_error("trace row " + std::to_string(row) + ": times must increase");
        tr.times.push_back(fields[0]);
        std::size_t at = 1;
        for (int j = 0; j < n_areas; ++j) {
            tr.freq[j].push_back(fields[at++]);
            tr.load[j].push_back(fields[at++]);
            tr.tie[j].push_back(fields[at++]);
        }
        for (int i = 0; i < n_res; ++i) {
            tr.mech[i].push_back(fields[at++]);
            tr.valve[i].push_back(fields[at++]);
            tr.control[i].push_back(fields[at++]);
            tr.price[i].push_back(fields[at++]);
        }
    }
    return tr;
}

namespace detail {

inline std::string fmt_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

/// Renders the analysis report for a finished run: scenario digest, spectral
/// and tracking-bound diagnostics per area, settling/nadir/dispatch-gap
/// metrics, and the ramping-relaxation table. Every number is recomputable
/// from the config and the emitted trace.
inline std::string render_report(const ScenarioConfig& cfg, const SimTrace& trace,
                                 const std::string& scenario_name) {
    std::ostringstream out;
    const bool distributed = cfg.controller.kind == ControllerConfig::Kind::distributed;
    out << "scenario: " << scenario_name << "\n";
    if (distributed) {
        out << "controller: distributed beta=" << detail::fmt_g6(cfg.controller.beta)
            << " innovation="
            << (cfg.controller.innovation == InnovationMode::oracle_load ? "oracle" : "frequency")
            << "\n";
    } else {
        out << "controller: agc kp=" << detail::fmt_g6(cfg.controller.agc_kp)
            << " ki=" << detail::fmt_g6(cfg.controller.agc_ki) << " alpha="
            << (cfg.controller.alpha_mode == ControllerConfig::AlphaMode::uniform ? "uniform"
                                                                                  : "cost_weighted")
            << "\n";
    }
    int total_res = 0;
    for (const auto& list : cfg.resources) total_res += static_cast<int>(list.size());
    out << "areas: " << cfg.areas.size() << "  resources: " << total_res << "\n";
    out << "slot_len_s: " << detail::fmt_g6(cfg.slot_len)
        << "  inner_step_s: " << detail::fmt_g6(cfg.effective_inner_step())
        << "  horizon_s: " << detail::fmt_g6(cfg.horizon) << "  seed: " << cfg.seed << "\n";
    out << "settling_band_hz: " << detail::fmt_g6(cfg.settling_band) << "\n";
    out << "ideal_resources: " << (cfg.ideal_resources ? "true" : "false") << "\n";

    for (std::size_t j = 0; j < cfg.areas.size(); ++j) {
        out << "\n[area " << j + 1 << "]\n";
        std::vector<double> a(cfg.resources[j].size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = cfg.resources[j][i].cost_quad;
        if (distributed) {
            const SpectralReport rep = check_condition(cfg.graphs[j], cfg.controller.beta, a);
            out << "spectral.connected: " << (rep.connected ? "true" : "false") << "\n";
            out << "spectral.second_largest: " << detail::fmt_g17(rep.second_largest) << "\n";
            out << "spectral.gamma: " << detail::fmt_g17(rep.gamma) << "\n";
            out << "spectral.satisfied: " << (rep.satisfied ? "true" : "false") << "\n";
            const double eps = cfg.loads[j].epsilon();
            out << "bound.epsilon_pu: " << detail::fmt_g6(eps) << "\n";
            if (rep.satisfied) {
                const CostBound b = compute_cost_bound(cfg.graphs[j], cfg.controller.beta, a, eps);
                out << "bound.gamma: " << detail::fmt_g6(b.gamma) << "\n";
                out << "bound.delta: " << detail::fmt_g6(b.delta) << "\n";
                out << "bound.c: " << detail::fmt_g6(b.c) << "\n";
                out << "bound.c_epsilon: " << detail::fmt_g6(b.c * b.epsilon) << "\n";
                const auto checks =
                    ramp_relaxation_check(b, cfg.graphs[j], cfg.controller.beta, cfg.resources[j]);
                for (std::size_t i = 0; i < checks.size(); ++i)
                    out << "ramp_check.r" << i + 1 << ": "
                        << (checks[i].satisfied ? "satisfied" : "violated")
                        << " margin_pu=" << detail::fmt_g6(checks[i].margin) << "\n";
            } else {
                out << "bound.c: undefined (spectral condition not satisfied)\n";
            }
            const auto gains = pi_equivalent_gains(cfg.resources[j], cfg.areas[j], cfg.slot_len);
            for (std::size_t i = 0; i < gains.size(); ++i)
                out << "pi_equivalent.r" << i + 1 << ": t_u_s=" << detail::fmt_g6(gains[i].t_u)
                    << " gain=" << detail::fmt_g6(gains[i].proportional_gain) << "\n";
        } else {
            out << "spectral: n/a (agc controller)\n";
        }
    }

    out << "\n[metrics]\n";
    if (trace.metrics.settling_time)
        out << "settling_time_s: " << detail::fmt_g6(*trace.metrics.settling_time) << "\n";
    else
        out << "settling_time_s: never\n";
    out << "freq_nadir_hz: " << detail::fmt_g17(trace.metrics.freq_nadir) << "\n";
    if (!trace.metrics.dispatch_gap.empty()) {
        const auto& first = trace.metrics.dispatch_gap.front();
        const auto& last = trace.metrics.dispatch_gap.back();
        double max_abs = 0.0;
        for (const auto& g : trace.metrics.dispatch_gap)
            max_abs = std::max(max_abs, g.max_control_dev);
        out << "dispatch_gap.first_rel: " << detail::fmt_g6(first.relative_error) << "\n";
        out << "dispatch_gap.last_rel: " << detail::fmt_g6(last.relative_error) << "\n";
        out << "dispatch_gap.max_abs_control_pu: " << detail::fmt_g6(max_abs) << "\n";
    }

    if (!trace.warnings.empty()) {
        out << "\n[warnings]\n";
        for (const auto& w : trace.warnings) out << w << "\n";
    }
    return out.str();
}

inline void write_report(const ScenarioConfig& cfg, const SimTrace& trace,
                         const std::string& scenario_name, const std::string& path) {
    detail::atomic_write(path, render_report(cfg, trace, scenario_name));
}

} // namespace gridfreq
