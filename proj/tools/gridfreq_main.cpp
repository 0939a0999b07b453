// Command line front end: run scenarios, compare controllers, and print the
// dispatch / spectral / bound analyses from a scenario file.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridfreq/scenario_io.hpp"

namespace {

using namespace gridfreq;

std::string report_path_for(const std::string& out_path) {
    std::string base = out_path;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
        base.resize(base.size() - 4);
    return base + ".report.txt";
}

void print_warnings(const SimTrace& trace) {
    for (const auto& w : trace.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const std::string& config, const std::string& out,
            std::optional<double> band, std::optional<std::uint64_t> seed) {
    ParsedScenario parsed = parse_scenario(config, seed);
    if (band) parsed.primary.settling_band = *band;
    const SimTrace trace = parsed.primary.areas.size() > 1 ? run_multi_area(parsed.primary)
                                                           : run_scenario(parsed.primary);
    print_warnings(trace);
    write_trace(trace, out);
    write_report(parsed.primary, trace, config, report_path_for(out));
    std::cout << render_report(parsed.primary, trace, config);
    std::cout << "trace: " << out << "\nreport: " << report_path_for(out) << "\n";
    return 0;
}

int cmd_compare(const std::string& config, const std::string& out,
                std::optional<double> band, std::optional<std::uint64_t> seed) {
    ParsedScenario parsed = parse_scenario(config, seed);
    if (!parsed.variant)
        throw ConfigError("scenario '" + config + "' has no [compare] section");
    if (band) {
        parsed.primary.settling_band = *band;
        parsed.variant->settling_band = *band;
    }
    const ComparisonReport rep = compare_controllers(parsed.primary, *parsed.variant);
    print_warnings(rep.first);
    print_warnings(rep.second);

    const std::string out_a = out + ".a.csv";
    const std::string out_b = out + ".b.csv";
    write_trace(rep.first, out_a);
    write_trace(rep.second, out_b);
    write_report(parsed.primary, rep.first, config + " (primary)", out + ".a.report.txt");
    write_report(*parsed.variant, rep.second, config + " (compare)", out + ".b.report.txt");

    auto summarize = [](const char* tag, const SimTrace& t) {
        std::cout << tag << ": settling_time_s=";
        if (t.metrics.settling_time)
            std::cout << *t.metrics.settling_time;
        else
            std::cout << "never";
        double max_abs_f = 0.0;
        for (const auto& series : t.freq)
            for (double f : series) max_abs_f = std::max(max_abs_f, std::abs(f));
        std::cout << " freq_nadir_hz=" << t.metrics.freq_nadir << " max_abs_freq_hz=" << max_abs_f
                  << "\n";
    };
    summarize("primary", rep.first);
    summarize("compare", rep.second);
    std::cout << "traces: " << out_a << " " << out_b << "\n";
    return 0;
}

int cmd_check_graph(const std::string& config) {
    const ParsedScenario parsed = parse_scenario(config);
    const auto& cfg = parsed.primary;
    if (cfg.graphs.empty()) throw ConfigError("scenario has no communication graphs");
    for (std::size_t j = 0; j < cfg.graphs.size(); ++j) {
        std::vector<double> a(cfg.resources[j].size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = cfg.resources[j][i].cost_quad;
        const SpectralReport rep = check_condition(cfg.graphs[j], cfg.controller.beta, a);
        std::cout << "area " << j + 1 << ": nodes=" << cfg.graphs[j].size()
                  << " edges=" << cfg.graphs[j].edges().size()
                  << " connected=" << (rep.connected ? "true" : "false")
                  << " second_largest=" << rep.second_largest << " gamma=" << rep.gamma
                  << " satisfied=" << (rep.satisfied ? "true" : "false") << "\n";
    }
    return 0;
}

int cmd_dispatch(const std::string& config, double load) {
    const ParsedScenario parsed = parse_scenario(config);
    const auto& cfg = parsed.primary;
    for (std::size_t j = 0; j < cfg.areas.size(); ++j) {
        std::vector<double> a(cfg.resources[j].size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = cfg.resources[j][i].cost_quad;
        const DispatchSolution sol = optimal_dispatch(a, load);
        std::cout << "area " << j + 1 << ": marginal_price=" << sol.marginal_price
                  << " total_cost=" << sol.total_cost << "\n";
        for (std::size_t i = 0; i < sol.control.size(); ++i)
            std::cout << "  u*[r" << i + 1 << "] = " << sol.control[i] << "\n";
    }
    return 0;
}

int cmd_bound(const std::string& config, std::optional<double> epsilon) {
    const ParsedScenario parsed = parse_scenario(config);
    const auto& cfg = parsed.primary;
    if (cfg.graphs.empty()) throw ConfigError("scenario has no communication graphs");
    for (std::size_t j = 0; j < cfg.areas.size(); ++j) {
        std::vector<double> a(cfg.resources[j].size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = cfg.resources[j][i].cost_quad;
        const double eps = epsilon ? *epsilon : cfg.loads[j].epsilon();
        const CostBound b = compute_cost_bound(cfg.graphs[j], cfg.controller.beta, a, eps);
        std::cout << "area " << j + 1 << ": gamma=" << b.gamma << " delta=" << b.delta
                  << " c=" << b.c << " epsilon=" << b.epsilon << " c_epsilon=" << b.c * b.epsilon
                  << "\n";
    }
    return 0;
}

int cmd_ramp_check(const std::string& config, std::optional<double> epsilon) {
    const ParsedScenario parsed = parse_scenario(config);
    const auto& cfg = parsed.primary;
    if (cfg.graphs.empty()) throw ConfigError("scenario has no communication graphs");
    for (std::size_t j = 0; j < cfg.areas.size(); ++j) {
        std::vector<double> a(cfg.resources[j].size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = cfg.resources[j][i].cost_quad;
        const double eps = epsilon ? *epsilon : cfg.loads[j].epsilon();
        const CostBound b = compute_cost_bound(cfg.graphs[j], cfg.controller.beta, a, eps);
        const auto checks = ramp_relaxation_check(b, cfg.graphs[j], cfg.controller.beta,
                                                  cfg.resources[j]);
        for (std::size_t i = 0; i < checks.size(); ++i)
            std::cout << "area " << j + 1 << " r" << i + 1 << ": "
                      << (checks[i].satisfied ? "satisfied" : "violated")
                      << " margin_pu=" << checks[i].margin
                      << " ramp_limit_pu=" << cfg.resources[j][i].ramp_limit << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic secondary frequency control simulator and analysis tool"};
    app.require_subcommand(1);

    std::string config, out = "trace.csv";
    double band = -1.0;
    long long seed_override = -1;
    double load = 0.0;
    double epsilon = -1.0;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config, "scenario file")->required();
        if (with_out) sub->add_option("--out", out, "output path (CSV trace / prefix)");
        sub->add_option("--band", band, "settling band override, Hz");
        sub->add_option("--seed-override", seed_override, "replace the scenario seed");
    };

    auto* run = app.add_subcommand("run", "run one scenario; write trace and report");
    add_common(run, true);
    auto* compare = app.add_subcommand("compare", "run the scenario and its [compare] variant");
    add_common(compare, true);
    auto* check = app.add_subcommand("check-graph", "spectral feasibility of the communication graphs");
    check->add_option("--config", config, "scenario file")->required();
    auto* dispatch = app.add_subcommand("dispatch", "closed-form optimal dispatch for a load deviation");
    dispatch->add_option("--config", config, "scenario file")->required();
    dispatch->add_option("--load", load, "load deviation, pu")->required();
    auto* bound = app.add_subcommand("bound", "tracking-bound constant for the scenario");
    bound->add_option("--config", config, "scenario file")->required();
    bound->add_option("--epsilon", epsilon, "per-slot load change bound, pu");
    auto* ramp = app.add_subcommand("ramp-check", "ramping-relaxation condition per resource");
    ramp->add_option("--config", config, "scenario file")->required();
    ramp->add_option("--epsilon", epsilon, "per-slot load change bound, pu");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::optional<double> band_opt;
    if (band >= 0.0) band_opt = band;
    std::optional<std::uint64_t> seed_opt;
    if (seed_override >= 0) seed_opt = static_cast<std::uint64_t>(seed_override);
    std::optional<double> eps_opt;
    if (epsilon >= 0.0) eps_opt = epsilon;

    try {
        if (run->parsed()) return cmd_run(config, out, band_opt, seed_opt);
        if (compare->parsed()) return cmd_compare(config, out, band_opt, seed_opt);
        if (check->parsed()) return cmd_check_graph(config);
        if (dispatch->parsed()) return cmd_dispatch(config, load);
        if (bound->parsed()) return cmd_bound(config, eps_opt);
        if (ramp->parsed()) return cmd_ramp_check(config, eps_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
