// Command-line front end: simulate, estimate, fdir, compare.

#include "attfdir/csv.hpp"
#include "attfdir/error.hpp"
#include "attfdir/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

using namespace attfdir;

namespace {

struct Common {
    std::string scenario;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> t_end;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, const std::string& output_help) {
    cmd->add_option("scenario", c.scenario, "Scenario file or bundled scenario name")->required();
    cmd->add_option("-o,--output", c.output, output_help)->required();
    cmd->add_option("--seed", c.seed, "Override the master seed");
    cmd->add_option("--dt", c.dt, "Override the time step [s]");
    cmd->add_option("--t-end", c.t_end, "Override the run length [s]");
    cmd->add_flag("-q,--quiet", c.quiet, "Suppress standard output");
}

ScenarioConfig load(const Common& c) {
    ScenarioConfig cfg = load_scenario(resolve_scenario_path(c.scenario, ATTFDIR_SCENARIO_DIR));
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.dt) {
        if (!(*c.dt > 0.0)) {
            throw ConfigError("--dt: must be positive");
        }
        cfg.dt = *c.dt;
    }
    if (c.t_end) {
        if (!(*c.t_end > 0.0)) {
            throw ConfigError("--t-end: must be positive");
        }
        cfg.t_end = *c.t_end;
    }
    validate(cfg);
    return cfg;
}

std::string format_time(double t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    std::string s(buf);
    while (s.size() > 2 && s.back() == '0' && s[s.size() - 2] != '.') {
        s.pop_back();
    }
    return s;
}

std::string format_optional(const std::optional<double>& v, const char* fmt) {
    if (!v) {
        return "-";
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

void print_report(const StepRecord& s) {
    const FaultReport& r = s.report;
    std::string isolated;
    for (const auto& name : r.isolated) {
        isolated += (isolated.empty() ? "" : ",") + name;
    }
    std::printf("t=%s detected statistic=%.4f threshold=%.4f dof=%d isolated=%s%s\n",
                format_time(r.t).c_str(), r.statistic, r.threshold, r.dof,
                isolated.empty() ? "-" : isolated.c_str(), s.update_skipped ? " update=skipped" : "");
}

void print_metrics_header() {
    std::printf("%-6s %12s %12s %12s %10s %8s %8s %8s\n", "filter", "rmse_q", "rmse_w",
                "rmse_b", "latency_s", "alarms", "missed", "nis");
}

void print_metrics(const Metrics& m) {
    std::printf("%-6s %12.4e %12.4e %12s %10s %8d %8s %8.3f\n", m.filter.c_str(), m.rmse_q,
                m.rmse_omega, format_optional(m.rmse_bias, "%.4e").c_str(),
                format_optional(m.detection_latency, "%.2f").c_str(), m.false_alarms,
                m.missed_detection ? "yes" : "no", m.mean_nis);
}

std::vector<FilterKind> parse_filters(const std::string& list) {
    std::vector<FilterKind> kinds;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            kinds.push_back(filter_kind_from_string(item));
        }
    }
    if (kinds.empty()) {
        throw ConfigError("--filters: at least one filter required");
    }
    return kinds;
}

int run(int argc, char** argv) {
    CLI::App app{"Spacecraft attitude estimation and sensor FDIR workbench"};
    app.require_subcommand(1);

    Common sim, est, fdir, cmp;
    std::string filters = "ekf,ukf,pf";
    auto* c_sim = app.add_subcommand("simulate", "Truth and sensor measurements only");
    add_common(c_sim, sim, "Output CSV file");
    auto* c_est = app.add_subcommand("estimate", "Run the configured filter without FDIR");
    add_common(c_est, est, "Output CSV file");
    auto* c_fdir = app.add_subcommand("fdir", "Filter with detection, isolation and recovery");
    add_common(c_fdir, fdir, "Output CSV file");
    auto* c_cmp = app.add_subcommand("compare", "Run several filters and tabulate metrics");
    add_common(c_cmp, cmp, "Output directory for per-filter CSV files");
    c_cmp->add_option("--filters", filters, "Comma-separated filter list")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (c_sim->parsed() || c_est->parsed() || c_fdir->parsed()) {
        const Common& c = c_sim->parsed() ? sim : (c_est->parsed() ? est : fdir);
        const RunMode mode = c_sim->parsed() ? RunMode::Simulate
                             : c_est->parsed() ? RunMode::Estimate
                                               : RunMode::Fdir;
        const ScenarioConfig cfg = load(c);
        const RunResult result = run_scenario(cfg, mode);
        export_csv(result, c.output);
        if (!c.quiet) {
            if (mode == RunMode::Fdir) {
                for (const auto& s : result.steps) {
                    if (s.report.detected) {
                        print_report(s);
                    }
                }
            }
            if (mode != RunMode::Simulate) {
                print_metrics_header();
                print_metrics(compute_metrics(result, cfg));
            }
            std::printf("wrote %zu rows to %s\n", result.steps.size(), c.output.c_str());
        }
        return 0;
    }

    const ScenarioConfig cfg = load(cmp);
    const auto kinds = parse_filters(filters);
    const auto results = compare(cfg, kinds, RunMode::Fdir);
    std::filesystem::create_directories(cmp.output);
    for (const auto& r : results) {
        export_csv(r, std::filesystem::path(cmp.output) / (cfg.name + "_" + to_string(r.filter) + ".csv"));
    }
    if (!cmp.quiet) {
        print_metrics_header();
        for (const auto& r : results) {
            print_metrics(compute_metrics(r, cfg));
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}
