#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "semcast/channel.hpp"
#include "semcast/labelmap.hpp"
#include "semcast/metrics.hpp"
#include "semcast/montecarlo.hpp"
#include "semcast/optimizer.hpp"
#include "semcast/rdp.hpp"
#include "semcast/rng.hpp"
#include "semcast/scenario.hpp"
#include "semcast/units.hpp"

namespace {

using namespace semcast;

ChannelRealization make_channel(const Scenario& scenario, std::uint64_t seed, bool unit_fading) {
    return unit_fading ? unit_scattering_channel(scenario.radio) : draw_channel(scenario.radio, seed);
}

void maybe_dump_channel(const std::string& path, const ChannelRealization& channel) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    out << "trial,user,gain,scattering\n";
    write_channel_csv(out, 0, channel);
}

int cmd_solve(const std::string& config, std::uint64_t seed, bool unit_fading,
              const std::string& out_csv, const std::string& dump_channel) {
    const Scenario scenario = load_scenario(config);
    const ChannelRealization channel = make_channel(scenario, seed, unit_fading);
    maybe_dump_channel(dump_channel, channel);

    const SolveReport report = sqp_solve(scenario, channel);
    write_solve_report(std::cout, report, scenario, channel);
    const RunMetrics metrics = metrics_from_solution(report, scenario, channel);
    std::printf("r*: %.5f bpp   |b|: %.0f bits   lambda*: %.4f bits/s/Hz   gamma*: %.4f\n",
                metrics.compression_rate_bpp, metrics.total_bits, metrics.spectral_efficiency,
                metrics.power_ratio);
    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary);
        out << kSolveReportCsvHeader << '\n' << solve_report_csv_row(report) << '\n';
    }
    return report.converged ? 0 : 1;
}

int cmd_bench(const std::string& config, std::uint64_t seed, bool unit_fading,
              const std::string& out_csv) {
    const Scenario scenario = load_scenario(config);
    const ChannelRealization channel = make_channel(scenario, seed, unit_fading);

    const SolveReport report = sqp_solve(scenario, channel);
    const RunMetrics proposed = metrics_from_solution(report, scenario, channel);
    const RunMetrics ngm = ngm_metrics(scenario, channel);
    const RunMetrics fgm = fgm_metrics(scenario, channel);

    std::printf("%-10s %14s %14s %10s %12s %14s\n", "benchmark", "t_star_ms", "lambda_star",
                "gamma", "r_star_bpp", "total_bits");
    auto print_row = [](const char* name, const RunMetrics& m) {
        std::printf("%-10s %14.4f %14.4f %10.4f %12.5f %14.0f\n", name,
                    units::s_to_ms(m.per_user_latency_s), m.spectral_efficiency, m.power_ratio,
                    m.compression_rate_bpp, m.total_bits);
    };
    print_row("proposed", proposed);
    print_row("ngm", ngm);
    print_row("fgm", fgm);

    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary);
        out << "benchmark,t_star_ms,lambda_star,gamma_star,r_star_bpp,total_bits\n";
        char buf[160];
        auto row = [&](const char* name, const RunMetrics& m) {
            std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%.10g\n", name,
                          units::s_to_ms(m.per_user_latency_s), m.spectral_efficiency, m.power_ratio,
                          m.compression_rate_bpp, m.total_bits);
            out << buf;
        };
        row("proposed", proposed);
        row("ngm", ngm);
        row("fgm", fgm);
    }
    return report.converged ? 0 : 1;
}

int cmd_montecarlo(const std::string& plan_path, int trials, std::int64_t seed, int threads,
                   const std::string& out_csv) {
    ExperimentPlan plan = load_plan(plan_path);
    if (trials > 0) plan.trials = trials;
    if (seed >= 0) plan.master_seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) plan.threads = threads;

    const AggregateResult result = run_experiment(plan);
    if (out_csv.empty()) {
        emit_csv(result, std::cout);
    } else {
        emit_csv(result, out_csv);
        std::printf("wrote %zu rows to %s\n", result.rows.size(), out_csv.c_str());
    }
    return 0;
}

int cmd_fit(const std::string& samples_path, const std::string& out_json) {
    std::ifstream in(samples_path);
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", samples_path.c_str());
        return 1;
    }
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        double r, m;
        if (std::sscanf(line.c_str(), "%lf,%lf", &r, &m) == 2 ||
            std::sscanf(line.c_str(), "%lf %lf", &r, &m) == 2) {
            samples.emplace_back(r, m);
        }
    }
    const CurveFit fit = fit_curve(samples);
    std::printf("amplitude: %.10g\ndecay:     %.10g\nfloor:     %.10g\nrms:       %.3g\n",
                fit.curve.amplitude, fit.curve.decay, fit.curve.floor, fit.rms_residual);
    if (!out_json.empty()) {
        std::ofstream out(out_json, std::ios::binary);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "{\"amplitude\": %.12g, \"decay\": %.12g, \"floor\": %.12g}\n",
                      fit.curve.amplitude, fit.curve.decay, fit.curve.floor);
        out << buf;
    }
    return 0;
}

int cmd_ingest(const std::string& map_path, int num_classes) {
    const LabelMapStats stats = ingest_label_map(map_path, num_classes);
    std::printf("size:           %d x %d\n", stats.width, stats.height);
    std::printf("total_pixels:   %lld\n", static_cast<long long>(stats.geometry.total_pixels));
    std::printf("num_classes:    %d\n", stats.geometry.num_classes);
    std::printf("class_fraction: %.8g\n", stats.geometry.class_pixel_fraction);
    std::printf("avg_class_px:   %.2f\n", stats.geometry.avg_class_pixels());
    for (int l = 0; l < stats.geometry.num_classes; ++l) {
        if (stats.class_pixel_counts[l] > 0) {
            std::printf("  class %-4d %lld px\n", l,
                        static_cast<long long>(stats.class_pixel_counts[l]));
        }
    }
    return 0;
}

// Reproduces the published compression-rate table: distinct single intents,
// default requirements, one deterministic trial per user count (the rates,
// and hence r* and |b|, do not depend on the channel draw).
int cmd_table3(const std::string& out_csv, int trials, std::uint64_t seed) {
    ExperimentPlan plan;
    plan.base.num_users = 10;
    plan.user_counts = {1, 2, 3, 5, 10, 15};
    plan.trials = trials;
    plan.master_seed = seed;
    plan.benchmarks = {Benchmark::proposed};

    const AggregateResult result = run_experiment(plan);
    std::printf("%6s %12s %12s\n", "K", "r_star_bpp", "total_bits");
    for (const PointResult& row : result.rows) {
        std::printf("%6d %12.5f %12.0f\n", row.point.num_users, row.compression_rate_bpp.mean,
                    row.total_bits.mean);
    }
    if (!out_csv.empty()) {
        emit_csv(result, out_csv);
        std::printf("wrote %s\n", out_csv.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planner and Monte Carlo simulator for intent-aware generative semantic multicasting"};
    app.require_subcommand(1);

    std::string config, plan_path, out_path, dump_channel, samples_path, map_path;
    std::uint64_t seed = 1;
    std::int64_t seed_override = -1;
    int trials = 0, threads = 0, num_classes = 0;
    int table_trials = 1;
    bool unit_fading = false;

    auto* solve = app.add_subcommand("solve", "solve one scenario and print the allocation");
    solve->add_option("--config", config, "scenario JSON")->required();
    solve->add_option("--seed", seed, "channel seed");
    solve->add_flag("--unit-fading", unit_fading, "disable fading (pure path loss)");
    solve->add_option("--out", out_path, "write the report as CSV");
    solve->add_option("--dump-channel", dump_channel, "write the channel draw as CSV");

    auto* bench = app.add_subcommand("bench", "compare proposed vs NGM vs FGM on one scenario");
    bench->add_option("--config", config, "scenario JSON")->required();
    bench->add_option("--seed", seed, "channel seed");
    bench->add_flag("--unit-fading", unit_fading, "disable fading (pure path loss)");
    bench->add_option("--out", out_path, "write the comparison as CSV");

    auto* mc = app.add_subcommand("montecarlo", "run an experiment plan");
    mc->add_option("--plan", plan_path, "plan JSON")->required();
    mc->add_option("--trials", trials, "override the plan's trial count");
    mc->add_option("--seed", seed_override, "override the plan's master seed");
    mc->add_option("--threads", threads, "worker threads (result is thread-count independent)");
    mc->add_option("--out", out_path, "output CSV (stdout when omitted)");

    auto* fit = app.add_subcommand("fit", "fit curve parameters to (rate,metric) samples");
    fit->add_option("--samples", samples_path, "two-column CSV: rate_bpp,metric")->required();
    fit->add_option("--out", out_path, "write fitted parameters as JSON");

    auto* ingest = app.add_subcommand("ingest", "derive signal geometry from a label map");
    ingest->add_option("--map", map_path, "PGM (P2/P5) or integer CSV grid")->required();
    ingest->add_option("--classes", num_classes, "number of declared classes")->required();

    auto* table3 = app.add_subcommand("table3", "reproduce the compression-rate table");
    table3->add_option("--out", out_path, "output CSV");
    table3->add_option("--trials", table_trials, "trials per user count");
    table3->add_option("--seed", seed, "master seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(config, seed, unit_fading, out_path, dump_channel);
        if (bench->parsed()) return cmd_bench(config, seed, unit_fading, out_path);
        if (mc->parsed()) return cmd_montecarlo(plan_path, trials, seed_override, threads, out_path);
        if (fit->parsed()) return cmd_fit(samples_path, out_path);
        if (ingest->parsed()) return cmd_ingest(map_path, num_classes);
        if (table3->parsed()) return cmd_table3(out_path, table_trials, seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
