#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semcast/metrics.hpp"
#include "semcast/optimizer.hpp"
#include "semcast/scenario.hpp"

namespace semcast {

enum class Benchmark { proposed, ngm, fgm };

const char* benchmark_name(Benchmark b);

/// How user intents are drawn each trial.
struct IntentPolicy {
    enum class Kind {
        distinct_single,   // one class per user, no two users share a class
        per_user,          // classes_per_user classes each; overlapped shares
                           // a pool of total_active_classes, non-overlapped
                           // draws disjoint sets
        explicit_matrix,   // fixed matrix, identical every trial
    };
    Kind kind = Kind::distinct_single;
    int classes_per_user = 1;
    bool overlapped = false;
    int total_active_classes = 0;  // pool size for the overlapped policy
    IntentMatrix matrix;           // explicit_matrix only
};

/// Draw an intent matrix conforming to a policy; deterministic per seed.
/// Throws PolicyUnsatisfiable when K, L and the policy cannot coexist.
IntentMatrix assign_intents(int num_users, int num_classes, const IntentPolicy& policy,
                            std::uint64_t seed);

/// Everything needed to build a trial scenario except the per-trial draws
/// (distances, fading, intents).
struct ScenarioTemplate {
    SignalGeometry geometry;
    RdpCurve recon_curve{0.199, 3.454, 0.008};
    RdpCurve synth_curve{0.214, 5.14, 0.566};
    double multicast_bandwidth_hz = 1e6;
    double class_bandwidth_hz = 1e6;
    double noise_density_w_per_hz = 3.9810717055349565e-21;
    double pathloss_ref = 1e-3;
    double pathloss_exponent = 3.4;
    double power_budget_w = 0.1;
    double recon_requirement = 0.02850;
    double synth_requirement = 0.58705;
    double generation_time_s = 2e-3;
    int num_users = 10;
    std::pair<double, double> distance_range_m{150.0, 550.0};
    std::vector<double> fixed_distances_m;  // non-empty enables the debug mode
};

/// One point of the sweep grid (absent axes repeat the template values).
struct SweepPoint {
    double power_budget_w;
    int num_users;
    double recon_requirement;
    double synth_requirement;
    double generation_time_s;
};

struct ExperimentPlan {
    ScenarioTemplate base;
    IntentPolicy intent_policy;
    std::vector<double> power_budgets_w;                      // sweep axes; empty = base value
    std::vector<int> user_counts;
    std::vector<std::pair<double, double>> requirement_pairs;  // (recon, synth)
    std::vector<double> generation_times_s;
    std::vector<Benchmark> benchmarks{Benchmark::proposed, Benchmark::ngm, Benchmark::fgm};
    int trials = 6000;
    std::uint64_t master_seed = 1;
    int threads = 1;
    SqpOptions solver;
    std::string failure_dump_dir;  // when set, non-converged trials are dumped here

    std::vector<SweepPoint> sweep_points() const;
};

struct MetricStats {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Aggregated metrics of one (sweep point, benchmark) pair.
struct PointResult {
    int point_index = 0;
    SweepPoint point{};
    Benchmark benchmark = Benchmark::proposed;
    int trials = 0;
    int failures = 0;
    MetricStats per_user_latency_s;
    MetricStats spectral_efficiency;
    MetricStats power_ratio;
    MetricStats compression_rate_bpp;
    MetricStats total_bits;
    double total_bandwidth_hz = 0.0;
};

struct AggregateResult {
    std::vector<PointResult> rows;
};

/// Build the scenario of one trial (public so single trials can be replayed
/// outside the harness).
Scenario instantiate_scenario(const ScenarioTemplate& base, const SweepPoint& point,
                              const IntentMatrix& intent, const std::vector<double>& distances_m);

/// Run the whole plan: for every sweep point and trial, draw distances and
/// fading, assign intents, solve the proposed scheme and evaluate the
/// benchmarks, then aggregate means and standard errors. Deterministic for a
/// fixed master seed regardless of thread count. Throws if more than 1% of
/// trials at any sweep point fail to converge.
AggregateResult run_experiment(const ExperimentPlan& plan);

/// Stable-order CSV emission; identical runs produce byte-identical files.
extern const char* const kExperimentCsvHeader;
void emit_csv(const AggregateResult& result, std::ostream& out);
void emit_csv(const AggregateResult& result, const std::string& path);

/// Plan parsing from JSON (schema in the README).
ExperimentPlan load_plan(const std::string& path);
ExperimentPlan parse_plan(const std::string& json_text);

}  // namespace semcast
