#include "semcast/montecarlo.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "semcast/rng.hpp"
#include "semcast/units.hpp"

namespace semcast {

using nlohmann::json;

const char* benchmark_name(Benchmark b) {
    switch (b) {
        case Benchmark::proposed: return "proposed";
        case Benchmark::ngm: return "ngm";
        case Benchmark::fgm: return "fgm";
    }
    return "?";
}

IntentMatrix assign_intents(int num_users, int num_classes, const IntentPolicy& policy,
                            std::uint64_t seed) {
    SplitMix64 rng(seed);

    // Partial Fisher-Yates: the first `count` entries of a shuffled 0..L-1.
    auto sample_classes = [&](int count) {
        std::vector<int> ids(num_classes);
        std::iota(ids.begin(), ids.end(), 0);
        for (int i = 0; i < count; ++i) {
            const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - i)));
            std::swap(ids[i], ids[j]);
        }
        ids.resize(count);
        return ids;
    };

    switch (policy.kind) {
        case IntentPolicy::Kind::explicit_matrix: {
            if (policy.matrix.num_users() != num_users || policy.matrix.num_classes() != num_classes) {
                throw PolicyUnsatisfiable("explicit intent matrix has wrong dimensions");
            }
            return policy.matrix;
        }
        case IntentPolicy::Kind::distinct_single: {
            if (num_users > num_classes) {
                throw PolicyUnsatisfiable("distinct-single intents need K <= L");
            }
            IntentMatrix intent(num_users, num_classes);
            const auto picks = sample_classes(num_users);
            for (int k = 0; k < num_users; ++k) intent.set(k, picks[k], true);
            return intent;
        }
        case IntentPolicy::Kind::per_user: {
            const int n = policy.classes_per_user;
            if (n < 1) throw PolicyUnsatisfiable("classes_per_user must be >= 1");
            if (!policy.overlapped) {
                if (n * num_users > num_classes) {
                    throw PolicyUnsatisfiable("non-overlapped per-user intents need n*K <= L");
                }
                IntentMatrix intent(num_users, num_classes);
                const auto picks = sample_classes(n * num_users);
                for (int k = 0; k < num_users; ++k) {
                    for (int j = 0; j < n; ++j) intent.set(k, picks[k * n + j], true);
                }
                return intent;
            }
            // Overlapped: users share a pool of `total_active_classes`
            // classes arranged in a ring, user k taking pool slots
            // k, k+1, ..., k+n-1 (mod pool). Every pool class is used when
            // K >= pool size.
            const int pool = policy.total_active_classes > 0 ? policy.total_active_classes : num_users;
            if (n > pool || pool > num_classes) {
                throw PolicyUnsatisfiable("overlapped per-user intents need n <= pool <= L");
            }
            if (num_users < pool) {
                throw PolicyUnsatisfiable("overlapped pool cannot exceed the number of users");
            }
            IntentMatrix intent(num_users, num_classes);
            const auto picks = sample_classes(pool);
            for (int k = 0; k < num_users; ++k) {
                for (int j = 0; j < n; ++j) intent.set(k, picks[(k + j) % pool], true);
            }
            return intent;
        }
    }
    throw PolicyUnsatisfiable("unknown intent policy");
}

std::vector<SweepPoint> ExperimentPlan::sweep_points() const {
    const std::vector<double> powers =
        power_budgets_w.empty() ? std::vector<double>{base.power_budget_w} : power_budgets_w;
    const std::vector<int> users = user_counts.empty() ? std::vector<int>{base.num_users} : user_counts;
    const std::vector<std::pair<double, double>> reqs =
        requirement_pairs.empty()
            ? std::vector<std::pair<double, double>>{{base.recon_requirement, base.synth_requirement}}
            : requirement_pairs;
    const std::vector<double> gens =
        generation_times_s.empty() ? std::vector<double>{base.generation_time_s} : generation_times_s;

    std::vector<SweepPoint> points;
    for (double p : powers) {
        for (int k : users) {
            for (const auto& [er, es] : reqs) {
                for (double tg : gens) {
                    points.push_back(SweepPoint{p, k, er, es, tg});
                }
            }
        }
    }
    return points;
}

Scenario instantiate_scenario(const ScenarioTemplate& base, const SweepPoint& point,
                              const IntentMatrix& intent, const std::vector<double>& distances_m) {
    Scenario s;
    s.geometry = base.geometry;
    s.recon_curve = base.recon_curve;
    s.synth_curve = base.synth_curve;
    s.intent = intent;
    s.requirements =
        Requirements(point.num_users, base.geometry.num_classes, point.recon_requirement,
                     point.synth_requirement);
    s.radio.multicast_bandwidth_hz = base.multicast_bandwidth_hz;
    s.radio.class_bandwidths_hz.assign(base.geometry.num_classes, base.class_bandwidth_hz);
    s.radio.noise_density_w_per_hz = base.noise_density_w_per_hz;
    s.radio.power_budget_w = point.power_budget_w;
    s.radio.pathloss_ref = base.pathloss_ref;
    s.radio.pathloss_exponent = base.pathloss_exponent;
    s.radio.user_distances_m = distances_m;
    s.compute = ComputeSpec::uniform(point.num_users, point.generation_time_s);
    s.validate();
    return s;
}

namespace {

struct TrialOutcome {
    bool failed = false;
    RunMetrics proposed;
    RunMetrics ngm;
    RunMetrics fgm;
};

// Sub-seed streams per trial: 0 = distances, 1 = fading, 2 = intents.
enum : std::uint64_t { kDistanceStream = 0, kFadingStream = 1, kIntentStream = 2 };

TrialOutcome run_trial(const ExperimentPlan& plan, const SweepPoint& point, int point_index,
                       int trial_index, bool want_ngm, bool want_fgm, bool want_proposed) {
    const std::uint64_t trial_seed =
        derive_seed(plan.master_seed, static_cast<std::uint64_t>(point_index),
                    static_cast<std::uint64_t>(trial_index));

    std::vector<double> distances;
    if (!plan.base.fixed_distances_m.empty()) {
        distances = plan.base.fixed_distances_m;
        if (static_cast<int>(distances.size()) != point.num_users) {
            throw ConfigError("fixed_distances_m must have one entry per user");
        }
    } else {
        SplitMix64 rng(derive_seed(trial_seed, kDistanceStream));
        distances.reserve(point.num_users);
        for (int k = 0; k < point.num_users; ++k) {
            distances.push_back(rng.uniform(plan.base.distance_range_m.first,
                                            plan.base.distance_range_m.second));
        }
    }

    const IntentMatrix intent =
        assign_intents(point.num_users, plan.base.geometry.num_classes, plan.intent_policy,
                       derive_seed(trial_seed, kIntentStream));
    const Scenario scenario = instantiate_scenario(plan.base, point, intent, distances);
    const ChannelRealization channel =
        draw_channel(scenario.radio, derive_seed(trial_seed, kFadingStream));

    TrialOutcome out;
    if (want_proposed) {
        const SolveReport report = sqp_solve(scenario, channel, plan.solver);
        if (!report.converged) {
            out.failed = true;
            if (!plan.failure_dump_dir.empty()) {
                std::filesystem::create_directories(plan.failure_dump_dir);
                std::ofstream dump(plan.failure_dump_dir + "/point" + std::to_string(point_index) +
                                   "_trial" + std::to_string(trial_index) + ".json");
                dump << scenario_to_json(scenario);
            }
            return out;
        }
        out.proposed = metrics_from_solution(report, scenario, channel);
    }
    if (want_ngm) out.ngm = ngm_metrics(scenario, channel);
    if (want_fgm) out.fgm = fgm_metrics(scenario, channel);
    return out;
}

MetricStats stats_of(const std::vector<double>& values) {
    MetricStats s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return s;
}

PointResult aggregate_point(const SweepPoint& point, int point_index,
                            Benchmark benchmark, const std::vector<TrialOutcome>& outcomes) {
    PointResult row;
    row.point_index = point_index;
    row.point = point;
    row.benchmark = benchmark;
    row.trials = static_cast<int>(outcomes.size());

    std::vector<double> latency, spectral, gamma, rate, bits;
    for (const TrialOutcome& t : outcomes) {
        if (t.failed) {
            ++row.failures;
            continue;
        }
        const RunMetrics& m = benchmark == Benchmark::proposed ? t.proposed
                              : benchmark == Benchmark::ngm    ? t.ngm
                                                               : t.fgm;
        latency.push_back(m.per_user_latency_s);
        spectral.push_back(m.spectral_efficiency);
        gamma.push_back(m.power_ratio);
        rate.push_back(m.compression_rate_bpp);
        bits.push_back(m.total_bits);
        row.total_bandwidth_hz = m.total_bandwidth_hz;
    }
    row.per_user_latency_s = stats_of(latency);
    row.spectral_efficiency = stats_of(spectral);
    row.power_ratio = stats_of(gamma);
    row.compression_rate_bpp = stats_of(rate);
    row.total_bits = stats_of(bits);
    return row;
}

}  // namespace

AggregateResult run_experiment(const ExperimentPlan& plan) {
    if (plan.trials < 1) throw ConfigError("experiment plan needs trials >= 1");
    const std::vector<SweepPoint> points = plan.sweep_points();

    bool want_proposed = false, want_ngm = false, want_fgm = false;
    for (Benchmark b : plan.benchmarks) {
        want_proposed |= b == Benchmark::proposed;
        want_ngm |= b == Benchmark::ngm;
        want_fgm |= b == Benchmark::fgm;
    }

    AggregateResult result;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const SweepPoint& point = points[pi];
        std::vector<TrialOutcome> outcomes(plan.trials);

        const int thread_count = std::max(1, plan.threads);
        if (thread_count == 1) {
            for (int t = 0; t < plan.trials; ++t) {
                outcomes[t] = run_trial(plan, point, static_cast<int>(pi), t, want_ngm, want_fgm,
                                        want_proposed);
            }
        } else {
            std::vector<std::thread> workers;
            std::atomic<int> next{0};
            for (int w = 0; w < thread_count; ++w) {
                workers.emplace_back([&]() {
                    for (int t = next.fetch_add(1); t < plan.trials; t = next.fetch_add(1)) {
                        outcomes[t] = run_trial(plan, point, static_cast<int>(pi), t, want_ngm,
                                                want_fgm, want_proposed);
                    }
                });
            }
            for (auto& w : workers) w.join();
        }

        int failures = 0;
        for (const TrialOutcome& t : outcomes) failures += t.failed ? 1 : 0;
        if (failures * 100 > plan.trials) {
            throw std::runtime_error("experiment: more than 1% of trials failed at sweep point " +
                                     std::to_string(pi) + " (" + std::to_string(failures) + "/" +
                                     std::to_string(plan.trials) + ")");
        }

        for (Benchmark b : plan.benchmarks) {
            result.rows.push_back(aggregate_point(point, static_cast<int>(pi), b, outcomes));
        }
    }
    return result;
}

const char* const kExperimentCsvHeader =
    "point,power_budget_mw,num_users,recon_requirement,synth_requirement,generation_time_ms,"
    "benchmark,trials,failures,t_star_ms_mean,t_star_ms_se,lambda_star_mean,lambda_star_se,"
    "gamma_star_mean,gamma_star_se,r_star_bpp_mean,r_star_bpp_se,total_bits_mean,total_bits_se,"
    "total_bandwidth_mhz";

void emit_csv(const AggregateResult& result, std::ostream& out) {
    out << kExperimentCsvHeader << '\n';
    char buf[512];
    for (const PointResult& r : result.rows) {
        std::snprintf(
            buf, sizeof buf,
            "%d,%.10g,%d,%.10g,%.10g,%.10g,%s,%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
            "%.10g,%.10g,%.10g,%.10g\n",
            r.point_index, units::watts_to_mw(r.point.power_budget_w), r.point.num_users,
            r.point.recon_requirement, r.point.synth_requirement,
            units::s_to_ms(r.point.generation_time_s), benchmark_name(r.benchmark), r.trials,
            r.failures, units::s_to_ms(r.per_user_latency_s.mean),
            units::s_to_ms(r.per_user_latency_s.std_error), r.spectral_efficiency.mean,
            r.spectral_efficiency.std_error, r.power_ratio.mean, r.power_ratio.std_error,
            r.compression_rate_bpp.mean, r.compression_rate_bpp.std_error, r.total_bits.mean,
            r.total_bits.std_error, units::hz_to_mhz(r.total_bandwidth_hz));
        out << buf;
    }
}

void emit_csv(const AggregateResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    emit_csv(result, out);
}

namespace {

IntentPolicy parse_policy(const json& j) {
    IntentPolicy policy;
    const std::string type = j.value("type", "distinct-single");
    if (type == "distinct-single") {
        policy.kind = IntentPolicy::Kind::distinct_single;
    } else if (type == "per-user") {
        policy.kind = IntentPolicy::Kind::per_user;
        policy.classes_per_user = j.value("classes_per_user", 1);
        policy.overlapped = j.value("overlapped", false);
        policy.total_active_classes = j.value("total_active_classes", 0);
    } else if (type == "explicit") {
        policy.kind = IntentPolicy::Kind::explicit_matrix;
        const auto rows = j.at("matrix").get<std::vector<std::vector<int>>>();
        const int K = static_cast<int>(rows.size());
        const int L = K > 0 ? static_cast<int>(rows.front().size()) : 0;
        IntentMatrix m(K, L);
        for (int k = 0; k < K; ++k) {
            for (int l = 0; l < L; ++l) m.set(k, l, rows[k][l] != 0);
        }
        policy.matrix = m;
    } else {
        throw ConfigError("intent_policy.type must be distinct-single, per-user, or explicit");
    }
    return policy;
}

}  // namespace

ExperimentPlan parse_plan(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("plan config: ") + e.what());
    }

    ExperimentPlan plan;
    try {
        const json& js = j.at("scenario");
        const json& jg = js.at("geometry");
        plan.base.geometry.total_pixels = jg.value("total_pixels", std::int64_t{131072});
        plan.base.geometry.class_pixel_fraction = jg.value("class_pixel_fraction", 0.1);
        plan.base.geometry.num_classes = jg.at("num_classes").get<int>();

        const json& jc = js.at("curves");
        plan.base.recon_curve = RdpCurve{jc.at("reconstruction").at("amplitude").get<double>(),
                                         jc.at("reconstruction").at("decay").get<double>(),
                                         jc.at("reconstruction").at("floor").get<double>()};
        plan.base.synth_curve = RdpCurve{jc.at("synthesis").at("amplitude").get<double>(),
                                         jc.at("synthesis").at("decay").get<double>(),
                                         jc.at("synthesis").at("floor").get<double>()};

        const json& jr = js.at("radio");
        plan.base.multicast_bandwidth_hz =
            units::mhz_to_hz(jr.at("multicast_bandwidth_mhz").get<double>());
        plan.base.class_bandwidth_hz = units::mhz_to_hz(jr.at("class_bandwidth_mhz").get<double>());
        plan.base.noise_density_w_per_hz =
            units::dbm_to_watts(jr.at("noise_density_dbm_per_hz").get<double>());
        plan.base.power_budget_w = units::mw_to_watts(jr.at("power_budget_mw").get<double>());
        plan.base.pathloss_ref = units::db_to_linear(jr.at("pathloss_ref_db").get<double>());
        plan.base.pathloss_exponent = jr.at("pathloss_exponent").get<double>();

        plan.base.recon_requirement = js.at("requirements").at("reconstruction").get<double>();
        plan.base.synth_requirement = js.at("requirements").at("synthesis").get<double>();
        plan.base.generation_time_s =
            units::ms_to_s(js.at("compute").at("generation_time_ms").get<double>());
        plan.base.num_users = js.at("num_users").get<int>();

        if (j.contains("distance_range_m")) {
            const auto range = j.at("distance_range_m").get<std::vector<double>>();
            if (range.size() != 2) throw ConfigError("distance_range_m must be [lo, hi]");
            plan.base.distance_range_m = {range[0], range[1]};
        }
        if (j.contains("fixed_distances_m")) {
            plan.base.fixed_distances_m = j.at("fixed_distances_m").get<std::vector<double>>();
        }

        if (j.contains("intent_policy")) plan.intent_policy = parse_policy(j.at("intent_policy"));

        if (j.contains("sweeps")) {
            const json& sw = j.at("sweeps");
            if (sw.contains("power_budget_mw")) {
                for (double p : sw.at("power_budget_mw").get<std::vector<double>>()) {
                    plan.power_budgets_w.push_back(units::mw_to_watts(p));
                }
            }
            if (sw.contains("num_users")) {
                plan.user_counts = sw.at("num_users").get<std::vector<int>>();
            }
            if (sw.contains("requirements")) {
                for (const auto& pair : sw.at("requirements")) {
                    plan.requirement_pairs.emplace_back(pair.at(0).get<double>(),
                                                        pair.at(1).get<double>());
                }
            }
            if (sw.contains("generation_time_ms")) {
                for (double t : sw.at("generation_time_ms").get<std::vector<double>>()) {
                    plan.generation_times_s.push_back(units::ms_to_s(t));
                }
            }
        }

        if (j.contains("benchmarks")) {
            plan.benchmarks.clear();
            for (const auto& name : j.at("benchmarks")) {
                const std::string s = name.get<std::string>();
                if (s == "proposed") {
                    plan.benchmarks.push_back(Benchmark::proposed);
                } else if (s == "ngm") {
                    plan.benchmarks.push_back(Benchmark::ngm);
                } else if (s == "fgm") {
                    plan.benchmarks.push_back(Benchmark::fgm);
                } else {
                    throw ConfigError("unknown benchmark '" + s + "'");
                }
            }
        }

        plan.trials = j.value("trials", 6000);
        plan.master_seed = j.value("seed", std::uint64_t{1});
        plan.threads = j.value("threads", 1);
        plan.failure_dump_dir = j.value("failure_dump_dir", std::string{});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("plan config: ") + e.what());
    }
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open plan config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_plan(buf.str());
}

}  // namespace semcast
