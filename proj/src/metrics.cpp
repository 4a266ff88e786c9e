#include "semcast/metrics.hpp"

#include <cmath>
#include <numeric>

namespace semcast {

RunMetrics metrics_from_solution(const SolveReport& report, const Scenario& scenario,
                                 const ChannelRealization& channel) {
    RunMetrics m;
    const int K = scenario.num_users();
    const auto active = scenario.intent.active_classes();

    m.per_user_latency_s = report.objective_s / K;
    m.power_ratio = report.allocation.powers_w.at(0) / scenario.radio.power_budget_w;

    double sum_rates = 0.0;
    double bandwidth = scenario.radio.multicast_bandwidth_hz;
    for (int k = 0; k < K; ++k) {
        sum_rates += shannon_rate(report.allocation.powers_w.at(0), channel.gains[k],
                                  scenario.radio.multicast_bandwidth_hz,
                                  scenario.radio.noise_density_w_per_hz);
    }
    for (int l : active) {
        bandwidth += scenario.radio.class_bandwidths_hz[l];
        for (int k : scenario.intent.interested_users(l)) {
            sum_rates += shannon_rate(report.allocation.powers_w.at(1 + l), channel.gains[k],
                                      scenario.radio.class_bandwidths_hz[l],
                                      scenario.radio.noise_density_w_per_hz);
        }
    }
    m.spectral_efficiency = sum_rates / bandwidth;
    m.total_bandwidth_hz = bandwidth;

    double class_rate_sum = 0.0;
    for (int l : active) class_rate_sum += report.allocation.rates_bpp.at(1 + l);
    m.compression_rate_bpp =
        report.allocation.rates_bpp.at(0) + scenario.geometry.class_pixel_fraction * class_rate_sum;
    m.total_bits = std::llround(m.compression_rate_bpp * static_cast<double>(scenario.geometry.total_pixels));
    return m;
}

namespace {

// Both baselines multicast one stream over B_0 at the full power budget;
// they differ only in which curve sets the rate and whether generation time
// applies.
RunMetrics single_stream_metrics(const Scenario& scenario, const ChannelRealization& channel,
                                 double rate_bpp, bool add_generation_time) {
    RunMetrics m;
    const int K = scenario.num_users();
    const double bits = rate_bpp * static_cast<double>(scenario.geometry.total_pixels);

    double latency_sum = 0.0;
    double rate_sum = 0.0;
    for (int k = 0; k < K; ++k) {
        const double rate = shannon_rate(scenario.radio.power_budget_w, channel.gains[k],
                                         scenario.radio.multicast_bandwidth_hz,
                                         scenario.radio.noise_density_w_per_hz);
        rate_sum += rate;
        latency_sum += stream_latency(bits, rate) +
                       (add_generation_time ? scenario.compute.generation_time_s[k] : 0.0);
    }
    m.per_user_latency_s = latency_sum / K;
    m.spectral_efficiency = rate_sum / scenario.radio.multicast_bandwidth_hz;
    m.power_ratio = 1.0;
    m.compression_rate_bpp = rate_bpp;
    m.total_bits = std::llround(bits);
    m.total_bandwidth_hz = scenario.radio.multicast_bandwidth_hz;
    return m;
}

}  // namespace

std::vector<double> ngm_latency(const Scenario& scenario, const ChannelRealization& channel) {
    const double rate = scenario.recon_curve.invert(scenario.requirements.tightest_reconstruction()).rate_bpp;
    const double bits = rate * static_cast<double>(scenario.geometry.total_pixels);
    std::vector<double> latency;
    latency.reserve(scenario.num_users());
    for (int k = 0; k < scenario.num_users(); ++k) {
        latency.push_back(stream_latency(
            bits, shannon_rate(scenario.radio.power_budget_w, channel.gains[k],
                               scenario.radio.multicast_bandwidth_hz,
                               scenario.radio.noise_density_w_per_hz)));
    }
    return latency;
}

std::vector<double> fgm_latency(const Scenario& scenario, const ChannelRealization& channel) {
    const EffectiveRequirements eff = effective_requirements(scenario);
    const double rate = scenario.synth_curve.invert(eff.synthesis).rate_bpp;
    const double bits = rate * static_cast<double>(scenario.geometry.total_pixels);
    std::vector<double> latency;
    latency.reserve(scenario.num_users());
    for (int k = 0; k < scenario.num_users(); ++k) {
        latency.push_back(scenario.compute.generation_time_s[k] +
                          stream_latency(bits, shannon_rate(scenario.radio.power_budget_w,
                                                            channel.gains[k],
                                                            scenario.radio.multicast_bandwidth_hz,
                                                            scenario.radio.noise_density_w_per_hz)));
    }
    return latency;
}

RunMetrics ngm_metrics(const Scenario& scenario, const ChannelRealization& channel) {
    const double rate = scenario.recon_curve.invert(scenario.requirements.tightest_reconstruction()).rate_bpp;
    return single_stream_metrics(scenario, channel, rate, false);
}

RunMetrics fgm_metrics(const Scenario& scenario, const ChannelRealization& channel) {
    const EffectiveRequirements eff = effective_requirements(scenario);
    const double rate = scenario.synth_curve.invert(eff.synthesis).rate_bpp;
    return single_stream_metrics(scenario, channel, rate, true);
}

}  // namespace semcast
