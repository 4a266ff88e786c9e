#pragma once

#include <vector>

#include "semcast/optimizer.hpp"

namespace semcast {

/// Derived quantities of one solved instance (or of a benchmark run on the
/// same instance).
struct RunMetrics {
    double per_user_latency_s = 0.0;     // T* = sum z_k / K
    double spectral_efficiency = 0.0;    // lambda*, bits/s/Hz over occupied bandwidth
    double power_ratio = 0.0;            // gamma* = p_0 / P_T
    double compression_rate_bpp = 0.0;   // r* = r_0 + (|X_bar|/|X|) sum of active r_l
    double total_bits = 0.0;             // |b| = round(r* |X|)
    double total_bandwidth_hz = 0.0;     // B_0 + sum of active-class bandwidths
};

/// Metrics of a converged proposed-scheme solution. The spectral-efficiency
/// denominator counts a class bandwidth only when some user wants the class.
RunMetrics metrics_from_solution(const SolveReport& report, const Scenario& scenario,
                                 const ChannelRealization& channel);

/// Non-generative intent-unaware multicast baseline: the whole signal is
/// compressed at the tightest reconstruction requirement over every user and
/// class, and multicast at the full power budget over B_0. No generation
/// latency.
std::vector<double> ngm_latency(const Scenario& scenario, const ChannelRealization& channel);

/// Full-generative intent-unaware baseline: only the semantic map is
/// multicast (rate from the loosest tolerable synthesis quality), everything
/// is synthesized on device, so the generation latency applies.
std::vector<double> fgm_latency(const Scenario& scenario, const ChannelRealization& channel);

RunMetrics ngm_metrics(const Scenario& scenario, const ChannelRealization& channel);
RunMetrics fgm_metrics(const Scenario& scenario, const ChannelRealization& channel);

}  // namespace semcast
