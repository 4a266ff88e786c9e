#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semcast/scenario.hpp"

namespace semcast {

/// One block-fading draw: per-user linear power gains |h_k|^2, constant for
/// the duration of a trial and shared by the multicast and per-class
/// channels. The raw unit-mean scattering draws |h~_k|^2 are kept for
/// debugging and statistical tests.
struct ChannelRealization {
    std::vector<double> gains;       // |h_k|^2 = pathloss_ref * d_k^-phi * |h~_k|^2
    std::vector<double> scattering;  // |h~_k|^2, Exp(1)
};

/// Draw a Rayleigh block-fading realization: |h~_k|^2 is the squared
/// magnitude of a zero-mean unit-variance CSCG variable, i.e. exponential
/// with unit mean. Deterministic for a fixed seed.
ChannelRealization draw_channel(const RadioParams& radio, std::uint64_t seed);

/// Fixed-gain realization with the scattering forced to 1 (pure path loss);
/// used by deterministic tests and the fixed-channel debug mode.
ChannelRealization unit_scattering_channel(const RadioParams& radio);

/// Received SNR p * gain / (B * N_0). Pure; used for both the multicast and
/// per-class streams.
double snr(double power_w, double gain, double bandwidth_hz, double noise_density_w_per_hz);

/// Shannon rate B * log2(1 + snr) in bits/s. Strictly increasing and concave
/// in the power, zero at zero power.
double shannon_rate(double power_w, double gain, double bandwidth_hz, double noise_density_w_per_hz);

/// Transmission time of a datastream: bits / rate. Throws on non-positive
/// rate (zero power on a needed stream).
double stream_latency(double bits, double rate_bps);

/// Debug dump, one row per user: trial,user,gain,scattering.
void write_channel_csv(std::ostream& out, int trial, const ChannelRealization& channel);

}  // namespace semcast
