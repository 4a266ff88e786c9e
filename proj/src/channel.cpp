#include "semcast/channel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "semcast/rng.hpp"

namespace semcast {

ChannelRealization draw_channel(const RadioParams& radio, std::uint64_t seed) {
    SplitMix64 rng(seed);
    ChannelRealization ch;
    const std::size_t k_count = radio.user_distances_m.size();
    ch.gains.reserve(k_count);
    ch.scattering.reserve(k_count);
    for (double d : radio.user_distances_m) {
        const double scatter = rng.exponential();
        ch.scattering.push_back(scatter);
        ch.gains.push_back(radio.pathloss_ref * std::pow(d, -radio.pathloss_exponent) * scatter);
    }
    return ch;
}

ChannelRealization unit_scattering_channel(const RadioParams& radio) {
    ChannelRealization ch;
    for (double d : radio.user_distances_m) {
        ch.scattering.push_back(1.0);
        ch.gains.push_back(radio.pathloss_ref * std::pow(d, -radio.pathloss_exponent));
    }
    return ch;
}

double snr(double power_w, double gain, double bandwidth_hz, double noise_density_w_per_hz) {
    return power_w * gain / (bandwidth_hz * noise_density_w_per_hz);
}

double shannon_rate(double power_w, double gain, double bandwidth_hz, double noise_density_w_per_hz) {
    return bandwidth_hz * std::log2(1.0 + snr(power_w, gain, bandwidth_hz, noise_density_w_per_hz));
}

double stream_latency(double bits, double rate_bps) {
    if (!(rate_bps > 0.0)) {
        throw std::invalid_argument("stream_latency: rate must be positive (no power on a needed stream)");
    }
    return bits / rate_bps;
}

void write_channel_csv(std::ostream& out, int trial, const ChannelRealization& channel) {
    for (std::size_t k = 0; k < channel.gains.size(); ++k) {
        char line[96];
        std::snprintf(line, sizeof line, "%d,%zu,%.12g,%.12g\n", trial, k, channel.gains[k],
                      channel.scattering[k]);
        out << line;
    }
}

}  // namespace semcast
