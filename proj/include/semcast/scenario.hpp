#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "semcast/errors.hpp"
#include "semcast/rdp.hpp"

namespace semcast {

/// Pixel bookkeeping of the source signal: |X| total pixels, the average
/// per-class share |X_bar|/|X|, and the number of semantic classes L.
struct SignalGeometry {
    std::int64_t total_pixels = 131072;
    double class_pixel_fraction = 0.1;  // |X_bar| / |X|, in (0, 1]
    int num_classes = 35;

    /// |X_bar|: average number of pixels per class.
    double avg_class_pixels() const { return class_pixel_fraction * static_cast<double>(total_pixels); }

    void validate() const;
};

/// K x L binary matrix; entry (k, l) is 1 when user k requires faithful
/// reconstruction of class l. Immutable after construction.
class IntentMatrix {
  public:
    IntentMatrix() = default;
    IntentMatrix(int num_users, int num_classes);
    IntentMatrix(int num_users, int num_classes, std::vector<std::uint8_t> entries);

    int num_users() const { return num_users_; }
    int num_classes() const { return num_classes_; }
    bool interested(int user, int cls) const {
        return entries_[static_cast<std::size_t>(user) * num_classes_ + cls] != 0;
    }
    void set(int user, int cls, bool value);

    /// Classes with at least one interested user, ascending. Classes with no
    /// interested user carry no power, bandwidth, or rate variable anywhere
    /// downstream.
    std::vector<int> active_classes() const;

    /// Users interested in a given class, ascending.
    std::vector<int> interested_users(int cls) const;

    int row_sum(int user) const;

  private:
    int num_users_ = 0;
    int num_classes_ = 0;
    std::vector<std::uint8_t> entries_;
};

struct IntentStats {
    int active_class_count = 0;
    std::vector<int> per_user_class_counts;
};

IntentStats intent_graph_stats(const IntentMatrix& intent);

/// Per-user-class reconstruction targets and per-user synthesis targets.
/// Reconstruction entries are only meaningful where the intent matrix is 1;
/// unused entries may be NaN.
class Requirements {
  public:
    Requirements() = default;
    Requirements(int num_users, int num_classes, double reconstruction, double synthesis);
    Requirements(std::vector<std::vector<double>> reconstruction, std::vector<double> synthesis);

    int num_users() const { return static_cast<int>(synthesis_.size()); }
    int num_classes() const { return num_classes_; }
    double reconstruction(int user, int cls) const { return reconstruction_[user][cls]; }
    double synthesis(int user) const { return synthesis_[user]; }

    /// Minimum reconstruction requirement over every finite entry, intended
    /// or not; this is the compression target of the non-generative
    /// multicast baseline.
    double tightest_reconstruction() const;

  private:
    std::vector<std::vector<double>> reconstruction_;
    std::vector<double> synthesis_;
    int num_classes_ = 0;
};

/// Radio-layer parameters. All values SI: Hz, W, W/Hz, metres; the path loss
/// reference is a linear gain at 1 m.
struct RadioParams {
    double multicast_bandwidth_hz = 1e6;        // B_0
    std::vector<double> class_bandwidths_hz;    // B_1..B_L
    double noise_density_w_per_hz = 3.9810717055349565e-21;  // -174 dBm/Hz
    double power_budget_w = 0.1;                // P_T
    double pathloss_ref = 1e-3;                 // linear gain at d = 1 m
    double pathloss_exponent = 3.4;
    std::vector<double> user_distances_m;

    void validate() const;
};

/// On-device generation latency per user, either given directly or derived
/// as model FLOPs over processor FLOPs/s.
struct ComputeSpec {
    std::vector<double> generation_time_s;

    static ComputeSpec uniform(int num_users, double generation_time_s);
    static ComputeSpec from_flops(double model_flops, const std::vector<double>& processor_flops_per_sec);

    void validate() const;
};

/// Full description of one multicast instance: who wants what, at which
/// quality, over which radio, with which rate-quality curves.
struct Scenario {
    SignalGeometry geometry;
    IntentMatrix intent;
    Requirements requirements;
    RadioParams radio;
    ComputeSpec compute;
    RdpCurve recon_curve;  // Phi_r: reconstruction distortion vs rate
    RdpCurve synth_curve;  // Phi_s: synthesis perception vs rate

    int num_users() const { return intent.num_users(); }
    int num_classes() const { return intent.num_classes(); }

    /// Cross-checks all dimensions; throws ConfigError on mismatch.
    void validate() const;
};

/// Per-class and global quality targets after taking the minimum over the
/// interested users. Only active classes appear in the map.
struct EffectiveRequirements {
    double synthesis = 0.0;                   // E^(s)
    std::map<int, double> reconstruction;     // l -> E_l^(r), active classes only
};

/// E_l^(r) = min over interested users' reconstruction targets, E^(s) = min
/// over all users' synthesis targets. Throws ConfigError when an active
/// class has no finite requirement or the scenario has no users.
EffectiveRequirements effective_requirements(const Scenario& scenario);

/// Parse a scenario from its JSON configuration (schema in the README;
/// dB/dBm/MHz/ms fields are converted to SI here at the boundary).
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

/// Inverse of parse_scenario, used for failed-trial dumps and replay.
std::string scenario_to_json(const Scenario& scenario);

}  // namespace semcast
