#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "semcast/channel.hpp"
#include "semcast/scenario.hpp"

namespace semcast {

/// Solver decision for one instance: per-stream powers and compression
/// rates (full length L+1, zeros on inactive classes) plus the per-user
/// epigraph latencies.
struct Allocation {
    std::vector<double> powers_w;           // p_0..p_L
    std::vector<double> rates_bpp;          // r_0..r_L
    std::vector<double> latency_bounds_s;   // z_1..z_K
};

/// Latency breakdown of one user at a given allocation.
struct UserLatency {
    double synthesis_path_s = 0.0;            // T_k^g + T_k0
    std::vector<double> class_paths_s;        // T_kl over the user's intended classes
    std::vector<int> class_ids;
    double total_s = 0.0;                     // max of all paths
};

struct SolveReport {
    Allocation allocation;
    double objective_s = 0.0;  // sum of z_k
    int iterations = 0;
    bool converged = false;
    double max_constraint_violation = 0.0;
    double kkt_residual = 0.0;
    double max_complementarity = 0.0;
};

struct SqpOptions {
    int max_iterations = 500;
    double tolerance = 1e-8;  // on the QP step norm
    bool randomized_init = false;
    std::uint64_t init_seed = 0;
};

/// Values of the six constraint families at a point, all feasible iff >= 0.
struct ConstraintValues {
    double objective = 0.0;                   // f = sum z_k
    Eigen::VectorXd synth_latency;            // g_k = z_k - T_k^g - T_k0
    Eigen::VectorXd class_latency;            // h over intent pairs, z_k - T_kl
    double power = 0.0;                       // i = P_T - sum p
    Eigen::VectorXd recon_quality;            // j_l = E_l^(r) - Phi_r(r_l), active classes
    double synth_quality = 0.0;               // q = E^(s) - Phi_s(r_0)
};

/// The epigraph-form latency program for one (scenario, channel) instance.
/// Inactive classes are eliminated from the decision vector before solving,
/// so the layout is [p_0, p_active..., r_0, r_active..., z_1..z_K].
class LatencyProblem {
  public:
    LatencyProblem(const Scenario& scenario, const ChannelRealization& channel);

    int num_vars() const { return 2 * (num_streams_) + num_users_; }
    int num_users() const { return num_users_; }
    int num_streams() const { return num_streams_; }  // multicast + active classes
    const std::vector<int>& active_classes() const { return active_classes_; }
    const std::vector<std::pair<int, int>>& intent_pairs() const { return intent_pairs_; }

    int power_index(int stream) const { return stream; }
    int rate_index(int stream) const { return num_streams_ + stream; }
    int latency_index(int user) const { return 2 * num_streams_ + user; }

    /// Analytic rate lower bound of a stream (0 = map) from curve inversion.
    double rate_bound(int stream) const { return rate_bounds_[stream]; }
    double power_budget() const { return power_budget_; }
    double stream_bits(int stream, double rate_bpp) const { return rate_bpp * pixels_[stream]; }
    double stream_rate_bps(int stream, int user, double power_w) const;

    ConstraintValues constraint_functions(const Eigen::VectorXd& x) const;

    /// All constraint rows stacked in family order g, h, i, j, q (and, when
    /// requested, the solver-internal power-floor and rate boxes).
    Eigen::VectorXd constraint_vector(const Eigen::VectorXd& x, bool include_boxes) const;
    /// Analytic Jacobian of the same rows. Throws DegenerateStream when an
    /// active stream's power is below the floor.
    Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& x, bool include_boxes) const;

    int family_row_count() const { return num_users_ + static_cast<int>(intent_pairs_.size()) + 1 + (num_streams_ - 1) + 1; }
    int box_row_count() const { return 2 * num_streams_; }

    double objective(const Eigen::VectorXd& x) const;
    Eigen::VectorXd objective_gradient() const;

    /// Exact Hessian of the Lagrangian at x for given family multipliers.
    Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& multipliers) const;

    Eigen::VectorXd initial_point(const SqpOptions& options) const;

    Eigen::VectorXd pack(const Allocation& allocation) const;

    /// Exact per-user path latencies at given powers/rates (x's z entries
    /// are ignored).
    std::vector<double> implied_latencies(const Eigen::VectorXd& x) const;

    static constexpr double kPowerFloor = 1e-9;  // W, keeps 1/R finite

  private:
    int num_users_ = 0;
    int num_streams_ = 0;
    std::vector<int> active_classes_;
    std::vector<std::pair<int, int>> intent_pairs_;  // (user, stream-1) pairs
    std::vector<double> gains_;
    std::vector<double> bandwidths_;   // per stream
    std::vector<double> pixels_;       // per stream: |X| for the map, |X_bar| for classes
    std::vector<double> rate_bounds_;  // analytic lower bounds per stream
    std::vector<double> quality_targets_;  // E^(s), then E_l^(r) per active class
    std::vector<double> generation_time_s_;
    double noise_density_ = 0.0;
    double power_budget_ = 0.0;
    RdpCurve recon_curve_;
    RdpCurve synth_curve_;
};

/// Sequential quadratic programming solve of the sum-latency program:
/// QP subproblems on a damped-BFGS model of the Lagrangian, l1-penalty line
/// search, and canonicalization of the returned allocation (rates snapped
/// to their analytic bounds, epigraph values to the implied latencies).
SolveReport sqp_solve(const Scenario& scenario, const ChannelRealization& channel,
                      const SqpOptions& options = {});

/// Independent reduced-form solver: pins every rate at its analytic bound
/// and solves the remaining convex power/epigraph program with a log-barrier
/// interior-point method. Used to cross-check sqp_solve.
SolveReport reduced_solve(const Scenario& scenario, const ChannelRealization& channel);

/// Per-user latency breakdown at an allocation.
std::vector<UserLatency> latency_breakdown(const Scenario& scenario, const ChannelRealization& channel,
                                           const Allocation& allocation);

/// One-line CSV row (see header constant) and a human-readable report with
/// powers in mW, rates in bpp, latencies in ms.
extern const char* const kSolveReportCsvHeader;
std::string solve_report_csv_row(const SolveReport& report);
void write_solve_report(std::ostream& out, const SolveReport& report, const Scenario& scenario,
                        const ChannelRealization& channel);

}  // namespace semcast
