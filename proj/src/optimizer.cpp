#include "semcast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "semcast/qp.hpp"
#include "semcast/rng.hpp"
#include "semcast/units.hpp"

namespace semcast {

namespace {

constexpr double kLn2 = 0.6931471805599453;

struct StreamRate {
    double value;       // R(p) in bits/s
    double d_dp;        // R'(p)
    double d2_dp2;      // R''(p)
};

StreamRate rate_with_derivatives(double power_w, double gain, double bandwidth_hz, double noise_density) {
    const double noise = bandwidth_hz * noise_density;
    const double denom = noise + power_w * gain;
    StreamRate r;
    r.value = bandwidth_hz * std::log2(1.0 + power_w * gain / noise);
    r.d_dp = bandwidth_hz * gain / (kLn2 * denom);
    r.d2_dp2 = -bandwidth_hz * gain * gain / (kLn2 * denom * denom);
    return r;
}

// Lawson-Hanson non-negative least squares: min ||M lambda - b||, lambda >= 0.
// Used to recover multipliers when verifying stationarity at a solution.
Eigen::VectorXd nnls(const Eigen::MatrixXd& M, const Eigen::VectorXd& b, double* residual_out) {
    const int m = static_cast<int>(M.cols());
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    if (m == 0) {
        if (residual_out) *residual_out = b.norm();
        return lambda;
    }
    std::vector<bool> in_set(m, false);
    Eigen::VectorXd w = M.transpose() * b;
    const double tol = 1e-12 * std::max(1.0, b.norm()) * std::max(1.0, M.norm());

    for (int outer = 0; outer < 4 * m + 16; ++outer) {
        int best = -1;
        double best_w = tol;
        for (int i = 0; i < m; ++i) {
            if (!in_set[i] && w(i) > best_w) {
                best_w = w(i);
                best = i;
            }
        }
        if (best < 0) break;
        in_set[best] = true;

        for (int inner = 0; inner < 4 * m + 16; ++inner) {
            std::vector<int> idx;
            for (int i = 0; i < m; ++i) {
                if (in_set[i]) idx.push_back(i);
            }
            Eigen::MatrixXd Mp(M.rows(), idx.size());
            for (std::size_t c = 0; c < idx.size(); ++c) Mp.col(c) = M.col(idx[c]);
            Eigen::VectorXd s = Mp.colPivHouseholderQr().solve(b);

            double min_s = 1.0;
            for (int c = 0; c < s.size(); ++c) min_s = std::min(min_s, s(c));
            if (min_s > 0.0) {
                lambda.setZero();
                for (std::size_t c = 0; c < idx.size(); ++c) lambda(idx[c]) = s(c);
                break;
            }
            double alpha = 1.0;
            for (std::size_t c = 0; c < idx.size(); ++c) {
                if (s(c) <= 0.0) {
                    const double l = lambda(idx[c]);
                    alpha = std::min(alpha, l / (l - s(c)));
                }
            }
            for (std::size_t c = 0; c < idx.size(); ++c) {
                const int i = idx[c];
                lambda(i) += alpha * (s(c) - lambda(i));
                if (lambda(i) <= 1e-14) {
                    lambda(i) = 0.0;
                    in_set[i] = false;
                }
            }
        }
        w = M.transpose() * (b - M * lambda);
    }
    if (residual_out) *residual_out = (M * lambda - b).norm();
    return lambda;
}

// Powell's damped BFGS update; keeps the approximation positive definite.
void damped_bfgs_update(Eigen::MatrixXd& B, const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    const double sy = s.dot(y);
    if (sBs <= 0.0) return;

    Eigen::VectorXd r;
    double sr;
    if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        r = theta * y + (1.0 - theta) * Bs;
        sr = theta * sy + (1.0 - theta) * sBs;
    } else {
        r = y;
        sr = sy;
    }
    if (sr < 1e-300) return;
    B.noalias() += -(Bs * Bs.transpose()) / sBs + (r * r.transpose()) / sr;
}

void make_spd(Eigen::MatrixXd& H) {
    H = 0.5 * (H + H.transpose());
    const double base = std::max(1e-8, 1e-10 * H.diagonal().cwiseAbs().maxCoeff());
    double tau = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() == Eigen::Success) return;
        const double add = tau == 0.0 ? base : tau;
        H.diagonal().array() += add;
        tau = add * 8.0;
    }
}

}  // namespace

LatencyProblem::LatencyProblem(const Scenario& scenario, const ChannelRealization& channel) {
    scenario.validate();
    if (channel.gains.size() != static_cast<std::size_t>(scenario.num_users())) {
        throw ConfigError("LatencyProblem: channel gain count != K");
    }
    const EffectiveRequirements eff = effective_requirements(scenario);

    num_users_ = scenario.num_users();
    active_classes_ = scenario.intent.active_classes();
    num_streams_ = 1 + static_cast<int>(active_classes_.size());
    gains_ = channel.gains;
    generation_time_s_ = scenario.compute.generation_time_s;
    noise_density_ = scenario.radio.noise_density_w_per_hz;
    power_budget_ = scenario.radio.power_budget_w;
    recon_curve_ = scenario.recon_curve;
    synth_curve_ = scenario.synth_curve;

    bandwidths_.resize(num_streams_);
    pixels_.resize(num_streams_);
    rate_bounds_.resize(num_streams_);
    quality_targets_.resize(num_streams_);

    bandwidths_[0] = scenario.radio.multicast_bandwidth_hz;
    pixels_[0] = static_cast<double>(scenario.geometry.total_pixels);
    quality_targets_[0] = eff.synthesis;
    rate_bounds_[0] = scenario.synth_curve.invert(eff.synthesis).rate_bpp;

    for (int i = 0; i < num_streams_ - 1; ++i) {
        const int cls = active_classes_[i];
        bandwidths_[1 + i] = scenario.radio.class_bandwidths_hz[cls];
        pixels_[1 + i] = scenario.geometry.avg_class_pixels();
        quality_targets_[1 + i] = eff.reconstruction.at(cls);
        rate_bounds_[1 + i] = scenario.recon_curve.invert(eff.reconstruction.at(cls)).rate_bpp;

        for (int k : scenario.intent.interested_users(cls)) {
            intent_pairs_.emplace_back(k, i);
        }
    }
    std::sort(intent_pairs_.begin(), intent_pairs_.end());
}

double LatencyProblem::stream_rate_bps(int stream, int user, double power_w) const {
    return shannon_rate(power_w, gains_[user], bandwidths_[stream], noise_density_);
}

ConstraintValues LatencyProblem::constraint_functions(const Eigen::VectorXd& x) const {
    ConstraintValues v;
    v.objective = objective(x);
    v.synth_latency.resize(num_users_);
    v.class_latency.resize(static_cast<int>(intent_pairs_.size()));

    auto latency = [&](int stream, int user) {
        const double bits = stream_bits(stream, x(rate_index(stream)));
        if (bits <= 0.0) return 0.0;
        return bits / stream_rate_bps(stream, user, x(power_index(stream)));
    };

    for (int k = 0; k < num_users_; ++k) {
        v.synth_latency(k) = x(latency_index(k)) - generation_time_s_[k] - latency(0, k);
    }
    for (std::size_t p = 0; p < intent_pairs_.size(); ++p) {
        const auto [k, i] = intent_pairs_[p];
        v.class_latency(static_cast<int>(p)) = x(latency_index(k)) - latency(1 + i, k);
    }
    double total_power = 0.0;
    for (int s = 0; s < num_streams_; ++s) total_power += x(power_index(s));
    v.power = power_budget_ - total_power;

    v.recon_quality.resize(num_streams_ - 1);
    for (int i = 0; i < num_streams_ - 1; ++i) {
        v.recon_quality(i) = quality_targets_[1 + i] - recon_curve_.evaluate(x(rate_index(1 + i)));
    }
    v.synth_quality = quality_targets_[0] - synth_curve_.evaluate(x(rate_index(0)));
    return v;
}

Eigen::VectorXd LatencyProblem::constraint_vector(const Eigen::VectorXd& x, bool include_boxes) const {
    const ConstraintValues v = constraint_functions(x);
    const int mf = family_row_count();
    Eigen::VectorXd c(include_boxes ? mf + box_row_count() : mf);
    int row = 0;
    for (int k = 0; k < num_users_; ++k) c(row++) = v.synth_latency(k);
    for (int p = 0; p < v.class_latency.size(); ++p) c(row++) = v.class_latency(p);
    c(row++) = v.power;
    for (int i = 0; i < v.recon_quality.size(); ++i) c(row++) = v.recon_quality(i);
    c(row++) = v.synth_quality;
    if (include_boxes) {
        for (int s = 0; s < num_streams_; ++s) c(row++) = x(power_index(s)) - kPowerFloor;
        for (int s = 0; s < num_streams_; ++s) c(row++) = x(rate_index(s));
    }
    return c;
}

Eigen::MatrixXd LatencyProblem::constraint_jacobian(const Eigen::VectorXd& x, bool include_boxes) const {
    const int n = num_vars();
    const int mf = family_row_count();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(include_boxes ? mf + box_row_count() : mf, n);

    // d/dp and d/dr of T(p, r) = r * px / R(p); the latency rows enter with
    // a negative sign (z - T).
    auto fill_latency_row = [&](int row, int stream, int user) {
        const double p = x(power_index(stream));
        const double r = x(rate_index(stream));
        const double bits = stream_bits(stream, r);
        if (bits > 0.0 && p < 0.5 * kPowerFloor) {
            throw DegenerateStream("constraint_jacobian: active stream power below floor");
        }
        const StreamRate R = rate_with_derivatives(p, gains_[user], bandwidths_[stream], noise_density_);
        jac(row, power_index(stream)) = bits * R.d_dp / (R.value * R.value);
        jac(row, rate_index(stream)) = -pixels_[stream] / R.value;
        jac(row, latency_index(user)) = 1.0;
    };

    int row = 0;
    for (int k = 0; k < num_users_; ++k) fill_latency_row(row++, 0, k);
    for (const auto& [k, i] : intent_pairs_) fill_latency_row(row++, 1 + i, k);
    for (int s = 0; s < num_streams_; ++s) jac(row, power_index(s)) = -1.0;
    ++row;
    for (int i = 0; i < num_streams_ - 1; ++i) {
        jac(row++, rate_index(1 + i)) = -recon_curve_.derivative(x(rate_index(1 + i)));
    }
    jac(row++, rate_index(0)) = -synth_curve_.derivative(x(rate_index(0)));

    if (include_boxes) {
        for (int s = 0; s < num_streams_; ++s) jac(row++, power_index(s)) = 1.0;
        for (int s = 0; s < num_streams_; ++s) jac(row++, rate_index(s)) = 1.0;
    }
    return jac;
}

double LatencyProblem::objective(const Eigen::VectorXd& x) const {
    double f = 0.0;
    for (int k = 0; k < num_users_; ++k) f += x(latency_index(k));
    return f;
}

Eigen::VectorXd LatencyProblem::objective_gradient() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars());
    for (int k = 0; k < num_users_; ++k) g(latency_index(k)) = 1.0;
    return g;
}

Eigen::MatrixXd LatencyProblem::lagrangian_hessian(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& multipliers) const {
    const int n = num_vars();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);

    auto add_latency_block = [&](double weight, int stream, int user) {
        if (weight == 0.0) return;
        const double p = x(power_index(stream));
        const double r = x(rate_index(stream));
        const double bits = stream_bits(stream, r);
        const StreamRate R = rate_with_derivatives(p, gains_[user], bandwidths_[stream], noise_density_);
        const double R2 = R.value * R.value;
        const double t_pp = bits * (2.0 * R.d_dp * R.d_dp / (R2 * R.value) - R.d2_dp2 / R2);
        const double t_pr = -pixels_[stream] * R.d_dp / R2;
        const int ip = power_index(stream);
        const int ir = rate_index(stream);
        H(ip, ip) += weight * t_pp;
        H(ip, ir) += weight * t_pr;
        H(ir, ip) += weight * t_pr;
    };

    int row = 0;
    for (int k = 0; k < num_users_; ++k) add_latency_block(multipliers(row++), 0, k);
    for (const auto& [k, i] : intent_pairs_) add_latency_block(multipliers(row++), 1 + i, k);
    ++row;  // power row is linear
    for (int i = 0; i < num_streams_ - 1; ++i) {
        const double r = x(rate_index(1 + i));
        const double curv = recon_curve_.amplitude * recon_curve_.decay * recon_curve_.decay *
                            std::exp(-recon_curve_.decay * r);
        H(rate_index(1 + i), rate_index(1 + i)) += multipliers(row++) * curv;
    }
    {
        const double r = x(rate_index(0));
        const double curv = synth_curve_.amplitude * synth_curve_.decay * synth_curve_.decay *
                            std::exp(-synth_curve_.decay * r);
        H(rate_index(0), rate_index(0)) += multipliers(row++) * curv;
    }
    return H;
}

std::vector<double> LatencyProblem::implied_latencies(const Eigen::VectorXd& x) const {
    std::vector<double> z(num_users_, 0.0);
    auto latency = [&](int stream, int user) {
        const double bits = stream_bits(stream, x(rate_index(stream)));
        if (bits <= 0.0) return 0.0;
        return bits / stream_rate_bps(stream, user, x(power_index(stream)));
    };
    for (int k = 0; k < num_users_; ++k) z[k] = generation_time_s_[k] + latency(0, k);
    for (const auto& [k, i] : intent_pairs_) z[k] = std::max(z[k], latency(1 + i, k));
    return z;
}

Eigen::VectorXd LatencyProblem::initial_point(const SqpOptions& options) const {
    Eigen::VectorXd x(num_vars());
    const double uniform_power = std::max(kPowerFloor, power_budget_ / num_streams_);
    for (int s = 0; s < num_streams_; ++s) {
        x(power_index(s)) = uniform_power;
        x(rate_index(s)) = rate_bounds_[s];
    }
    if (options.randomized_init) {
        SplitMix64 rng(options.init_seed);
        double total = 0.0;
        std::vector<double> draws(num_streams_);
        for (double& d : draws) {
            d = rng.exponential() + 1e-3;
            total += d;
        }
        for (int s = 0; s < num_streams_; ++s) {
            x(power_index(s)) = std::max(kPowerFloor, 0.999 * power_budget_ * draws[s] / total);
            x(rate_index(s)) = rate_bounds_[s] * (1.0 + 0.5 * rng.uniform01());
        }
    }
    const std::vector<double> implied = implied_latencies(x);
    for (int k = 0; k < num_users_; ++k) {
        x(latency_index(k)) = implied[k] * 1.01 + 1e-9;
    }
    return x;
}

Eigen::VectorXd LatencyProblem::pack(const Allocation& allocation) const {
    Eigen::VectorXd x(num_vars());
    x(power_index(0)) = allocation.powers_w.at(0);
    x(rate_index(0)) = allocation.rates_bpp.at(0);
    for (int i = 0; i < num_streams_ - 1; ++i) {
        x(power_index(1 + i)) = allocation.powers_w.at(1 + active_classes_[i]);
        x(rate_index(1 + i)) = allocation.rates_bpp.at(1 + active_classes_[i]);
    }
    for (int k = 0; k < num_users_; ++k) x(latency_index(k)) = allocation.latency_bounds_s.at(k);
    return x;
}

namespace {

Allocation unpack_full(const LatencyProblem& problem, const Eigen::VectorXd& x, int num_classes) {
    Allocation a;
    a.powers_w.assign(num_classes + 1, 0.0);
    a.rates_bpp.assign(num_classes + 1, 0.0);
    a.powers_w[0] = x(problem.power_index(0));
    a.rates_bpp[0] = x(problem.rate_index(0));
    const auto& active = problem.active_classes();
    for (std::size_t i = 0; i < active.size(); ++i) {
        a.powers_w[1 + active[i]] = x(problem.power_index(1 + static_cast<int>(i)));
        a.rates_bpp[1 + active[i]] = x(problem.rate_index(1 + static_cast<int>(i)));
    }
    a.latency_bounds_s.resize(problem.num_users());
    for (int k = 0; k < problem.num_users(); ++k) a.latency_bounds_s[k] = x(problem.latency_index(k));
    return a;
}

}  // namespace

// Canonicalizes a solver iterate (rates snapped to their analytic bounds,
// epigraph entries to the exact implied latencies, powers rescaled into the
// budget if marginally over) and attaches feasibility and KKT diagnostics.
SolveReport finalize_report(const LatencyProblem& problem, Eigen::VectorXd x, int iterations,
                            bool converged) {
    const int S = problem.num_streams();
    double total_power = 0.0;
    for (int s = 0; s < S; ++s) {
        x(problem.rate_index(s)) = problem.rate_bound(s);
        total_power += x(problem.power_index(s));
    }
    if (total_power > problem.power_budget()) {
        const double shrink = problem.power_budget() / total_power;
        for (int s = 0; s < S; ++s) x(problem.power_index(s)) *= shrink;
    }
    for (int s = 0; s < S; ++s) {
        x(problem.power_index(s)) = std::max(x(problem.power_index(s)), LatencyProblem::kPowerFloor);
    }
    const std::vector<double> implied = problem.implied_latencies(x);
    for (int k = 0; k < problem.num_users(); ++k) x(problem.latency_index(k)) = implied[k];

    SolveReport report;
    report.iterations = iterations;
    report.converged = converged;
    report.objective_s = problem.objective(x);

    const Eigen::VectorXd c = problem.constraint_vector(x, false);
    report.max_constraint_violation = std::max(0.0, -c.minCoeff());

    // Stationarity check: best non-negative multipliers for the near-active
    // rows, found by non-negative least squares on grad f = J' lambda.
    const Eigen::VectorXd c_all = problem.constraint_vector(x, true);
    const Eigen::MatrixXd jac = problem.constraint_jacobian(x, true);
    const int mf = problem.family_row_count();

    std::vector<int> active_rows;
    const int latency_rows = problem.num_users() + static_cast<int>(problem.intent_pairs().size());
    for (int i = 0; i < c_all.size(); ++i) {
        double act_tol = 1e-9;  // rate constraints: exactly zero after the snap
        if (i < latency_rows) {
            act_tol = 1e-6;  // seconds; true non-binding paths are slack by far more
        } else if (i == latency_rows) {
            act_tol = 1e-6 * problem.power_budget();
        } else if (i >= mf) {
            act_tol = 1e-11;  // boxes
        }
        if (c_all(i) <= act_tol) active_rows.push_back(i);
    }

    Eigen::MatrixXd M(problem.num_vars(), active_rows.size());
    for (std::size_t idx = 0; idx < active_rows.size(); ++idx) {
        M.col(static_cast<int>(idx)) = jac.row(active_rows[idx]).transpose();
    }
    double residual = 0.0;
    const Eigen::VectorXd lambda = nnls(M, problem.objective_gradient(), &residual);
    report.kkt_residual = residual;
    double comp = 0.0;
    for (std::size_t idx = 0; idx < active_rows.size(); ++idx) {
        comp = std::max(comp, std::abs(lambda(static_cast<int>(idx)) * c_all(active_rows[idx])));
    }
    report.max_complementarity = comp;

    const int full_classes =
        problem.active_classes().empty()
            ? 0
            : *std::max_element(problem.active_classes().begin(), problem.active_classes().end()) + 1;
    report.allocation = unpack_full(problem, x, full_classes);
    return report;
}

namespace {

double merit_value(double objective, const Eigen::VectorXd& c, double penalty) {
    double viol = 0.0;
    for (int i = 0; i < c.size(); ++i) viol += std::max(0.0, -c(i));
    return objective + penalty * viol;
}

double total_violation(const Eigen::VectorXd& c) {
    double viol = 0.0;
    for (int i = 0; i < c.size(); ++i) viol += std::max(0.0, -c(i));
    return viol;
}

// Once the active set has settled, the QP reduces to one KKT solve on that
// set; try it before falling back to the full active-set method. Verifies
// dual feasibility and primal feasibility of the candidate before accepting.
bool try_equality_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac,
                     const Eigen::VectorXd& c, const std::vector<int>& active, Eigen::VectorXd& d,
                     Eigen::VectorXd& multipliers) {
    const int n = static_cast<int>(H.rows());
    const int na = static_cast<int>(active.size());
    if (na == 0 || na > n) return false;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    kkt.topLeftCorner(n, n) = H;
    for (int i = 0; i < na; ++i) {
        kkt.block(0, n + i, n, 1) = -jac.row(active[i]).transpose();
        kkt.block(n + i, 0, 1, n) = jac.row(active[i]);
    }
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -g;
    for (int i = 0; i < na; ++i) rhs(n + i) = -c(active[i]);

    const Eigen::VectorXd sol = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
    if (!sol.allFinite()) return false;
    const Eigen::VectorXd lam = sol.tail(na);
    if (lam.minCoeff() < -1e-11) return false;

    const Eigen::VectorXd trial = sol.head(n);
    const Eigen::VectorXd cd = jac * trial + c;
    if (cd.minCoeff() < -1e-9 * std::max(1.0, c.cwiseAbs().maxCoeff())) return false;

    d = trial;
    multipliers.setZero(jac.rows());
    for (int i = 0; i < na; ++i) multipliers(active[i]) = lam(i);
    return true;
}

// QP box rows are honoured only to the QP's own tolerance; nudge the iterate
// back inside so the latency terms and curve evaluations stay defined.
void clamp_to_box(const LatencyProblem& problem, Eigen::VectorXd& x) {
    for (int s = 0; s < problem.num_streams(); ++s) {
        double& p = x(problem.power_index(s));
        p = std::max(p, LatencyProblem::kPowerFloor);
        double& r = x(problem.rate_index(s));
        r = std::max(r, 0.0);
    }
}

// Elastic relaxation of an inconsistent QP: slack variables on the family
// rows with a heavy linear penalty, small quadratic weight to stay SPD.
QpResult solve_elastic_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                          const Eigen::MatrixXd& jac, const Eigen::VectorXd& c, int family_rows,
                          double penalty) {
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(jac.rows());
    const int ne = n + family_rows;

    Eigen::MatrixXd He = Eigen::MatrixXd::Zero(ne, ne);
    He.topLeftCorner(n, n) = H;
    He.bottomRightCorner(family_rows, family_rows) =
        1e-4 * Eigen::MatrixXd::Identity(family_rows, family_rows);
    Eigen::VectorXd ge(ne);
    ge.head(n) = g;
    ge.tail(family_rows).setConstant(penalty);

    Eigen::MatrixXd Ae = Eigen::MatrixXd::Zero(m + family_rows, ne);
    Ae.topLeftCorner(m, n) = jac;
    Ae.block(0, n, family_rows, family_rows) = Eigen::MatrixXd::Identity(family_rows, family_rows);
    Ae.bottomRightCorner(family_rows, family_rows) =
        Eigen::MatrixXd::Identity(family_rows, family_rows);
    Eigen::VectorXd be = Eigen::VectorXd::Zero(m + family_rows);
    be.head(m) = c;

    QpResult res = solve_qp(He, ge, Ae, be);
    if (res.feasible) {
        QpResult trimmed;
        trimmed.feasible = true;
        trimmed.x = res.x.head(n);
        trimmed.multipliers = res.multipliers.head(m);
        trimmed.objective = res.objective;
        trimmed.active_count = res.active_count;
        return trimmed;
    }
    return res;
}

}  // namespace

SolveReport sqp_solve(const Scenario& scenario, const ChannelRealization& channel,
                      const SqpOptions& options) {
    const LatencyProblem problem(scenario, channel);
    const int n = problem.num_vars();
    const int mf = problem.family_row_count();
    const int S = problem.num_streams();
    const int K = problem.num_users();

    // The solver works on an internally rescaled copy of the problem:
    // variables divided by their characteristic magnitudes and constraint
    // rows by theirs, so one identity-seeded BFGS and one set of line-search
    // constants cover everything from millisecond to multi-second instances.
    const Eigen::VectorXd x0 = problem.initial_point(options);
    double z_ref = 1e-4;
    for (int k = 0; k < K; ++k) z_ref = std::max(z_ref, x0(problem.latency_index(k)));

    Eigen::VectorXd var_scale(n);
    for (int s = 0; s < S; ++s) {
        var_scale(problem.power_index(s)) = problem.power_budget();
        var_scale(problem.rate_index(s)) = std::max(0.1, problem.rate_bound(s));
    }
    for (int k = 0; k < K; ++k) var_scale(problem.latency_index(k)) = z_ref;

    Eigen::VectorXd row_scale(mf + problem.box_row_count());
    {
        int row = 0;
        const int latency_rows = K + static_cast<int>(problem.intent_pairs().size());
        for (; row < latency_rows; ++row) row_scale(row) = 1.0 / z_ref;
        row_scale(row++) = 1.0 / problem.power_budget();
        for (; row < mf; ++row) row_scale(row) = 1.0;  // quality rows are already O(1)
        for (int s = 0; s < S; ++s) row_scale(row++) = 1.0 / problem.power_budget();
        for (int s = 0; s < S; ++s) row_scale(row++) = 1.0 / var_scale(problem.rate_index(s));
    }

    auto to_natural = [&](const Eigen::VectorXd& xs) -> Eigen::VectorXd {
        return var_scale.cwiseProduct(xs);
    };
    auto scaled_constraints = [&](const Eigen::VectorXd& xs) -> Eigen::VectorXd {
        return row_scale.cwiseProduct(problem.constraint_vector(to_natural(xs), true));
    };
    auto scaled_jacobian = [&](const Eigen::VectorXd& xs) -> Eigen::MatrixXd {
        Eigen::MatrixXd j = problem.constraint_jacobian(to_natural(xs), true);
        j = row_scale.asDiagonal() * j * var_scale.asDiagonal();
        return j;
    };
    // f / z_ref = sum of scaled z variables.
    Eigen::VectorXd grad_f = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < K; ++k) grad_f(problem.latency_index(k)) = 1.0;
    auto scaled_objective = [&](const Eigen::VectorXd& xs) { return grad_f.dot(xs); };

    Eigen::VectorXd x = x0.cwiseQuotient(var_scale);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);

    double penalty = 1.0;
    bool converged = false;
    int iter = 0;
    std::vector<int> working_set;

    Eigen::VectorXd c = scaled_constraints(x);
    Eigen::MatrixXd jac = scaled_jacobian(x);

    for (iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::VectorXd d;
        Eigen::VectorXd lambda;
        if (!try_equality_qp(H, grad_f, jac, c, working_set, d, lambda)) {
            QpResult qp = solve_qp(H, grad_f, jac, c);
            if (!qp.feasible) {
                qp = solve_elastic_qp(H, grad_f, jac, c, mf, 1e3 * penalty + 1e3);
                working_set.clear();
                if (!qp.feasible) break;  // elastic QP is always feasible; safety net
            } else {
                working_set.clear();
                for (int i = 0; i < qp.multipliers.size(); ++i) {
                    if (qp.multipliers(i) > 1e-11) working_set.push_back(i);
                }
            }
            d = qp.x;
            lambda = qp.multipliers;
        }

        // Stop on the natural-units step norm.
        const double step_norm = var_scale.cwiseProduct(d).norm();
        if (step_norm <= options.tolerance) {
            converged = true;
            break;
        }

        penalty = std::max(penalty, 1.5 * lambda.lpNorm<Eigen::Infinity>() + 1e-3);

        const double merit0 = merit_value(scaled_objective(x), c, penalty);
        const double descent = grad_f.dot(d) - penalty * total_violation(c);

        double eta = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new;
        Eigen::VectorXd c_new;
        for (int ls = 0; ls < 48; ++ls) {
            x_new = x + eta * d;
            Eigen::VectorXd natural = to_natural(x_new);
            clamp_to_box(problem, natural);
            x_new = natural.cwiseQuotient(var_scale);
            c_new = scaled_constraints(x_new);
            const double merit1 = merit_value(scaled_objective(x_new), c_new, penalty);
            if (merit1 <= merit0 + 0.1 * eta * std::min(descent, 0.0) + 1e-15 * std::abs(merit0)) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            converged = step_norm <= 1e-5;
            break;
        }

        const Eigen::VectorXd step = x_new - x;
        const Eigen::VectorXd grad_l_old = grad_f - jac.transpose() * lambda;
        const Eigen::MatrixXd jac_new = scaled_jacobian(x_new);
        const Eigen::VectorXd grad_l_new = grad_f - jac_new.transpose() * lambda;

        damped_bfgs_update(H, step, grad_l_new - grad_l_old);
        make_spd(H);

        x = std::move(x_new);
        c = std::move(c_new);
        jac = jac_new;
    }

    return finalize_report(problem, to_natural(x), iter, converged);
}

// ---------------------------------------------------------------------------
// Reduced-form oracle: rates pinned at their bounds, powers and epigraph
// variables solved by a log-barrier interior-point method. Methodologically
// independent of the SQP path; the two must agree within 0.5%.
// ---------------------------------------------------------------------------

SolveReport reduced_solve(const Scenario& scenario, const ChannelRealization& channel) {
    const LatencyProblem problem(scenario, channel);
    const int K = problem.num_users();
    const int S = problem.num_streams();
    const int P = static_cast<int>(problem.intent_pairs().size());
    const int n = S + K;  // [p_0..p_{S-1}, z_1..z_K]

    std::vector<double> bits(S);
    for (int s = 0; s < S; ++s) bits[s] = problem.stream_bits(s, problem.rate_bound(s));

    const double floor = LatencyProblem::kPowerFloor;
    const double budget = problem.power_budget();

    // Latency of stream s at user k for power p, plus first two derivatives
    // with respect to p (zero bits means a vacuous path).
    struct PathTerm {
        double value, d1, d2;
    };
    auto path = [&](int s, int k, double p) -> PathTerm {
        if (bits[s] <= 0.0) return {0.0, 0.0, 0.0};
        const StreamRate R = rate_with_derivatives(
            p, channel.gains[k],
            s == 0 ? scenario.radio.multicast_bandwidth_hz
                   : scenario.radio.class_bandwidths_hz[problem.active_classes()[s - 1]],
            scenario.radio.noise_density_w_per_hz);
        const double R2 = R.value * R.value;
        PathTerm t;
        t.value = bits[s] / R.value;
        t.d1 = -bits[s] * R.d_dp / R2;
        t.d2 = bits[s] * (2.0 * R.d_dp * R.d_dp / (R2 * R.value) - R.d2_dp2 / R2);
        return t;
    };

    const int m = K + P + 1 + S;  // u rows, v rows, power, p floors

    // Strictly feasible start.
    Eigen::VectorXd y(n);
    for (int s = 0; s < S; ++s) y(s) = std::max(2.0 * floor, 0.95 * budget / S);
    for (int k = 0; k < K; ++k) {
        double worst = scenario.compute.generation_time_s[k] + path(0, k, y(0)).value;
        for (int p = 0; p < P; ++p) {
            const auto [pk, pi] = problem.intent_pairs()[p];
            if (pk == k) worst = std::max(worst, path(1 + pi, k, y(1 + pi)).value);
        }
        y(S + k) = worst * 1.1 + 1e-9;
    }

    auto constraints = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd c(m);
        int row = 0;
        for (int k = 0; k < K; ++k) {
            c(row++) = v(S + k) - scenario.compute.generation_time_s[k] - path(0, k, v(0)).value;
        }
        for (int p = 0; p < P; ++p) {
            const auto [k, i] = problem.intent_pairs()[p];
            c(row++) = v(S + k) - path(1 + i, k, v(1 + i)).value;
        }
        double total = 0.0;
        for (int s = 0; s < S; ++s) total += v(s);
        c(row++) = budget - total;
        for (int s = 0; s < S; ++s) c(row++) = v(s) - floor;
        return c;
    };

    auto barrier = [&](const Eigen::VectorXd& v, double t, Eigen::VectorXd* grad,
                       Eigen::MatrixXd* hess) -> double {
        const Eigen::VectorXd c = constraints(v);
        if (c.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
        double val = 0.0;
        for (int k = 0; k < K; ++k) val += v(S + k);
        val *= t;
        for (int i = 0; i < m; ++i) val -= std::log(c(i));
        if (!grad) return val;

        grad->setZero(n);
        hess->setZero(n, n);
        for (int k = 0; k < K; ++k) (*grad)(S + k) = t;

        int row = 0;
        auto accumulate = [&](int zi, int pi_idx, const PathTerm& pt, double ci) {
            // c = z - T(p): grad entries dz = 1, dp = -pt.d1; hess of c: -pt.d2.
            Eigen::VectorXd gc = Eigen::VectorXd::Zero(n);
            gc(zi) = 1.0;
            if (pi_idx >= 0) gc(pi_idx) = -pt.d1;
            *grad -= gc / ci;
            hess->noalias() += (gc * gc.transpose()) / (ci * ci);
            if (pi_idx >= 0) (*hess)(pi_idx, pi_idx) += pt.d2 / ci;
        };

        const Eigen::VectorXd cvals = c;
        for (int k = 0; k < K; ++k) {
            accumulate(S + k, bits[0] > 0.0 ? 0 : -1, path(0, k, v(0)), cvals(row));
            ++row;
        }
        for (int p = 0; p < P; ++p) {
            const auto [k, i] = problem.intent_pairs()[p];
            accumulate(S + k, bits[1 + i] > 0.0 ? 1 + i : -1, path(1 + i, k, v(1 + i)), cvals(row));
            ++row;
        }
        {
            Eigen::VectorXd gc = Eigen::VectorXd::Zero(n);
            for (int s = 0; s < S; ++s) gc(s) = -1.0;
            *grad -= gc / cvals(row);
            hess->noalias() += (gc * gc.transpose()) / (cvals(row) * cvals(row));
            ++row;
        }
        for (int s = 0; s < S; ++s) {
            (*grad)(s) -= 1.0 / cvals(row);
            (*hess)(s, s) += 1.0 / (cvals(row) * cvals(row));
            ++row;
        }
        return val;
    };

    double f0 = 0.0;
    for (int k = 0; k < K; ++k) f0 += y(S + k);
    double t = std::max(1.0, m / (0.2 * std::max(f0, 1e-9)));
    bool converged = true;

    Eigen::VectorXd grad(n);
    Eigen::MatrixXd hess(n, n);
    const double gap_target = 1e-10 * std::max(f0, 1e-9);

    for (int round = 0; round < 64; ++round) {
        for (int newton = 0; newton < 80; ++newton) {
            const double val = barrier(y, t, &grad, &hess);
            (void)val;
            Eigen::LLT<Eigen::MatrixXd> llt(hess);
            Eigen::VectorXd step;
            if (llt.info() == Eigen::Success) {
                step = llt.solve(-grad);
            } else {
                Eigen::MatrixXd reg = hess;
                reg.diagonal().array() += 1e-10 * hess.diagonal().cwiseAbs().maxCoeff();
                step = reg.ldlt().solve(-grad);
            }
            const double decrement = -grad.dot(step);
            if (decrement * 0.5 < 1e-12 * (1.0 + t * f0)) break;

            double alpha = 1.0;
            while (alpha > 1e-14 && constraints(y + alpha * step).minCoeff() <= 0.0) alpha *= 0.5;
            const double base = barrier(y, t, nullptr, nullptr);
            int ls = 0;
            for (; ls < 60; ++ls) {
                if (barrier(y + alpha * step, t, nullptr, nullptr) <=
                    base - 0.25 * alpha * decrement + 1e-12 * std::abs(base)) {
                    break;
                }
                alpha *= 0.5;
            }
            if (ls == 60) {
                break;
            }
            y += alpha * step;
        }
        if (m / t < gap_target) break;
        t *= 15.0;
        if (round == 63) converged = false;
    }

    // Map back into the full decision vector, push the powers onto the
    // budget face, and canonicalize.
    Eigen::VectorXd x(problem.num_vars());
    double total = 0.0;
    for (int s = 0; s < S; ++s) total += y(s);
    const double scale_up = budget / total;
    for (int s = 0; s < S; ++s) {
        x(problem.power_index(s)) = y(s) * scale_up;
        x(problem.rate_index(s)) = problem.rate_bound(s);
    }
    for (int k = 0; k < K; ++k) x(problem.latency_index(k)) = y(S + k);

    return finalize_report(problem, x, 0, converged);
}

std::vector<UserLatency> latency_breakdown(const Scenario& scenario, const ChannelRealization& channel,
                                           const Allocation& allocation) {
    std::vector<UserLatency> out;
    const double px_total = static_cast<double>(scenario.geometry.total_pixels);
    const double px_class = scenario.geometry.avg_class_pixels();
    for (int k = 0; k < scenario.num_users(); ++k) {
        UserLatency ul;
        const double map_bits = allocation.rates_bpp.at(0) * px_total;
        const double map_rate = shannon_rate(allocation.powers_w.at(0), channel.gains[k],
                                             scenario.radio.multicast_bandwidth_hz,
                                             scenario.radio.noise_density_w_per_hz);
        ul.synthesis_path_s = scenario.compute.generation_time_s[k] +
                              (map_bits > 0.0 ? map_bits / map_rate : 0.0);
        ul.total_s = ul.synthesis_path_s;
        for (int l = 0; l < scenario.num_classes(); ++l) {
            if (!scenario.intent.interested(k, l)) continue;
            const double bits = allocation.rates_bpp.at(1 + l) * px_class;
            const double rate = shannon_rate(allocation.powers_w.at(1 + l), channel.gains[k],
                                             scenario.radio.class_bandwidths_hz[l],
                                             scenario.radio.noise_density_w_per_hz);
            const double lat = bits > 0.0 ? bits / rate : 0.0;
            ul.class_ids.push_back(l);
            ul.class_paths_s.push_back(lat);
            ul.total_s = std::max(ul.total_s, lat);
        }
        out.push_back(std::move(ul));
    }
    return out;
}

const char* const kSolveReportCsvHeader =
    "converged,iterations,objective_ms,per_user_ms,max_violation,kkt_residual,"
    "powers_mw,rates_bpp,latencies_ms";

namespace {

std::string join_scaled(const std::vector<double>& values, double scale) {
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", values[i] * scale);
        if (i) out += '|';
        out += buf;
    }
    return out;
}

}  // namespace

std::string solve_report_csv_row(const SolveReport& report) {
    char head[160];
    const double users = report.allocation.latency_bounds_s.empty()
                             ? 1.0
                             : static_cast<double>(report.allocation.latency_bounds_s.size());
    std::snprintf(head, sizeof head, "%d,%d,%.10g,%.10g,%.6g,%.6g,", report.converged ? 1 : 0,
                  report.iterations, units::s_to_ms(report.objective_s),
                  units::s_to_ms(report.objective_s) / users, report.max_constraint_violation,
                  report.kkt_residual);
    std::string row = head;
    row += join_scaled(report.allocation.powers_w, 1e3);
    row += ',';
    row += join_scaled(report.allocation.rates_bpp, 1.0);
    row += ',';
    row += join_scaled(report.allocation.latency_bounds_s, 1e3);
    return row;
}

void write_solve_report(std::ostream& out, const SolveReport& report, const Scenario& scenario,
                        const ChannelRealization& channel) {
    char buf[256];
    const int K = scenario.num_users();
    std::snprintf(buf, sizeof buf, "converged: %s after %d iterations\n",
                  report.converged ? "yes" : "NO", report.iterations);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "objective (sum latency): %.4f ms   per-user mean: %.4f ms\n",
                  units::s_to_ms(report.objective_s), units::s_to_ms(report.objective_s) / K);
    out << buf;
    std::snprintf(buf, sizeof buf, "max constraint violation: %.3g   kkt residual: %.3g\n",
                  report.max_constraint_violation, report.kkt_residual);
    out << buf;

    double used = 0.0;
    for (double p : report.allocation.powers_w) used += p;
    std::snprintf(buf, sizeof buf, "power: budget %.3f mW, used %.3f mW, map share %.1f%%\n",
                  units::watts_to_mw(scenario.radio.power_budget_w), units::watts_to_mw(used),
                  100.0 * report.allocation.powers_w[0] / scenario.radio.power_budget_w);
    out << buf;

    out << "stream      power_mW     rate_bpp\n";
    std::snprintf(buf, sizeof buf, "map         %-12.6g %-12.6g\n",
                  units::watts_to_mw(report.allocation.powers_w[0]), report.allocation.rates_bpp[0]);
    out << buf;
    for (std::size_t l = 1; l < report.allocation.powers_w.size(); ++l) {
        if (report.allocation.rates_bpp[l] == 0.0 && report.allocation.powers_w[l] == 0.0) continue;
        std::snprintf(buf, sizeof buf, "class %-5zu %-12.6g %-12.6g\n", l - 1,
                      units::watts_to_mw(report.allocation.powers_w[l]), report.allocation.rates_bpp[l]);
        out << buf;
    }

    out << "user   synth_path_ms  worst_class_ms  latency_ms\n";
    const auto breakdown = latency_breakdown(scenario, channel, report.allocation);
    for (int k = 0; k < K; ++k) {
        double worst_class = 0.0;
        for (double v : breakdown[k].class_paths_s) worst_class = std::max(worst_class, v);
        std::snprintf(buf, sizeof buf, "%-6d %-14.4f %-15.4f %-10.4f\n", k,
                      units::s_to_ms(breakdown[k].synthesis_path_s), units::s_to_ms(worst_class),
                      units::s_to_ms(breakdown[k].total_s));
        out << buf;
    }
}

}  // namespace semcast
