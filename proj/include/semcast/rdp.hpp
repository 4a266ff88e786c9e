#pragma once

#include <utility>
#include <vector>

#include "semcast/errors.hpp"

namespace semcast {

/// Rate bound produced by inverting a curve at a quality target.
struct RateBound {
    double rate_bpp = 0.0;
    /// True when the target is already met at zero rate (target >= amplitude
    /// + floor); the returned rate is 0 and the curve constraint is slack.
    bool trivially_met = false;
};

/// Three-parameter exponential rate-to-quality map
///
///     phi(r) = amplitude * exp(-decay * r) + floor,   r >= 0 (bpp)
///
/// Strictly decreasing and convex for amplitude > 0, decay > 0; the metric
/// approaches `floor` as r grows. One instance models the reconstruction
/// distortion curve (1 - MS-SSIM), another the synthesis perception curve
/// (LPIPS).
struct RdpCurve {
    double amplitude = 0.0;  // a
    double decay = 0.0;      // b
    double floor = 0.0;      // c

    bool valid() const { return amplitude > 0.0 && decay > 0.0 && floor >= 0.0; }

    /// Metric value at a compression rate (bpp). Throws on negative rate.
    double evaluate(double rate_bpp) const;

    /// Slope d(phi)/dr, needed for constraint gradients.
    double derivative(double rate_bpp) const;

    /// Smallest rate whose metric meets `target`:
    ///   floor < target < amplitude + floor  ->  closed-form inverse,
    ///   target >= amplitude + floor         ->  rate 0, flagged trivially met,
    ///   target <= floor                     ->  InfeasibleRequirement.
    RateBound invert(double target) const;
};

/// A fitted curve together with the RMS residual of the fit.
struct CurveFit {
    RdpCurve curve;
    double rms_residual = 0.0;
};

/// Least-squares fit of (amplitude, decay, floor) to empirical
/// (rate_bpp, metric) samples. Separable formulation: outer derivative-free
/// minimization over (decay, floor) with the amplitude recovered in closed
/// form at each trial point. Requires >= 4 samples with distinct rates and
/// positive metrics; throws FitDiverged when the optimizer cannot improve on
/// its initial guess.
CurveFit fit_curve(const std::vector<std::pair<double, double>>& samples);

}  // namespace semcast
