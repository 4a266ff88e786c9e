#include "semcast/rdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace semcast {

double RdpCurve::evaluate(double rate_bpp) const {
    if (rate_bpp < 0.0) {
        throw std::invalid_argument("RdpCurve::evaluate: rate must be non-negative");
    }
    return amplitude * std::exp(-decay * rate_bpp) + floor;
}

double RdpCurve::derivative(double rate_bpp) const {
    return -amplitude * decay * std::exp(-decay * rate_bpp);
}

RateBound RdpCurve::invert(double target) const {
    if (target <= floor) {
        throw InfeasibleRequirement("quality target " + std::to_string(target) +
                                    " is at or below the curve floor " + std::to_string(floor));
    }
    if (target >= amplitude + floor) {
        return RateBound{0.0, true};
    }
    return RateBound{std::log(amplitude / (target - floor)) / decay, false};
}

namespace {

using Samples = std::vector<std::pair<double, double>>;

// Residual sum of squares with the amplitude solved in closed form for a
// fixed (decay, floor). Returns the optimal amplitude through `a_out`.
double separable_rss(const Samples& samples, double decay, double floor, double& a_out) {
    double ee = 0.0, em = 0.0;
    for (const auto& [r, m] : samples) {
        const double e = std::exp(-decay * r);
        ee += e * e;
        em += e * (m - floor);
    }
    const double a = ee > 0.0 ? em / ee : 0.0;
    double rss = 0.0;
    for (const auto& [r, m] : samples) {
        const double res = a * std::exp(-decay * r) + floor - m;
        rss += res * res;
    }
    a_out = a;
    return rss;
}

struct SimplexVertex {
    double decay;
    double floor;
    double rss;
};

// Nelder-Mead over (decay, floor); amplitude always from the inner solve.
SimplexVertex nelder_mead(const Samples& samples, double b0, double c0, double scale_b,
                          double scale_c) {
    auto eval = [&samples](double b, double c) {
        if (b <= 0.0 || c < 0.0) return std::numeric_limits<double>::infinity();
        double a;
        const double rss = separable_rss(samples, b, c, a);
        return a > 0.0 ? rss : std::numeric_limits<double>::infinity();
    };

    std::array<SimplexVertex, 3> sx{{{b0, c0, eval(b0, c0)},
                                     {b0 + scale_b, c0, eval(b0 + scale_b, c0)},
                                     {b0, c0 + scale_c, eval(b0, c0 + scale_c)}}};

    for (int iter = 0; iter < 2000; ++iter) {
        std::sort(sx.begin(), sx.end(),
                  [](const SimplexVertex& u, const SimplexVertex& v) { return u.rss < v.rss; });
        if (sx[2].rss - sx[0].rss <= 1e-18 + 1e-13 * std::abs(sx[0].rss)) break;

        const double cb = 0.5 * (sx[0].decay + sx[1].decay);
        const double cc = 0.5 * (sx[0].floor + sx[1].floor);
        auto make = [&](double t) {
            SimplexVertex v{cb + t * (cb - sx[2].decay), cc + t * (cc - sx[2].floor), 0.0};
            v.rss = eval(v.decay, v.floor);
            return v;
        };

        const SimplexVertex refl = make(1.0);
        if (refl.rss < sx[0].rss) {
            const SimplexVertex expand = make(2.0);
            sx[2] = expand.rss < refl.rss ? expand : refl;
        } else if (refl.rss < sx[1].rss) {
            sx[2] = refl;
        } else {
            const SimplexVertex contr = make(refl.rss < sx[2].rss ? 0.5 : -0.5);
            if (contr.rss < std::min(refl.rss, sx[2].rss)) {
                sx[2] = contr;
            } else {
                for (int i = 1; i < 3; ++i) {
                    sx[i].decay = sx[0].decay + 0.5 * (sx[i].decay - sx[0].decay);
                    sx[i].floor = sx[0].floor + 0.5 * (sx[i].floor - sx[0].floor);
                    sx[i].rss = eval(sx[i].decay, sx[i].floor);
                }
            }
        }
    }
    std::sort(sx.begin(), sx.end(),
              [](const SimplexVertex& u, const SimplexVertex& v) { return u.rss < v.rss; });
    return sx[0];
}

// Levenberg-Marquardt refinement of the full (a, b, c) triple starting from
// the separable solution; drives the fit to machine precision when the data
// is exactly exponential.
void lm_polish(const Samples& samples, double& a, double& b, double& c) {
    const int n = static_cast<int>(samples.size());
    Eigen::VectorXd res(n);
    Eigen::MatrixXd jac(n, 3);
    double lambda = 1e-6;

    auto rss_at = [&samples](double aa, double bb, double cc) {
        double s = 0.0;
        for (const auto& [r, m] : samples) {
            const double e = aa * std::exp(-bb * r) + cc - m;
            s += e * e;
        }
        return s;
    };

    double rss = rss_at(a, b, c);
    for (int iter = 0; iter < 60; ++iter) {
        for (int i = 0; i < n; ++i) {
            const double r = samples[i].first;
            const double e = std::exp(-b * r);
            res(i) = a * e + c - samples[i].second;
            jac(i, 0) = e;
            jac(i, 1) = -a * r * e;
            jac(i, 2) = 1.0;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;
        if (jtr.lpNorm<Eigen::Infinity>() < 1e-16) break;

        bool stepped = false;
        for (int tries = 0; tries < 20; ++tries) {
            Eigen::MatrixXd m = jtj;
            m.diagonal().array() += lambda * jtj.diagonal().array().maxCoeff();
            const Eigen::VectorXd step = m.ldlt().solve(-jtr);
            const double na = a + step(0), nb = b + step(1), nc = c + step(2);
            if (nb > 0.0 && na > 0.0 && nc >= 0.0) {
                const double nrss = rss_at(na, nb, nc);
                if (nrss <= rss) {
                    a = na;
                    b = nb;
                    c = nc;
                    rss = nrss;
                    lambda = std::max(lambda * 0.25, 1e-12);
                    stepped = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if (!stepped) break;
    }
}

}  // namespace

CurveFit fit_curve(const Samples& samples) {
    if (samples.size() < 4) {
        throw std::invalid_argument("fit_curve: need at least 4 samples");
    }
    std::vector<double> rates;
    rates.reserve(samples.size());
    double min_m = std::numeric_limits<double>::infinity();
    double max_m = -std::numeric_limits<double>::infinity();
    double min_r = std::numeric_limits<double>::infinity();
    double max_r = -std::numeric_limits<double>::infinity();
    for (const auto& [r, m] : samples) {
        if (m <= 0.0) throw std::invalid_argument("fit_curve: metrics must be positive");
        if (r < 0.0) throw std::invalid_argument("fit_curve: rates must be non-negative");
        rates.push_back(r);
        min_m = std::min(min_m, m);
        max_m = std::max(max_m, m);
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
    }
    std::sort(rates.begin(), rates.end());
    if (std::adjacent_find(rates.begin(), rates.end()) != rates.end()) {
        throw std::invalid_argument("fit_curve: sample rates must be distinct");
    }

    // Initial guesses: floor just under the smallest metric, decay from the
    // end-to-end log slope.
    const double spread = max_m - min_m;
    const double c0 = std::max(0.0, min_m - 0.05 * spread - 1e-9);
    double b0 = 1.0;
    if (spread > 0.0 && max_r > min_r) {
        const double top = std::log((max_m - c0) / std::max(min_m - c0, 1e-300));
        if (top > 0.0) b0 = top / (max_r - min_r);
    }

    double a_init;
    const double initial_rss = separable_rss(samples, b0, c0, a_init);

    const SimplexVertex best =
        nelder_mead(samples, b0, c0, 0.3 * b0 + 0.05, 0.02 * spread + 1e-6);
    if (!(best.rss <= initial_rss)) {
        throw FitDiverged("fit_curve: optimizer failed to improve on the initial guess");
    }

    double a = 0.0;
    separable_rss(samples, best.decay, best.floor, a);
    double b = best.decay;
    double c = best.floor;
    lm_polish(samples, a, b, c);

    double rss = 0.0;
    for (const auto& [r, m] : samples) {
        const double e = a * std::exp(-b * r) + c - m;
        rss += e * e;
    }
    return CurveFit{RdpCurve{a, b, c}, std::sqrt(rss / static_cast<double>(samples.size()))};
}

}  // namespace semcast
