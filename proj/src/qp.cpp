#include "semcast/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace semcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Numerically safe hypot-style update used by the Givens sweeps.
double distance(double a, double b) {
    const double aa = std::abs(a), ab = std::abs(b);
    if (aa > ab) {
        const double t = ab / aa;
        return aa * std::sqrt(1.0 + t * t);
    }
    if (ab > 0.0) {
        const double t = aa / ab;
        return ab * std::sqrt(1.0 + t * t);
    }
    return 0.0;
}

}  // namespace

// Dual active-set method of Goldfarb and Idnani (1983). Starts from the
// unconstrained minimum (dual feasible) and adds violated constraints one at
// a time, maintaining J = L^-T Q and the triangular factor R of the active
// normals in the metric of H. Terminates with the exact optimum or with a
// proof that the constraints are inconsistent.
QpResult solve_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                  const Eigen::MatrixXd& constraint_normals, const Eigen::VectorXd& constraint_offsets) {
    const int n = static_cast<int>(hessian.rows());
    const int m = static_cast<int>(constraint_normals.rows());

    QpResult result;
    result.multipliers = Eigen::VectorXd::Zero(m);

    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success) {
        return result;  // caller guarantees SPD; treat failure as no solution
    }

    // Unconstrained minimum and J = L^-T.
    Eigen::VectorXd x = -llt.solve(gradient);
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
    llt.matrixU().solveInPlace(J);

    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> active;  // constraint indices, |active| = q
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n + 1);

    Eigen::VectorXd d(n), z(n), r(n), np(n);
    Eigen::VectorXd slack = constraint_normals * x + constraint_offsets;

    // Violation tolerance scaled to the constraint data.
    double scale = 1.0;
    for (int i = 0; i < m; ++i) scale = std::max(scale, constraint_normals.row(i).norm());
    const double tol = 1e-11 * scale * std::max(1.0, x.norm() + 1.0);

    int q = 0;
    const int max_iter = 16 * (n + m + 4);

    auto add_constraint = [&](double& r_norm) -> bool {
        // Rotate d so its tail vanishes, carrying J along; the leading q+1
        // entries become the new column of R.
        for (int j = n - 1; j >= q + 1; --j) {
            const double cc = d(j - 1);
            const double ss = d(j);
            const double h = distance(cc, ss);
            if (h == 0.0) continue;
            double c1 = cc / h;
            double s1 = ss / h;
            d(j) = 0.0;
            if (c1 < 0.0) {
                c1 = -c1;
                s1 = -s1;
                d(j - 1) = -h;
            } else {
                d(j - 1) = h;
            }
            const double xny = s1 / (1.0 + c1);
            for (int k = 0; k < n; ++k) {
                const double t1 = J(k, j - 1);
                const double t2 = J(k, j);
                J(k, j - 1) = t1 * c1 + t2 * s1;
                J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
            }
        }
        ++q;
        for (int i = 0; i < q; ++i) R(i, q - 1) = d(i);
        const bool ok = std::abs(d(q - 1)) > 1e-13 * r_norm;
        r_norm = std::max(r_norm, std::abs(d(q - 1)));
        return ok;
    };

    auto delete_constraint = [&](int l) {
        // l is a position in the active set.
        for (int i = l; i < q - 1; ++i) {
            active[i] = active[i + 1];
            u(i) = u(i + 1);
            R.col(i) = R.col(i + 1);
        }
        active.resize(q - 1);
        u(q - 1) = 0.0;
        for (int i = 0; i < q; ++i) R(i, q - 1) = 0.0;
        --q;

        for (int j = l; j < q; ++j) {
            const double cc = R(j, j);
            const double ss = R(j + 1, j);
            const double h = distance(cc, ss);
            R(j + 1, j) = 0.0;
            if (h == 0.0) continue;
            double c1 = cc / h;
            double s1 = ss / h;
            if (c1 < 0.0) {
                R(j, j) = -h;
                c1 = -c1;
                s1 = -s1;
            } else {
                R(j, j) = h;
            }
            const double xny = s1 / (1.0 + c1);
            for (int k = j + 1; k < q; ++k) {
                const double t1 = R(j, k);
                const double t2 = R(j + 1, k);
                R(j, k) = t1 * c1 + t2 * s1;
                R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
            }
            for (int k = 0; k < n; ++k) {
                const double t1 = J(k, j);
                const double t2 = J(k, j + 1);
                J(k, j) = t1 * c1 + t2 * s1;
                J(k, j + 1) = xny * (J(k, j) + t1) - t2;
            }
        }
    };

    double r_norm = 1.0;
    int iter = 0;
    while (iter++ < max_iter) {
        // Most violated inactive constraint.
        slack = constraint_normals * x + constraint_offsets;
        int p = -1;
        double worst = -tol;
        for (int i = 0; i < m; ++i) {
            bool is_active = false;
            for (int a : active) {
                if (a == i) {
                    is_active = true;
                    break;
                }
            }
            if (!is_active && slack(i) < worst) {
                worst = slack(i);
                p = i;
            }
        }
        if (p < 0) break;  // primal feasible: optimum found

        np = constraint_normals.row(p).transpose();
        double u_plus = 0.0;
        double s_p = slack(p);

        while (iter++ < max_iter) {
            // Step direction in primal space and multiplier sensitivities.
            d.noalias() = J.transpose() * np;
            z.setZero();
            for (int j = q; j < n; ++j) z += J.col(j) * d(j);
            for (int i = q - 1; i >= 0; --i) {
                double sum = d(i);
                for (int k = i + 1; k < q; ++k) sum -= R(i, k) * r(k);
                r(i) = sum / R(i, i);
            }

            // Dual step length (constraint to drop) and primal step length.
            double t1 = kInf;
            int drop = -1;
            for (int i = 0; i < q; ++i) {
                if (r(i) > 0.0) {
                    const double ratio = u(i) / r(i);
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = i;
                    }
                }
            }
            const double ztn = z.dot(np);
            const double t2 = (z.norm() > 1e-13 * scale && ztn > 0.0) ? -s_p / ztn : kInf;
            const double t = std::min(t1, t2);

            if (t >= kInf) {
                // No direction reduces the violation: inconsistent system.
                result.feasible = false;
                return result;
            }

            if (t2 >= kInf) {
                // Pure dual step: drop a blocking constraint and retry.
                for (int i = 0; i < q; ++i) u(i) -= t * r(i);
                u_plus += t;
                delete_constraint(drop);
                continue;
            }

            x += t * z;
            for (int i = 0; i < q; ++i) u(i) -= t * r(i);
            u_plus += t;

            if (t == t2) {
                // Full step: constraint p joins the active set.
                u(q) = u_plus;
                active.push_back(p);
                if (!add_constraint(r_norm)) {
                    // Degenerate normal; treat p as satisfied and move on.
                    active.pop_back();
                    --q;
                    for (int i = 0; i <= q; ++i) R(i, q) = 0.0;
                }
                break;
            }

            // Partial step: drop the blocking constraint, stay on p.
            delete_constraint(drop);
            s_p = np.dot(x) + constraint_offsets(p);
        }
    }

    if (iter >= max_iter) {
        result.feasible = false;
        return result;
    }

    result.x = x;
    for (int i = 0; i < q; ++i) result.multipliers(active[i]) = u(i);
    result.objective = 0.5 * x.dot(hessian * x) + gradient.dot(x);
    result.feasible = true;
    result.active_count = q;
    return result;
}

}  // namespace semcast
