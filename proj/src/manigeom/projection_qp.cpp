#include "projection_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace mg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Active-set factorisation: J is orthogonal, R upper triangular, with
// J^T N = [R; 0] for the matrix N of active constraint normals.
struct Factor {
    Eigen::MatrixXd j;
    Eigen::MatrixXd r;
    Eigen::Index active = 0;
    double r_norm = 1.0;

    explicit Factor(Eigen::Index n) : j(Eigen::MatrixXd::Identity(n, n)), r(Eigen::MatrixXd::Zero(n, n)) {}

    // d = J^T n_p on entry. Returns false if the constraint is dependent.
    bool add(Eigen::VectorXd& d) {
        const Eigen::Index n = j.rows();
        for (Eigen::Index c = n - 1; c >= active + 1; --c) {
            double cc = d(c - 1), ss = d(c);
            const double h = std::hypot(cc, ss);
            if (std::abs(h) < kEps) continue;
            d(c) = 0.0;
            ss /= h;
            cc /= h;
            if (cc < 0.0) {
                cc = -cc;
                ss = -ss;
                d(c - 1) = -h;
            } else {
                d(c - 1) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (Eigen::Index k = 0; k < n; ++k) {
                const double t1 = j(k, c - 1), t2 = j(k, c);
                j(k, c - 1) = t1 * cc + t2 * ss;
                j(k, c) = xny * (t1 + j(k, c - 1)) - t2;
            }
        }
        ++active;
        r.col(active - 1).head(active) = d.head(active);
        if (std::abs(d(active - 1)) <= kEps * r_norm) {
            --active;
            return false;
        }
        r_norm = std::max(r_norm, std::abs(d(active - 1)));
        return true;
    }

    void remove(Eigen::Index pos) {
        const Eigen::Index n = j.rows();
        for (Eigen::Index c = pos; c + 1 < active; ++c) r.col(c) = r.col(c + 1);
        r.col(active - 1).setZero();
        --active;
        for (Eigen::Index c = pos; c < active; ++c) {
            double cc = r(c, c), ss = r(c + 1, c);
            const double h = std::hypot(cc, ss);
            if (std::abs(h) < kEps) continue;
            cc /= h;
            ss /= h;
            r(c + 1, c) = 0.0;
            if (cc < 0.0) {
                r(c, c) = -h;
                cc = -cc;
                ss = -ss;
            } else {
                r(c, c) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (Eigen::Index k = c + 1; k < active; ++k) {
                const double t1 = r(c, k), t2 = r(c + 1, k);
                r(c, k) = t1 * cc + t2 * ss;
                r(c + 1, k) = xny * (t1 + r(c, k)) - t2;
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                const double t1 = j(k, c), t2 = j(k, c + 1);
                j(k, c) = t1 * cc + t2 * ss;
                j(k, c + 1) = xny * (j(k, c) + t1) - t2;
            }
        }
    }
};

[[noreturn]] void numerical_failure(const std::string& why, int iter, Eigen::Index active, double worst) {
    std::ostringstream msg;
    msg << "projection QP failed: " << why << " (iteration " << iter << ", active constraints " << active
        << ", worst violation " << worst << ")";
    fail(ErrorCode::Numerical, msg.str());
}

} // namespace

ProjectionSolution solve_projection_qp(const Eigen::VectorXd& t, const Eigen::MatrixXd& points, double kappa,
                                       int max_iter) {
    require(points.rows() >= 1, "projection QP needs at least one manifold point");
    require(points.cols() == t.size(), "t and manifold coordinates differ in dimension");
    require(t.allFinite() && points.allFinite(), "projection QP inputs must be finite");
    require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be a non-negative finite number");

    const Eigen::Index n = t.size();
    const Eigen::Index m = points.rows();
    const Eigen::VectorXd norms = points.rowwise().norm();

    ProjectionSolution sol;
    sol.multipliers = Eigen::VectorXd::Zero(m);

    Eigen::VectorXd x = t;
    Factor f(n);
    std::vector<Eigen::Index> active_set;
    std::vector<double> u;

    auto tolerance = [&](Eigen::Index i) { return 1e-12 * std::max(1.0, norms(i) * x.norm() + kappa); };

    int iter = 0;
    for (;;) {
        // most violated constraint
        Eigen::Index p = -1;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (std::find(active_set.begin(), active_set.end(), i) != active_set.end()) continue;
            const double s = points.row(i).dot(x) - kappa;
            if (s < -tolerance(i) && s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) break;

        const Eigen::VectorXd np = points.row(p).transpose();
        double u_plus = 0.0;
        double slack_p = np.dot(x) - kappa;

        for (;;) {
            if (++iter > max_iter) numerical_failure("iteration cap reached", iter, f.active, slack_p);

            Eigen::VectorXd d = f.j.transpose() * np;
            const Eigen::VectorXd z = f.j.rightCols(n - f.active) * d.tail(n - f.active);
            Eigen::VectorXd r;
            if (f.active > 0)
                r = f.r.topLeftCorner(f.active, f.active).triangularView<Eigen::Upper>().solve(d.head(f.active));

            // partial step: first active multiplier to hit zero
            double t1 = kInf;
            Eigen::Index drop = -1;
            for (Eigen::Index k = 0; k < f.active; ++k) {
                if (r(k) > 0.0) {
                    const double ratio = u[static_cast<std::size_t>(k)] / r(k);
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = k;
                    }
                }
            }
            // full step: makes constraint p active
            const double zn = z.dot(np);
            const double t2 = std::abs(z.squaredNorm()) > kEps * std::max(1.0, np.squaredNorm()) ? -slack_p / zn : kInf;

            const double step = std::min(t1, t2);
            if (!std::isfinite(step)) numerical_failure("constraints are infeasible", iter, f.active, slack_p);

            if (!std::isfinite(t2)) {
                // dual step only
                for (Eigen::Index k = 0; k < f.active; ++k) u[static_cast<std::size_t>(k)] -= step * r(k);
                u_plus += step;
                f.remove(drop);
                active_set.erase(active_set.begin() + drop);
                u.erase(u.begin() + drop);
                continue;
            }

            x += step * z;
            for (Eigen::Index k = 0; k < f.active; ++k) u[static_cast<std::size_t>(k)] -= step * r(k);
            u_plus += step;

            if (step == t2) {
                if (!f.add(d)) numerical_failure("dependent constraint could not be added", iter, f.active, slack_p);
                active_set.push_back(p);
                u.push_back(u_plus);
                break;
            }
            f.remove(drop);
            active_set.erase(active_set.begin() + drop);
            u.erase(u.begin() + drop);
            slack_p = np.dot(x) - kappa;
        }
    }

    for (std::size_t k = 0; k < active_set.size(); ++k) sol.multipliers(active_set[k]) = std::max(0.0, u[k]);
    sol.v_star = x;
    sol.iterations = iter;
    const Eigen::VectorXd push = points.transpose() * sol.multipliers;
    sol.slack_norm = (x - t).squaredNorm();

    const double weight = sol.multipliers.sum();
    if (weight > 0.0 && sol.slack_norm > 0.0) {
        Eigen::VectorXd anchor = push / weight;
        if (anchor(n - 1) > 0.0) anchor /= anchor(n - 1);
        sol.anchor = std::move(anchor);
    }

    // KKT residual: stationarity, primal feasibility, complementarity
    double residual = (x - t - push).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double s = points.row(i).dot(x) - kappa;
        residual = std::max(residual, std::max(0.0, -s));
        residual = std::max(residual, std::abs(sol.multipliers(i) * s));
    }
    sol.kkt_residual = residual;
    return sol;
}

} // namespace mg
