#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "separability.hpp"

namespace mg::testing {

inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

// Cover's function: dichotomies of P points in general position in N dims
// realisable by a homogeneous separator.
inline double cover_count(std::size_t P, std::size_t N) {
    double s = 0.0;
    for (std::size_t k = 0; k < N; ++k) s += binomial(P - 1, k);
    return 2.0 * s;
}

// Exhaustive count over all 2^P labelings (P <= 12).
inline std::size_t count_separable_dichotomies(const Eigen::MatrixXd& x, bool bias) {
    const auto p = static_cast<std::size_t>(x.rows());
    std::size_t count = 0;
    SeparabilityOptions opts;
    opts.bias = bias;
    for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
        Eigen::VectorXi y(x.rows());
        for (std::size_t i = 0; i < p; ++i) y(static_cast<Eigen::Index>(i)) = (mask >> i) & 1 ? 1 : -1;
        bool same = (y.array() == y(0)).all();
        if (same) {
            // Affine: always. Homogeneous: iff 0 is outside conv{x_i}.
            if (bias || min_norm_point(x).distance > 1e-9 * x.rowwise().norm().maxCoeff()) ++count;
            continue;
        }
        if (is_separable(x, y, opts)) ++count;
    }
    return count;
}

// 2-D geometry predicates for convex-hull disjointness.
inline double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

inline bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                           const Eigen::Vector2d& d) {
    const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
}

inline bool in_triangle(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c) {
    const double d1 = orient(a, b, p), d2 = orient(b, c, p), d3 = orient(c, a, p);
    return (d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0);
}

// Two finite 2-D sets in general position are strictly separable by a line
// iff their convex hulls are disjoint, iff no point of one lies in a
// triangle of the other and no pair of segments cross.
inline bool hulls_disjoint(const std::vector<Eigen::Vector2d>& a, const std::vector<Eigen::Vector2d>& b) {
    auto point_in_hull = [](const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& s) {
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                for (std::size_t k = j + 1; k < s.size(); ++k)
                    if (in_triangle(p, s[i], s[j], s[k])) return true;
        return false;
    };
    for (const auto& p : a)
        if (point_in_hull(p, b)) return false;
    for (const auto& p : b)
        if (point_in_hull(p, a)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k)
                for (std::size_t l = k + 1; l < b.size(); ++l)
                    if (segments_cross(a[i], a[j], b[k], b[l])) return false;
    return true;
}

// Vectors lie in an open half-plane through the origin iff the largest
// angular gap between consecutive directions exceeds pi.
inline bool in_open_half_plane(const std::vector<Eigen::Vector2d>& v) {
    std::vector<double> ang;
    for (const auto& x : v) ang.push_back(std::atan2(x.y(), x.x()));
    std::sort(ang.begin(), ang.end());
    double gap = ang.front() + 2 * M_PI - ang.back();
    for (std::size_t i = 1; i < ang.size(); ++i) gap = std::max(gap, ang[i] - ang[i - 1]);
    return gap > M_PI;
}

// Projection of t onto {v : s_i . v >= kappa} by enumerating every subset of
// active constraints, projecting onto its affine face and keeping the
// closest feasible candidate.
inline Eigen::VectorXd brute_force_projection(const Eigen::VectorXd& t, const Eigen::MatrixXd& s, double kappa) {
    const auto m = static_cast<std::size_t>(s.rows());
    Eigen::VectorXd best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        std::vector<Eigen::Index> act;
        for (std::size_t i = 0; i < m; ++i)
            if ((mask >> i) & 1) act.push_back(static_cast<Eigen::Index>(i));
        Eigen::VectorXd v = t;
        if (!act.empty()) {
            Eigen::MatrixXd a(static_cast<Eigen::Index>(act.size()), s.cols());
            for (std::size_t i = 0; i < act.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = s.row(act[i]);
            const Eigen::VectorXd rhs =
                Eigen::VectorXd::Constant(static_cast<Eigen::Index>(act.size()), kappa) - a * t;
            const Eigen::MatrixXd gram = a * a.transpose();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
            if (lu.rank() < gram.rows()) continue;
            v = t + a.transpose() * lu.solve(rhs);
        }
        if (((s * v).array() >= kappa - 1e-10).all()) {
            const double d = (v - t).squaredNorm();
            if (d < best_dist) {
                best_dist = d;
                best = v;
            }
        }
    }
    return best;
}

// Soft-margin SVM dual optimum by enumeration: every alpha_i is 0, C or free;
// for each pattern the free alphas and the bias solve the KKT equalities.
// Returns the largest dual value over dual-feasible candidates, which equals
// the primal optimum.
inline double brute_force_svm_objective(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, double c) {
    const Eigen::Index n = x.rows();
    const Eigen::MatrixXd k = x * x.transpose();
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) q(i, j) = y(i) * y(j) * k(i, j);
    std::size_t patterns = 1;
    for (Eigen::Index i = 0; i < n; ++i) patterns *= 3;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t code = 0; code < patterns; ++code) {
        std::vector<int> state(static_cast<std::size_t>(n));
        std::size_t rest = code;
        for (auto& s : state) {
            s = static_cast<int>(rest % 3);
            rest /= 3;
        }
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == 1) alpha(i) = c;
            if (state[static_cast<std::size_t>(i)] == 2) free.push_back(i);
        }
        if (!free.empty()) {
            const auto f = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(f + 1, f + 1);
            Eigen::VectorXd rhs(f + 1);
            for (Eigen::Index r = 0; r < f; ++r) {
                const Eigen::Index i = free[static_cast<std::size_t>(r)];
                for (Eigen::Index s = 0; s < f; ++s) a(r, s) = q(i, free[static_cast<std::size_t>(s)]);
                a(r, f) = y(i);
                rhs(r) = 1.0 - q.row(i).dot(alpha);
                a(f, r) = y(i);
            }
            double ysum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) ysum += alpha(i) * y(i);
            rhs(f) = -ysum;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (lu.rank() < a.rows()) continue;
            const Eigen::VectorXd sol = lu.solve(rhs);
            for (Eigen::Index r = 0; r < f; ++r) alpha(free[static_cast<std::size_t>(r)]) = sol(r);
        }
        if ((alpha.array() < -1e-12).any() || (alpha.array() > c + 1e-12).any()) continue;
        double eq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) eq += alpha(i) * y(i);
        if (std::abs(eq) > 1e-9) continue;
        best = std::max(best, alpha.sum() - 0.5 * alpha.dot(q * alpha));
    }
    return best;
}

} // namespace mg::testing
