#include "separability.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"

namespace mg {

namespace {

constexpr double kDecisionTol = 1e-9;

// Wolfe's corral: active point indices, their convex weights, and an upper
// triangular R with R^T R = A^T A for A = [1 ... 1; z_S columns].
class Corral {
public:
    explicit Corral(const Eigen::MatrixXd& z) : z_(z) {}

    std::size_t size() const { return idx_.size(); }
    bool contains(Eigen::Index i) const { return std::find(idx_.begin(), idx_.end(), i) != idx_.end(); }

    // Returns false when the new point is affinely dependent on the corral.
    bool add(Eigen::Index j, double weight) {
        const std::size_t s = idx_.size();
        Eigen::VectorXd cross(s);
        for (std::size_t a = 0; a < s; ++a) cross(a) = 1.0 + z_.row(idx_[a]).dot(z_.row(j));
        const double self = 1.0 + z_.row(j).squaredNorm();
        Eigen::VectorXd r = cross;
        if (s > 0) r = r_.topLeftCorner(s, s).transpose().triangularView<Eigen::Lower>().solve(cross);
        const double rho2 = self - r.squaredNorm();
        if (!(rho2 > 1e-14 * self)) return false;
        Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(s + 1, s + 1);
        if (s > 0) grown.topLeftCorner(s, s) = r_.topLeftCorner(s, s);
        grown.block(0, s, s, 1) = r;
        grown(s, s) = std::sqrt(rho2);
        r_ = std::move(grown);
        idx_.push_back(j);
        lambda_.push_back(weight);
        return true;
    }

    void remove(std::size_t pos) {
        const std::size_t s = idx_.size();
        Eigen::MatrixXd r(s, s - 1);
        r << r_.leftCols(pos), r_.rightCols(s - 1 - pos);
        // restore triangularity on the Hessenberg part
        for (std::size_t c = pos; c + 1 < s; ++c) {
            Eigen::JacobiRotation<double> g;
            g.makeGivens(r(c, c), r(c + 1, c));
            r.applyOnTheLeft(c, c + 1, g.adjoint());
            r(c + 1, c) = 0.0;
        }
        r_ = r.topRows(s - 1);
        idx_.erase(idx_.begin() + static_cast<std::ptrdiff_t>(pos));
        lambda_.erase(lambda_.begin() + static_cast<std::ptrdiff_t>(pos));
    }

    // Weights of the minimum-norm point of the affine hull of the corral.
    Eigen::VectorXd affine_weights() const {
        const auto s = static_cast<Eigen::Index>(idx_.size());
        const auto tri = r_.topLeftCorner(s, s);
        Eigen::VectorXd u = tri.transpose().triangularView<Eigen::Lower>().solve(Eigen::VectorXd::Ones(s));
        Eigen::VectorXd mu = tri.triangularView<Eigen::Upper>().solve(u);
        return mu / mu.sum();
    }

    Eigen::VectorXd combine(const Eigen::VectorXd& w) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(z_.cols());
        for (std::size_t a = 0; a < idx_.size(); ++a) x += w(static_cast<Eigen::Index>(a)) * z_.row(idx_[a]).transpose();
        return x;
    }

    std::vector<double>& lambda() { return lambda_; }

private:
    const Eigen::MatrixXd& z_;
    std::vector<Eigen::Index> idx_;
    std::vector<double> lambda_;
    Eigen::MatrixXd r_;
};

enum class Verdict { Separable, NotSeparable };

// Runs Wolfe's iterations. When `early` is set, stops as soon as the current
// iterate certifies the answer to the separability question.
struct WolfeOutcome {
    Eigen::VectorXd x;
    int iterations = 0;
    std::optional<Verdict> verdict;
};

WolfeOutcome run_wolfe(const Eigen::MatrixXd& z, std::optional<double> early_margin) {
    const Eigen::Index k = z.rows();
    const Eigen::VectorXd sq = z.rowwise().squaredNorm();
    const double max_sq = sq.maxCoeff();
    const double zero_tol = kDecisionTol * std::sqrt(max_sq);
    const int max_major = static_cast<int>(50 * (k + z.cols()) + 1000);

    Corral corral(z);
    Eigen::Index start = 0;
    sq.minCoeff(&start);
    corral.add(start, 1.0);
    Eigen::VectorXd x = z.row(start).transpose();

    WolfeOutcome out;
    for (int major = 0; major < max_major; ++major) {
        out.iterations = major + 1;
        const Eigen::VectorXd scores = z * x;
        Eigen::Index j = 0;
        const double worst = scores.minCoeff(&j);
        const double xnorm = x.norm();

        if (early_margin) {
            const double need = std::max(*early_margin, zero_tol);
            if (xnorm <= zero_tol || xnorm < *early_margin) {
                out.x = x;
                out.verdict = Verdict::NotSeparable;
                return out;
            }
            if (worst > 0.0 && worst / xnorm >= need) {
                out.x = x;
                out.verdict = Verdict::Separable;
                return out;
            }
        }

        if (x.squaredNorm() - worst <= 1e-12 * max_sq || corral.contains(j)) break;
        if (!corral.add(j, 0.0)) break;

        for (;;) {
            const Eigen::VectorXd mu = corral.affine_weights();
            if (mu.minCoeff() > 1e-12) {
                std::vector<double>& lam = corral.lambda();
                for (std::size_t a = 0; a < lam.size(); ++a) lam[a] = mu(static_cast<Eigen::Index>(a));
                x = corral.combine(mu);
                break;
            }
            std::vector<double>& lam = corral.lambda();
            double theta = 1.0;
            for (std::size_t a = 0; a < lam.size(); ++a) {
                const double m = mu(static_cast<Eigen::Index>(a));
                if (m <= 1e-12) theta = std::min(theta, lam[a] / (lam[a] - m));
            }
            for (std::size_t a = 0; a < lam.size(); ++a)
                lam[a] = theta * mu(static_cast<Eigen::Index>(a)) + (1.0 - theta) * lam[a];
            // drop every point whose weight reached zero, at least the smallest
            std::size_t smallest = 0;
            for (std::size_t a = 1; a < lam.size(); ++a)
                if (lam[a] < lam[smallest]) smallest = a;
            for (std::size_t a = lam.size(); a-- > 0;)
                if (a == smallest || lam[a] <= 1e-12) corral.remove(a);
            double total = 0.0;
            for (double l : corral.lambda()) total += l;
            Eigen::VectorXd w(static_cast<Eigen::Index>(corral.size()));
            for (std::size_t a = 0; a < corral.size(); ++a) {
                corral.lambda()[a] /= total;
                w(static_cast<Eigen::Index>(a)) = corral.lambda()[a];
            }
            x = corral.combine(w);
            if (corral.size() == 1) break;
        }
        if (major + 1 == max_major)
            fail(ErrorCode::Numerical, "min-norm-point search did not converge in " + std::to_string(max_major) +
                                           " iterations");
    }
    out.x = x;
    return out;
}

} // namespace

MinNormPoint min_norm_point(const Eigen::MatrixXd& z) {
    require(z.rows() >= 1 && z.cols() >= 1, "min_norm_point needs a non-empty point set");
    require(z.allFinite(), "min_norm_point inputs must be finite");
    WolfeOutcome o = run_wolfe(z, std::nullopt);
    MinNormPoint r;
    r.distance = o.x.norm();
    r.point = std::move(o.x);
    r.iterations = o.iterations;
    return r;
}

bool is_separable(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels, const SeparabilityOptions& opts) {
    require(points.rows() == labels.size(), "one label per point required");
    require(points.rows() >= 1, "is_separable needs at least one point");
    require(points.allFinite(), "is_separable inputs must be finite");
    require(opts.margin >= 0.0 && std::isfinite(opts.margin), "margin must be a non-negative finite number");
    bool pos = false, neg = false;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        require(labels(i) == 1 || labels(i) == -1, "labels must be +1 or -1");
        (labels(i) > 0 ? pos : neg) = true;
    }
    if (!pos || !neg) return true;

    const Eigen::Index extra = opts.bias ? 1 : 0;
    Eigen::MatrixXd z(points.rows(), points.cols() + extra);
    z.leftCols(points.cols()) = labels.cast<double>().asDiagonal() * points;
    if (opts.bias) z.col(points.cols()) = labels.cast<double>();

    WolfeOutcome o = run_wolfe(z, opts.margin);
    if (o.verdict) return *o.verdict == Verdict::Separable;
    const double d = o.x.norm();
    const double zero_tol = kDecisionTol * z.rowwise().norm().maxCoeff();
    return d > zero_tol && d >= opts.margin;
}

} // namespace mg
