#include "capacity_mft.hpp"

#include <cmath>
#include <limits>

#include "errors.hpp"
#include "parallel.hpp"
#include "projection_qp.hpp"
#include "random.hpp"

namespace mg {

void MftConfig::validate() const {
    require(n_t >= 1, "n_t must be >= 1");
    require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be a non-negative finite number");
}

ManifoldMetrics mft_single_manifold(const ProjectedManifold& pm, const MftConfig& cfg, std::uint64_t stream) {
    cfg.validate();
    const Eigen::Index d = pm.intrinsic_dim;
    require(pm.coords.cols() == d + 1 && pm.coords.rows() >= 1, "projected manifold has inconsistent shape");

    ManifoldMetrics out;
    out.intrinsic_dim = d;
    out.center_norm = pm.center_norm;
    out.n_t_used = cfg.n_t;

    double slack_sum = 0.0;
    double radius_sq_sum = 0.0;
    double dim_sum = 0.0;
    std::size_t anchored = 0;

    for (std::size_t k = 0; k < cfg.n_t; ++k) {
        Rng rng = make_rng(derive_seed(cfg.seed, Stream::MftSamples, stream, k));
        const Eigen::VectorXd t = gaussian_vector(rng, d + 1);
        const ProjectionSolution sol = solve_projection_qp(t, pm.coords, cfg.kappa);
        slack_sum += sol.slack_norm;
        out.max_kkt_residual = std::max(out.max_kkt_residual, sol.kkt_residual);
        if (!sol.anchor) {
            ++out.interior_samples;
            continue;
        }
        ++anchored;
        const Eigen::VectorXd spread = sol.anchor->head(d) / (*sol.anchor)(d);
        radius_sq_sum += spread.squaredNorm();
        const double len = spread.norm();
        if (len > 0.0) {
            const double proj = t.head(d).dot(spread) / len;
            dim_sum += proj * proj;
        }
    }

    const double mean_slack = slack_sum / static_cast<double>(cfg.n_t);
    if (mean_slack > 0.0) {
        out.alpha_mu = 1.0 / mean_slack;
    } else {
        out.alpha_mu = std::numeric_limits<double>::infinity();
        out.alpha_infinite = true;
    }
    out.radius = anchored > 0 ? std::sqrt(radius_sq_sum / static_cast<double>(anchored)) : 0.0;
    const std::size_t dim_count = cfg.zero_count_dimension ? cfg.n_t : anchored;
    out.dimension = dim_count > 0 ? dim_sum / static_cast<double>(dim_count) : 0.0;
    return out;
}

double capacity_contribution_aggregate(std::span<const double> alphas) {
    require(!alphas.empty(), "capacity aggregation needs at least one value");
    double inv = 0.0;
    for (double a : alphas) {
        require(a > 0.0, "capacity contributions must be positive");
        inv += 1.0 / a;
    }
    inv /= static_cast<double>(alphas.size());
    return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
}

MftReport mftma(const ManifoldSet& ms, const MftConfig& cfg) {
    ms.validate();
    cfg.validate();

    MftReport rep;
    rep.task = ms.task;
    rep.layer = ms.layer;
    rep.config = cfg;

    Eigen::RowVectorXd origin = Eigen::RowVectorXd::Zero(ms.ambient_dim());
    if (cfg.center_global) origin = pooled_points(ms).colwise().mean();

    rep.per_manifold.resize(ms.num_manifolds());
    parallel_for(ms.num_manifolds(), [&](std::size_t i) {
        const Manifold& m = ms.manifolds[i];
        try {
            const Eigen::MatrixXd pts = m.points.rowwise() - origin;
            const Eigen::VectorXd center = pts.colwise().mean().transpose();
            const ProjectedManifold pm = manifold_subspace(pts, center);
            rep.per_manifold[i] = mft_single_manifold(pm, cfg, i);
            rep.per_manifold[i].label = m.label;
        } catch (const Error& e) {
            throw Error(e.code(), "manifold '" + m.label + "': " + e.what());
        }
    });

    std::vector<double> alphas;
    double radius = 0.0, dimension = 0.0;
    for (const auto& pm : rep.per_manifold) {
        alphas.push_back(pm.alpha_mu);
        radius += pm.radius;
        dimension += pm.dimension;
        if (pm.alpha_infinite)
            rep.warnings.push_back("manifold '" + pm.label + "': every sample was interior; capacity is unbounded");
    }
    const double p = static_cast<double>(rep.per_manifold.size());
    rep.alpha_m = capacity_contribution_aggregate(alphas);
    rep.mean_radius = radius / p;
    rep.mean_dimension = dimension / p;
    rep.rho_center = center_correlations(centroids(ms), cfg.correlation);
    return rep;
}

} // namespace mg
