#include "capacity_sim.hpp"

#include <cmath>
#include <map>
#include <set>

#include "errors.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "separability.hpp"

namespace mg {

void SimConfig::validate() const {
    require(epsilon > 0.0 && epsilon < 0.5, "epsilon must be in (0, 0.5)");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(n_dichotomies >= 1 && n_dichotomies % 2 == 1, "n_dichotomies must be odd");
    require(instances_per_manifold >= 1, "instances_per_manifold must be >= 1");
}

namespace {

Eigen::MatrixXd prepared_points(const ManifoldSet& ms, bool center_global) {
    Eigen::MatrixXd pts = pooled_points(ms);
    if (center_global) pts.rowwise() -= pts.colwise().mean();
    return pts;
}

// Labels drawn uniformly over manifolds; all-same labelings are redrawn.
Eigen::VectorXi draw_dichotomy(std::size_t num_manifolds, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::bernoulli_distribution coin(0.5);
    Eigen::VectorXi y(static_cast<Eigen::Index>(num_manifolds));
    for (;;) {
        int sum = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            y(i) = coin(rng) ? 1 : -1;
            sum += y(i);
        }
        if (std::abs(sum) != y.size()) return y;
    }
}

double fraction_on_points(const Eigen::MatrixXd& pts, const std::vector<std::size_t>& sizes, std::size_t n_dims,
                          const SimConfig& cfg, std::uint64_t seed) {
    Rng proj_rng = make_rng(derive_seed(seed, Stream::Projection));
    const Eigen::MatrixXd g = gaussian_matrix(proj_rng, static_cast<Eigen::Index>(n_dims), pts.cols()) /
                              std::sqrt(static_cast<double>(n_dims));
    const Eigen::MatrixXd projected = pts * g.transpose();

    SeparabilityOptions opts;
    opts.bias = !cfg.homogeneous;

    std::vector<char> separable(cfg.n_dichotomies, 0);
    parallel_for(cfg.n_dichotomies, [&](std::size_t d) {
        const Eigen::VectorXi manifold_labels = draw_dichotomy(sizes.size(), derive_seed(seed, Stream::Dichotomy, d));
        Eigen::VectorXi point_labels(projected.rows());
        Eigen::Index r = 0;
        for (std::size_t m = 0; m < sizes.size(); ++m)
            for (std::size_t i = 0; i < sizes[m]; ++i) point_labels(r++) = manifold_labels(static_cast<Eigen::Index>(m));
        separable[d] = is_separable(projected, point_labels, opts) ? 1 : 0;
    });

    std::size_t count = 0;
    for (char s : separable) count += static_cast<std::size_t>(s);
    return static_cast<double>(count) / static_cast<double>(cfg.n_dichotomies);
}

// Points that coincide across manifolds with different labels can never be
// separated; report them the way the embedding-layer overlap is reported.
void warn_on_conflicts(const ManifoldSet& ms, std::vector<std::string>& warnings) {
    std::map<std::vector<double>, std::size_t> owner;
    std::size_t conflicts = 0;
    for (std::size_t m = 0; m < ms.manifolds.size(); ++m) {
        const Eigen::MatrixXd& p = ms.manifolds[m].points;
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            std::vector<double> key(static_cast<std::size_t>(p.cols()));
            for (Eigen::Index c = 0; c < p.cols(); ++c) key[static_cast<std::size_t>(c)] = p(r, c);
            auto [it, inserted] = owner.emplace(std::move(key), m);
            if (!inserted && it->second != m) ++conflicts;
        }
    }
    if (conflicts > 0)
        warnings.push_back(std::to_string(conflicts) +
                           " point(s) coincide with a point of a different manifold; those dichotomies are never separable");
}

} // namespace

double separable_fraction(const ManifoldSet& ms, std::size_t n_dims, const SimConfig& cfg) {
    ms.validate();
    cfg.validate();
    require(n_dims >= 1 && n_dims <= static_cast<std::size_t>(ms.ambient_dim()), "n_dims must be in [1, ambient_dim]");
    return fraction_on_points(prepared_points(ms, cfg.center_global), ms.sizes(), n_dims, cfg, cfg.seed);
}

SimCapacityResult simulation_capacity(const ManifoldSet& input, const SimConfig& cfg) {
    input.validate();
    cfg.validate();

    const ManifoldSet ms = subsample(input, cfg.instances_per_manifold, derive_seed(cfg.seed, Stream::Subsample));
    const Eigen::MatrixXd pts = prepared_points(ms, cfg.center_global);
    const std::vector<std::size_t> sizes = ms.sizes();
    const auto ambient = static_cast<std::size_t>(ms.ambient_dim());
    const double p = static_cast<double>(ms.num_manifolds());

    SimCapacityResult res;
    res.num_manifolds = ms.num_manifolds();
    warn_on_conflicts(ms, res.warnings);

    auto evaluate = [&](std::size_t n) {
        const double f = fraction_on_points(pts, sizes, n, cfg, derive_seed(cfg.seed, res.iterations));
        res.trace.push_back({n, f});
        ++res.iterations;
        return f;
    };
    auto finish = [&](std::size_t n, bool converged) {
        res.n_critical = n;
        res.alpha_sim = p / static_cast<double>(n);
        res.converged = converged;
        return res;
    };

    const double top = evaluate(ambient);
    if (std::abs(top - 0.5) <= cfg.epsilon) return finish(ambient, true);
    if (top < 0.5 - cfg.epsilon) {
        res.warnings.push_back("separable fraction stays below 0.5 at the full ambient dimension");
        return finish(ambient, false);
    }

    // lo: fraction below the band (0 is a virtual bound), hi: above the band
    std::size_t lo = 0, hi = ambient;
    while (res.iterations < cfg.max_iter) {
        if (hi - lo <= 1) {
            // bracket collapsed between two adjacent dimensions; widen and resample
            lo = lo > 0 ? lo - 1 : 0;
            hi = std::min(ambient, hi + 1);
        }
        const std::size_t mid = std::max<std::size_t>(1, (lo + hi) / 2);
        const double f = evaluate(mid);
        if (std::abs(f - 0.5) <= cfg.epsilon) return finish(mid, true);
        if (f > 0.5 + cfg.epsilon)
            hi = mid;
        else
            lo = mid;
        if (mid == 1 && f > 0.5 + cfg.epsilon) {
            res.warnings.push_back("separable fraction exceeds the band even at one dimension");
            return finish(1, false);
        }
    }

    const BisectionStep* best = &res.trace.front();
    for (const auto& s : res.trace)
        if (std::abs(s.separable_fraction - 0.5) < std::abs(best->separable_fraction - 0.5)) best = &s;
    res.warnings.push_back("bisection did not reach the tolerance band within max_iter");
    return finish(best->n_dims, false);
}

double lower_bound_capacity(std::span<const std::size_t> sizes) {
    require(!sizes.empty(), "lower bound needs at least one manifold");
    double total = 0.0;
    for (auto l : sizes) {
        require(l >= 1, "manifold sizes must be >= 1");
        total += static_cast<double>(l) / 2.0;
    }
    return 1.0 / (total / static_cast<double>(sizes.size()));
}

} // namespace mg
