#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "geometry.hpp"

namespace mg {

struct MftConfig {
    double kappa = 1e-8;
    std::size_t n_t = 300; // Gaussian samples per manifold
    std::uint64_t seed = 0;
    bool center_global = true; // subtract the pooled mean of all points first
    CorrelationKind correlation = CorrelationKind::Cosine;
    // Samples without an anchor count as 0 in the dimension average (true)
    // or are left out of it (false).
    bool zero_count_dimension = true;

    void validate() const;
};

struct ManifoldMetrics {
    std::string label;
    double alpha_mu = 0.0; // +inf when every sample is interior (see alpha_infinite)
    double radius = 0.0;
    double dimension = 0.0;
    std::size_t n_t_used = 0;
    std::size_t interior_samples = 0;
    Eigen::Index intrinsic_dim = 0;
    double center_norm = 0.0;
    bool alpha_infinite = false;
    double max_kkt_residual = 0.0;
};

struct MftReport {
    std::string task;
    std::size_t layer = 0;
    double alpha_m = 0.0;
    std::vector<ManifoldMetrics> per_manifold;
    double mean_radius = 0.0;
    double mean_dimension = 0.0;
    double rho_center = 0.0;
    MftConfig config;
    std::vector<std::string> warnings;
};

// Capacity contribution, radius and dimension of one manifold from n_t
// Gaussian samples. `stream` separates the sample streams of different
// manifolds sharing one seed.
ManifoldMetrics mft_single_manifold(const ProjectedManifold& pm, const MftConfig& cfg, std::uint64_t stream = 0);

// Inverse of the mean inverse capacity; works on any subset of manifolds.
double capacity_contribution_aggregate(std::span<const double> alphas);

MftReport mftma(const ManifoldSet& ms, const MftConfig& cfg);

} // namespace mg
