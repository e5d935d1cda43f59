#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace mg {

struct SimConfig {
    double epsilon = 0.05;
    std::size_t max_iter = 100;
    std::size_t n_dichotomies = 51;
    std::size_t instances_per_manifold = 20;
    std::uint64_t seed = 0;
    bool homogeneous = false;  // separators through the origin instead of affine
    bool center_global = true; // subtract the pooled mean before projecting

    void validate() const;
};

struct BisectionStep {
    std::size_t n_dims = 0;
    double separable_fraction = 0.0;
};

struct SimCapacityResult {
    double alpha_sim = 0.0;
    std::size_t n_critical = 0;
    std::vector<BisectionStep> trace;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t num_manifolds = 0;
    std::vector<std::string> warnings;
};

// Fraction of cfg.n_dichotomies random manifold labelings that are linearly
// separable after a Gaussian projection to n_dims. The projection for a given
// seed is a row prefix of any larger one, so results are monotone in n_dims.
double separable_fraction(const ManifoldSet& ms, std::size_t n_dims, const SimConfig& cfg);

// Bisection on the projected dimension for the point where half the
// dichotomies are separable; alpha_sim = P / N_c.
SimCapacityResult simulation_capacity(const ManifoldSet& ms, const SimConfig& cfg);

// Capacity of unstructured manifolds of the given sizes: 1 / mean(l_i / 2).
double lower_bound_capacity(std::span<const std::size_t> sizes);

} // namespace mg
