#include "doctest.h"

#include <cmath>

#include "capacity_sim.hpp"
#include "errors.hpp"
#include "../support/synthetic.hpp"

using namespace mg;

TEST_CASE("lower bound capacity") {
    CHECK(lower_bound_capacity(std::vector<std::size_t>(7, 20)) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(lower_bound_capacity(std::vector<std::size_t>(5, 1)) == doctest::Approx(2.0));
    CHECK(lower_bound_capacity(std::vector<std::size_t>{10, 30}) == doctest::Approx(0.1));
    CHECK_THROWS_AS(lower_bound_capacity(std::vector<std::size_t>{}), Error);
    CHECK_THROWS_AS(lower_bound_capacity(std::vector<std::size_t>{3, 0}), Error);
}

TEST_CASE("configuration validation") {
    SimConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.n_dichotomies = 50;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.n_dichotomies = 51;
    cfg.epsilon = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("enough dimensions make every dichotomy separable") {
    const auto ms = testing::synthetic_manifolds(5, 4, 40, 0.5, 3, 1);
    SimConfig cfg;
    CHECK(separable_fraction(ms, 25, cfg) == 1.0);
    cfg.homogeneous = true;
    CHECK(separable_fraction(ms, 25, cfg) == 1.0);
}

TEST_CASE("four symmetric random points in two dimensions: half separable on average") {
    // For i.i.d. symmetric points the all-same labelings are separable with
    // probability 1/2 (Wendel), so the non-trivial fraction also averages 1/2.
    SimConfig cfg;
    cfg.homogeneous = true;
    cfg.center_global = false;
    double sum = 0.0;
    const int seeds = 400;
    for (int s = 0; s < seeds; ++s) {
        cfg.seed = static_cast<std::uint64_t>(s);
        const auto ms = testing::point_manifolds(4, 10, 1000 + s);
        sum += separable_fraction(ms, 2, cfg);
    }
    CHECK(sum / seeds == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("coincident manifolds are never separated by a non-trivial dichotomy") {
    Eigen::MatrixXd block(3, 4);
    block << 1, 2, 0, 1, 0, 1, 1, 3, 2, 0, 1, 1;
    const auto ms = make_manifold_set({block, block});
    SimConfig cfg;
    CHECK(separable_fraction(ms, 4, cfg) == 0.0);
}

TEST_CASE("separable fraction is non-decreasing in the projected dimension") {
    const auto ms = testing::synthetic_manifolds(16, 8, 60, 0.6, 4, 3);
    SimConfig cfg;
    cfg.seed = 5;
    double prev = 0.0;
    for (std::size_t n = 1; n <= 40; ++n) {
        const double f = separable_fraction(ms, n, cfg);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("point manifolds: capacity near two") {
    const auto ms = testing::point_manifolds(20, 768, 7);
    SimConfig cfg;
    cfg.homogeneous = true;
    const auto r = simulation_capacity(ms, cfg);
    CHECK(r.converged);
    CHECK(r.alpha_sim == doctest::Approx(2.0).epsilon(0.15));

    const auto dup = testing::point_manifolds(20, 768, 7, 20);
    const auto rd = simulation_capacity(dup, cfg);
    CHECK(rd.alpha_sim == doctest::Approx(r.alpha_sim).epsilon(0.15));
}

TEST_CASE("bisection contract") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto ms = testing::synthetic_manifolds(12, 10, 80, 0.3 + 0.1 * seed, 1 + seed, seed);
        SimConfig cfg;
        cfg.seed = seed;
        const auto r = simulation_capacity(ms, cfg);
        CHECK(r.iterations <= cfg.max_iter);
        CHECK(r.trace.size() == r.iterations);
        CHECK(r.num_manifolds == 12);
        CHECK(r.alpha_sim == 12.0 / static_cast<double>(r.n_critical));
        if (r.converged) {
            bool found = false;
            for (const auto& s : r.trace)
                if (s.n_dims == r.n_critical && std::abs(s.separable_fraction - 0.5) <= cfg.epsilon) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("too few ambient dimensions: unconverged at the ambient dimension") {
    const auto ms = testing::point_manifolds(40, 5, 2);
    SimConfig cfg;
    const auto r = simulation_capacity(ms, cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.n_critical == 5);
    CHECK(r.alpha_sim == doctest::Approx(8.0));
    CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("iteration cap is respected") {
    const auto ms = testing::synthetic_manifolds(20, 10, 200, 0.5, 4, 4);
    SimConfig cfg;
    cfg.max_iter = 2;
    const auto r = simulation_capacity(ms, cfg);
    CHECK(r.iterations <= 2);
    CHECK(r.trace.size() == r.iterations);
}

TEST_CASE("simulation capacity is deterministic") {
    const auto ms = testing::synthetic_manifolds(10, 8, 50, 0.5, 3, 8);
    SimConfig cfg;
    cfg.seed = 3;
    const auto a = simulation_capacity(ms, cfg);
    const auto b = simulation_capacity(ms, cfg);
    CHECK(a.n_critical == b.n_critical);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i)
        CHECK(a.trace[i].separable_fraction == b.trace[i].separable_fraction);
}

TEST_CASE("conflicting duplicate points produce a warning") {
    Eigen::MatrixXd a(2, 3), b(2, 3);
    a << 1, 0, 0, 0, 1, 0;
    b << 1, 0, 0, 0, 0, 1;
    const auto ms = make_manifold_set({a, b});
    const auto r = simulation_capacity(ms, {});
    bool warned = false;
    for (const auto& w : r.warnings)
        if (w.find("coincide") != std::string::npos) warned = true;
    CHECK(warned);
}

TEST_CASE("capacity lies between the unstructured bound and the point capacity") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ms = testing::synthetic_manifolds(15, 10, 150, 0.4 + 0.3 * seed, 2 + 2 * seed, 30 + seed);
        SimConfig cfg;
        cfg.seed = seed;
        cfg.homogeneous = true;
        const auto r = simulation_capacity(ms, cfg);
        const double lb = lower_bound_capacity(ms.sizes());
        CHECK(lb <= r.alpha_sim * 1.2);
        CHECK(r.alpha_sim <= 2.0 * 1.2);
    }
}
