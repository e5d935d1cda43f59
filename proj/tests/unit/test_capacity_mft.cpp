#include "doctest.h"

#include <cmath>
#include <limits>

#include "capacity_mft.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "../support/synthetic.hpp"

using namespace mg;

namespace {

// Two-point manifold c +- r|c| e. Its feasible cone in (intrinsic, centre)
// coordinates is {v1 >= r|v0|} with half-angle theta = atan(1/r), so for 2-D
// Gaussian t:
//   E dist^2(t, cone) = 3/2 - 2 theta / pi
//   E (t0^2; t outside the cone) = 1 - (theta - sin theta cos theta) / pi
// Outside the cone the anchor is an endpoint (spread r) on the two boundary
// wedges of total angle pi, and the apex combination t0/t1 on the polar wedge
// of half-angle b = pi/2 - theta, where tan b = r:
//   R^2 = (pi r^2 + 2 (r - b)) / (pi + 2 b)
ProjectedManifold segment_manifold(double r) {
    Eigen::VectorXd c(3);
    c << 1.0, 2.0, -0.5;
    Eigen::VectorXd e(3);
    e << 2.0, -1.0, 0.0;
    e.normalize();
    Eigen::MatrixXd pts(2, 3);
    pts.row(0) = (c + r * c.norm() * e).transpose();
    pts.row(1) = (c - r * c.norm() * e).transpose();
    return manifold_subspace(pts, c);
}

} // namespace

TEST_CASE("capacity contribution aggregation") {
    const std::vector<double> a{2, 2}, b{1, 3}, c{0.7};
    CHECK(capacity_contribution_aggregate(a) == doctest::Approx(2.0));
    CHECK(capacity_contribution_aggregate(b) == doctest::Approx(1.5));
    CHECK(capacity_contribution_aggregate(c) == doctest::Approx(0.7));
    CHECK_THROWS_AS(capacity_contribution_aggregate(std::vector<double>{}), Error);
    CHECK_THROWS_AS(capacity_contribution_aggregate(std::vector<double>{1.0, -1.0}), Error);
}

TEST_CASE("point manifold: zero radius and dimension, capacity 2") {
    Eigen::MatrixXd pts(1, 4);
    pts << 0.5, -1.0, 2.0, 0.1;
    const auto pm = manifold_subspace(pts, pts.row(0).transpose());
    MftConfig cfg;
    cfg.n_t = 20000;
    const auto m = mft_single_manifold(pm, cfg);
    CHECK(m.radius == 0.0);
    CHECK(m.dimension == 0.0);
    // E max(0, -t)^2 = 1/2 for standard normal t
    CHECK(m.alpha_mu == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("segment manifold matches the closed-form cone integrals") {
    for (double r : {0.25, 0.5, 1.0, 2.0}) {
        CAPTURE(r);
        const auto pm = segment_manifold(r);
        REQUIRE(pm.intrinsic_dim == 1);
        MftConfig cfg;
        cfg.n_t = 40000;
        cfg.kappa = 0.0;
        cfg.seed = 3;
        const auto m = mft_single_manifold(pm, cfg);
        const double theta = std::atan(1.0 / r);
        const double alpha = 1.0 / (1.5 - 2.0 * theta / M_PI);
        const double dim = 1.0 - (theta - std::sin(theta) * std::cos(theta)) / M_PI;
        CHECK(m.alpha_mu == doctest::Approx(alpha).epsilon(0.02));
        const double b = M_PI / 2 - theta;
        const double radius = std::sqrt((M_PI * r * r + 2.0 * (r - b)) / (M_PI + 2.0 * b));
        CHECK(m.radius == doctest::Approx(radius).epsilon(0.02));
        CHECK(m.dimension == doctest::Approx(dim).epsilon(0.02));
        CHECK(m.max_kkt_residual <= 1e-7);
    }
}

TEST_CASE("scaling intrinsic spread scales the radius and lowers capacity") {
    const auto base = testing::synthetic_manifolds(2, 20, 30, 1.0, 5, 9);
    const Eigen::MatrixXd& pts = base.manifolds[0].points;
    const Eigen::VectorXd c = pts.colwise().mean().transpose();
    MftConfig cfg;
    cfg.seed = 4;
    double prev_alpha = std::numeric_limits<double>::infinity();
    double r_small = 0.0;
    for (double s : {0.05, 0.1, 0.4, 1.0}) {
        Eigen::MatrixXd scaled = (pts.rowwise() - c.transpose()) * s;
        scaled.rowwise() += c.transpose();
        const auto m = mft_single_manifold(manifold_subspace(scaled, c), cfg);
        if (s == 0.05) r_small = m.radius;
        if (s == 0.1) CHECK(m.radius == doctest::Approx(2.0 * r_small).epsilon(0.05));
        CHECK(m.alpha_mu < prev_alpha);
        prev_alpha = m.alpha_mu;
        CHECK(m.dimension <= static_cast<double>(m.intrinsic_dim) + 1.0);
    }
}

TEST_CASE("alpha_m is the aggregate of per-manifold contributions") {
    const auto ms = testing::synthetic_manifolds(8, 15, 40, 0.6, 4, 2);
    const auto rep = mftma(ms, {});
    std::vector<double> alphas;
    double r = 0.0, d = 0.0;
    for (const auto& m : rep.per_manifold) {
        alphas.push_back(m.alpha_mu);
        r += m.radius;
        d += m.dimension;
        CHECK(m.alpha_mu > 0.0);
        CHECK(m.radius >= 0.0);
        CHECK(m.dimension <= static_cast<double>(m.intrinsic_dim) + 1.0);
        CHECK(m.n_t_used == 300);
    }
    CHECK(rep.alpha_m == capacity_contribution_aggregate(alphas));
    CHECK(rep.mean_radius == doctest::Approx(r / 8.0).epsilon(1e-12));
    CHECK(rep.mean_dimension == doctest::Approx(d / 8.0).epsilon(1e-12));
    CHECK(rep.rho_center >= 0.0);
    CHECK(rep.rho_center <= 1.0);
}

TEST_CASE("identical geometry gives equal contributions within Monte-Carlo noise") {
    // one manifold geometry, rotated into P random orientations
    const auto one = testing::synthetic_manifolds(2, 20, 50, 0.8, 6, 12);
    std::vector<Eigen::MatrixXd> blocks;
    for (std::uint64_t p = 0; p < 6; ++p)
        blocks.push_back(one.manifolds[0].points * testing::random_rotation(50, 40 + p).transpose());
    const auto ms = make_manifold_set(std::move(blocks));
    MftConfig cfg;
    cfg.center_global = false;
    const auto rep = mftma(ms, cfg);
    for (const auto& m : rep.per_manifold) {
        CHECK(m.radius == doctest::Approx(rep.per_manifold[0].radius).epsilon(0.1));
        CHECK(m.alpha_mu == doctest::Approx(rep.alpha_m).epsilon(0.1));
    }
}

TEST_CASE("report scalars are invariant under rotation and scaling") {
    const auto ms = testing::synthetic_manifolds(6, 12, 25, 0.7, 4, 21, 0.3);
    MftConfig cfg;
    cfg.seed = 17;
    const auto a = mftma(ms, cfg);
    const auto rot = testing::random_rotation(25, 5);
    for (double scale : {1.0, 3.5, 0.01}) {
        CAPTURE(scale);
        const auto b = mftma(testing::transformed(ms, rot, scale), cfg);
        CHECK(b.alpha_m == doctest::Approx(a.alpha_m).epsilon(1e-6));
        CHECK(b.mean_radius == doctest::Approx(a.mean_radius).epsilon(1e-6));
        CHECK(b.mean_dimension == doctest::Approx(a.mean_dimension).epsilon(1e-6));
        CHECK(b.rho_center == doctest::Approx(a.rho_center).epsilon(1e-6));
    }
}

TEST_CASE("mftma is deterministic for a fixed seed and varies with it") {
    const auto ms = testing::synthetic_manifolds(4, 10, 20, 0.5, 3, 6);
    MftConfig cfg;
    cfg.seed = 1;
    const auto a = mftma(ms, cfg);
    const auto b = mftma(ms, cfg);
    CHECK(a.alpha_m == b.alpha_m);
    cfg.seed = 2;
    CHECK(mftma(ms, cfg).alpha_m != a.alpha_m);
}

TEST_CASE("degenerate manifolds are reported with their label") {
    std::vector<Eigen::MatrixXd> blocks(2, Eigen::MatrixXd::Zero(3, 4));
    blocks[1].setRandom();
    auto ms = make_manifold_set(blocks, {"zero", "other"});
    MftConfig cfg;
    cfg.center_global = false;
    try {
        mftma(ms, cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateManifold);
        CHECK(std::string(e.what()).find("zero") != std::string::npos);
    }
}

TEST_CASE("all-interior samples give an unbounded contribution") {
    Eigen::MatrixXd pts(1, 2);
    pts << 1.0, 0.0;
    const auto pm = manifold_subspace(pts, pts.row(0).transpose());
    MftConfig cfg;
    cfg.n_t = 1;
    bool seen = false;
    for (std::uint64_t seed = 0; seed < 20 && !seen; ++seed) {
        cfg.seed = seed;
        const auto m = mft_single_manifold(pm, cfg);
        if (m.interior_samples == 1) {
            seen = true;
            CHECK(m.alpha_infinite);
            CHECK(std::isinf(m.alpha_mu));
        } else {
            CHECK_FALSE(m.alpha_infinite);
        }
    }
    CHECK(seen);
}

TEST_CASE("zero-count and exclusion of anchor-less samples in the dimension") {
    const auto pm = segment_manifold(0.5);
    MftConfig cfg;
    cfg.n_t = 2000;
    const auto zero = mft_single_manifold(pm, cfg);
    cfg.zero_count_dimension = false;
    const auto excl = mft_single_manifold(pm, cfg);
    const double anchored = static_cast<double>(zero.n_t_used - zero.interior_samples);
    CHECK(excl.dimension == doctest::Approx(zero.dimension * zero.n_t_used / anchored).epsilon(1e-12));
    CHECK(excl.alpha_mu == zero.alpha_mu);
}

TEST_CASE("invalid configuration") {
    MftConfig cfg;
    cfg.n_t = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.n_t = 10;
    cfg.kappa = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
