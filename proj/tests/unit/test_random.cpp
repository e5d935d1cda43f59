#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "parallel.hpp"
#include "random.hpp"

using namespace mg;

TEST_CASE("seed derivation is deterministic and tag sensitive") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, Stream::Sampling) != derive_seed(1, Stream::Shuffle));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 1000);
    CHECK(stable_hash("pos") == 0x779b5b19564f3469ULL);
}

TEST_CASE("gaussian matrices are row prefixes of taller draws") {
    Rng a = make_rng(3), b = make_rng(3);
    const Eigen::MatrixXd small = gaussian_matrix(a, 4, 6);
    const Eigen::MatrixXd tall = gaussian_matrix(b, 9, 6);
    CHECK(tall.topRows(4) == small);
    Rng c = make_rng(4);
    const Eigen::MatrixXd big = gaussian_matrix(c, 200, 200);
    CHECK(std::abs(big.mean()) < 0.01);
    CHECK(big.array().square().mean() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(parallel_for(50, [](std::size_t i) {
        if (i == 17) throw std::runtime_error("boom");
    }), std::runtime_error);

    std::atomic<int> inner{0};
    parallel_for(4, [&](std::size_t) { parallel_for(5, [&](std::size_t) { inner++; }); });
    CHECK(inner.load() == 20);
}

TEST_CASE("MG_THREADS caps the worker count") {
    ::setenv("MG_THREADS", "1", 1);
    CHECK(thread_count() == 1);
    ::setenv("MG_THREADS", "3", 1);
    CHECK(thread_count() == 3);
    ::unsetenv("MG_THREADS");
    CHECK(thread_count() >= 1);
}
