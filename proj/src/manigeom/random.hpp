#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace mg {

// Counter-based seed derivation. Every random stream in the library is keyed
// by (seed, stream tags...) so results never depend on execution order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, Tags... tags) noexcept {
    ((seed = mix_seed(seed, static_cast<std::uint64_t>(tags))), ...);
    return seed;
}

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s) noexcept;

using Rng = std::mt19937_64;

// Stream tags keep independent uses of one user seed apart.
enum class Stream : std::uint64_t {
    Sampling = 0x5a4d,
    Shuffle,
    Subsample,
    Projection,
    Dichotomy,
    MftSamples,
    Split,
};

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// rows x cols matrix of i.i.d. standard normals, filled row by row so that
// the first k rows of a taller draw equal a k-row draw from the same engine.
Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);

Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n);

} // namespace mg
