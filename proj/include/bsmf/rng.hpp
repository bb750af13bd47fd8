#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bsmf {

/// Random stream used by every sampler. One independent stream per trial.
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a base seed and a list of coordinates
/// (e.g. rho index, phi index, trial). Distinct coordinates give
/// statistically unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept;

}  // namespace bsmf
