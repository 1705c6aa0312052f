#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace retune {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Named sub-seed: every subsystem draws from `derive_seed(user_seed, "name")`
/// so partial pipelines reproduce the same streams.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace retune
