#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace efos {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Named sub-stream of a root seed ("generator", "undersample", "forest", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept;
/// Indexed sub-stream (per tree, per year, per feature).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

}  // namespace efos
