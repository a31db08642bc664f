#pragma once

#include <array>
#include <cstdint>

namespace harmsec {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Two independent standard normals for (seed, path, step, block).
std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t block);

}  // namespace harmsec
