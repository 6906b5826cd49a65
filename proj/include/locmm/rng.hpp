#pragma once

#include "locmm/common.hpp"

#include <cstdint>
#include <initializer_list>

namespace locmm {

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive mix of a seed with further integers.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

// Mix of the exact bit patterns of a vector's entries.
std::uint64_t hash_vector(const Vector& v);

std::uint64_t double_bits(double x);

}  // namespace locmm
