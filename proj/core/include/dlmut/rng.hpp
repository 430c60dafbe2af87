#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dlmut {

using Rng = std::mt19937_64;

/// Derives an independent sub-seed from a parent seed and a stream name
/// (SplitMix64 over the parent mixed with FNV-1a of the name). Components
/// draw from named streams so each can be re-run in isolation.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream, std::uint64_t index) noexcept;

inline Rng make_rng(std::uint64_t parent, std::string_view stream) { return Rng(derive_seed(parent, stream)); }

/// `count` distinct values from [0, population), in increasing order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, Rng& rng);

/// Distinct elements of `pool`, in the order they appear in `pool`.
std::vector<std::size_t> sample_from(const std::vector<std::size_t>& pool, std::size_t count, Rng& rng);

/// ceil(ratio * population) clamped to population; ratio > 0 and a
/// non-empty population always selects at least one.
std::size_t selection_count(double ratio, std::size_t population) noexcept;

}  // namespace dlmut
