#include "dlmut/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

namespace dlmut {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream) noexcept {
  return splitmix64(splitmix64(parent) ^ fnv1a(stream));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream, std::uint64_t index) noexcept {
  return splitmix64(derive_seed(parent, stream) ^ splitmix64(index + 1));
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, Rng& rng) {
  count = std::min(count, population);
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
  return picked;
}

std::vector<std::size_t> sample_from(const std::vector<std::size_t>& pool, std::size_t count, Rng& rng) {
  std::vector<std::size_t> picked;
  picked.reserve(std::min(count, pool.size()));
  std::sample(pool.begin(), pool.end(), std::back_inserter(picked), count, rng);
  return picked;
}

std::size_t selection_count(double ratio, std::size_t population) noexcept {
  if (population == 0 || !(ratio > 0.0)) return 0;
  // Guard against 0.01 * 60000 = 600.0000000000001 rounding up to 601.
  const double raw = ratio * static_cast<double>(population);
  const double nearest = std::round(raw);
  const double exact = std::abs(raw - nearest) < 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
  return std::min(population, std::max<std::size_t>(1, static_cast<std::size_t>(exact)));
}

}  // namespace dlmut
