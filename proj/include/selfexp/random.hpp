#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace selfexp {

// Seeded generator with portable bounded draws. std::uniform_int_distribution
// is implementation-defined, so seeded runs would differ across standard
// libraries without this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

// Deterministic child seed from a parent seed and a label/id.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Random permutation of 0..n-1 (Fisher-Yates). Element i is the tie-break key of
// token i: among equal importances, the smaller key ranks first.
std::vector<std::size_t> tie_break_keys(std::size_t n, std::uint64_t seed);

}  // namespace selfexp
