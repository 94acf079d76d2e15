#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace selfexp {

// How attribution scores become an importance ranking.
//   kTowardClass: score when the predicted label is 1, -score when it is 0
//   kSigned:      score as is
//   kAbsolute:    |score|
enum class ImportanceOrdering { kTowardClass, kSigned, kAbsolute };

std::string_view to_string(ImportanceOrdering o);
ImportanceOrdering parse_ordering(std::string_view name);

// Per-token importance value under the given ordering.
std::vector<double> importance_values(std::span<const double> scores, int label, ImportanceOrdering ordering);

// Token indices, most important first. Equal importances are ordered by the
// seeded tie-break keys, so every tie is broken at random but reproducibly.
std::vector<std::size_t> importance_order(std::span<const double> scores, int label, std::uint64_t seed,
                                          ImportanceOrdering ordering = ImportanceOrdering::kTowardClass);

// Indices sorted by descending value with seeded random tie-breaking.
std::vector<std::size_t> descending_order(std::span<const double> values, std::uint64_t seed);

// rank[order[p]] = p.
std::vector<std::size_t> ranks_from_order(std::span<const std::size_t> order);

// Spearman correlation of two tie-free rankings of the same n items:
// 1 - 6 sum d^2 / (n (n^2 - 1)). Defined as 1 for n = 1.
double spearman(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b);

}  // namespace selfexp
