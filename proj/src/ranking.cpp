#include "selfexp/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "selfexp/errors.hpp"
#include "selfexp/random.hpp"

namespace selfexp {

std::string_view to_string(ImportanceOrdering o) {
  switch (o) {
    case ImportanceOrdering::kTowardClass:
      return "toward_class";
    case ImportanceOrdering::kSigned:
      return "signed";
    case ImportanceOrdering::kAbsolute:
      return "absolute";
  }
  return "unknown";
}

ImportanceOrdering parse_ordering(std::string_view name) {
  if (name == "toward_class") return ImportanceOrdering::kTowardClass;
  if (name == "signed") return ImportanceOrdering::kSigned;
  if (name == "absolute") return ImportanceOrdering::kAbsolute;
  throw InvalidArgument("unknown importance ordering '" + std::string(name) + "'");
}

std::vector<double> importance_values(std::span<const double> scores, int label, ImportanceOrdering ordering) {
  std::vector<double> v(scores.begin(), scores.end());
  switch (ordering) {
    case ImportanceOrdering::kTowardClass:
      if (label == 0) {
        for (double& x : v) x = -x;
      }
      break;
    case ImportanceOrdering::kSigned:
      break;
    case ImportanceOrdering::kAbsolute:
      for (double& x : v) x = std::fabs(x);
      break;
  }
  return v;
}

std::vector<std::size_t> descending_order(std::span<const double> values, std::uint64_t seed) {
  const auto keys = tie_break_keys(values.size(), seed);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return keys[a] < keys[b];
  });
  return order;
}

std::vector<std::size_t> importance_order(std::span<const double> scores, int label, std::uint64_t seed,
                                          ImportanceOrdering ordering) {
  const auto values = importance_values(scores, label, ordering);
  return descending_order(values, seed);
}

std::vector<std::size_t> ranks_from_order(std::span<const std::size_t> order) {
  std::vector<std::size_t> rank(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) rank[order[p]] = p;
  return rank;
}

double spearman(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b) {
  if (rank_a.size() != rank_b.size()) throw InvalidArgument("rankings differ in length");
  const std::size_t n = rank_a.size();
  if (n == 0) throw InvalidArgument("spearman of empty rankings");
  if (n == 1) return 1.0;
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(rank_a[i]) - static_cast<double>(rank_b[i]);
    d2 += d * d;
  }
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace selfexp
