#include "selfexp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "selfexp/errors.hpp"
#include "selfexp/random.hpp"

namespace selfexp {
namespace {

int decision(double f) { return f > 0.5 ? 1 : 0; }

void check_aligned(const TokenSequence& seq, const Attribution& attr) {
  if (attr.size() != seq.size()) {
    throw InvalidArgument("attribution has " + std::to_string(attr.size()) + " scores for a sentence of " +
                          std::to_string(seq.size()) + " tokens");
  }
}

struct Ranked {
  double f_full;
  int label;
  std::vector<std::size_t> order;
};

Ranked rank_tokens(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                   std::uint64_t seed, const MetricOptions& options) {
  check_aligned(seq, attr);
  const Prediction full = clf.predict(seq.source_text());
  return Ranked{positivity(full).value, full.label,
                importance_order(attr.scores, full.label, seed, options.ordering)};
}

std::span<const std::size_t> prefix(const std::vector<std::size_t>& order, std::size_t m) {
  return std::span<const std::size_t>(order.data(), m);
}

double mean_curve(const PromptedClassifier& clf, const TokenSequence& seq, const Ranked& r,
                  const MetricOptions& options, bool keep) {
  const auto steps = removal_steps(seq.size(), options);
  std::vector<std::string> texts;
  texts.reserve(steps.size());
  for (std::size_t m : steps) {
    texts.push_back(keep ? keep_words(seq, prefix(r.order, m)) : remove_words(seq, prefix(r.order, m)));
  }
  const auto preds = clf.predict_many(texts);
  double sum = 0.0;
  for (const auto& p : preds) sum += r.f_full - positivity(p).value;
  return sum / static_cast<double>(preds.size());
}

// Every token, most important first.
std::vector<std::size_t> full_ranking(const Explanation& e, std::size_t length,
                                      const std::vector<std::size_t>& keys) {
  if (const auto* attr = std::get_if<Attribution>(&e)) {
    std::vector<double> mag(attr->scores.size());
    std::transform(attr->scores.begin(), attr->scores.end(), mag.begin(), [](double s) { return std::fabs(s); });
    std::vector<std::size_t> order(length);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (mag[a] != mag[b]) return mag[a] > mag[b];
      return keys[a] < keys[b];
    });
    return order;
  }
  const auto& topk = std::get<TopKExplanation>(e);
  std::vector<std::size_t> order = topk.indices;
  std::vector<bool> listed(length, false);
  for (std::size_t i : order) listed[i] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < length; ++i) {
    if (!listed[i]) rest.push_back(i);
  }
  std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  order.insert(order.end(), rest.begin(), rest.end());
  return order;
}

void check_explanation(const Explanation& e, std::size_t length) {
  if (const auto* attr = std::get_if<Attribution>(&e)) {
    if (attr->size() != length) throw InvalidArgument("attribution length differs from the sentence length");
  } else {
    validate_topk(std::get<TopKExplanation>(e), length);
  }
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<std::size_t> removal_steps(std::size_t length, const MetricOptions& options) {
  if (length == 0) throw InvalidArgument("empty sentence");
  std::vector<std::size_t> steps;
  if (options.removal_fractions.empty()) {
    steps.resize(length);
    std::iota(steps.begin(), steps.end(), std::size_t{1});
    return steps;
  }
  for (double q : options.removal_fractions) {
    if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("removal fractions must lie in (0, 1]");
    const auto m = static_cast<std::size_t>(std::ceil(q * static_cast<double>(length)));
    steps.push_back(std::clamp<std::size_t>(m, 1, length));
  }
  return steps;
}

double comprehensiveness(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                         std::uint64_t seed, const MetricOptions& options) {
  const Ranked r = rank_tokens(clf, seq, attr, seed, options);
  return mean_curve(clf, seq, r, options, /*keep=*/false);
}

double sufficiency(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                   std::uint64_t seed, const MetricOptions& options) {
  const Ranked r = rank_tokens(clf, seq, attr, seed, options);
  return mean_curve(clf, seq, r, options, /*keep=*/true);
}

double df_mit(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr, std::uint64_t seed,
              const MetricOptions& options) {
  const Ranked r = rank_tokens(clf, seq, attr, seed, options);
  const double f_drop = clf.f(remove_words(seq, prefix(r.order, 1)));
  return decision(r.f_full) != decision(f_drop) ? 1.0 : 0.0;
}

double df_frac(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
               std::uint64_t seed, const MetricOptions& options) {
  const Ranked r = rank_tokens(clf, seq, attr, seed, options);
  const std::size_t L = seq.size();
  // Stops querying at the first flip.
  for (std::size_t m = 1; m <= L; ++m) {
    const double f = clf.f(remove_words(seq, prefix(r.order, m)));
    if (decision(f) != decision(r.f_full)) return static_cast<double>(m) / static_cast<double>(L);
  }
  return 1.0;
}

double rank_del(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                std::uint64_t seed, const MetricOptions& options) {
  const Ranked r = rank_tokens(clf, seq, attr, seed, options);
  const std::size_t L = seq.size();
  std::vector<std::string> texts;
  texts.reserve(L);
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t drop[] = {i};
    texts.push_back(remove_words(seq, drop));
  }
  const auto preds = clf.predict_many(texts);
  const double sign = r.label == 1 ? 1.0 : -1.0;
  std::vector<double> drops(L);
  for (std::size_t i = 0; i < L; ++i) drops[i] = sign * (r.f_full - positivity(preds[i]).value);
  const auto drop_order = descending_order(drops, derive_seed(seed, "rank_del-drops"));
  return spearman(ranks_from_order(r.order), ranks_from_order(drop_order));
}

FaithfulnessScores faithfulness(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                                std::uint64_t seed, const MetricOptions& options) {
  return FaithfulnessScores{comprehensiveness(clf, seq, attr, seed, options),
                            sufficiency(clf, seq, attr, seed, options),
                            df_mit(clf, seq, attr, seed, options),
                            df_frac(clf, seq, attr, seed, options),
                            rank_del(clf, seq, attr, seed, options)};
}

FaithfulnessAtK faithfulness_at_k(const PromptedClassifier& clf, const TokenSequence& seq,
                                  const TopKExplanation& topk) {
  validate_topk(topk, seq.size());
  if (topk.indices.empty()) throw InvalidArgument("empty top-k explanation");
  const double f_full = clf.f(seq.source_text());
  const double f_removed = clf.f(remove_words(seq, topk.indices));
  const double f_kept = clf.f(keep_words(seq, topk.indices));
  return FaithfulnessAtK{f_full - f_removed, f_full - f_kept,
                         decision(f_full) != decision(f_removed) ? 1.0 : 0.0};
}

FaithfulnessAtK faithfulness_at_k(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                                  std::size_t k, std::uint64_t seed, const MetricOptions& options) {
  check_aligned(seq, attr);
  const Prediction full = clf.predict(seq.source_text());
  return faithfulness_at_k(clf, seq, topk_from(attr, full, k, seed, options.ordering));
}

std::string_view to_string(AgreementMetric m) {
  switch (m) {
    case AgreementMetric::kFeatureAgreement:
      return "feature_agreement";
    case AgreementMetric::kRankAgreement:
      return "rank_agreement";
    case AgreementMetric::kSignAgreement:
      return "sign_agreement";
    case AgreementMetric::kSignedRankAgreement:
      return "signed_rank_agreement";
    case AgreementMetric::kRankCorrelation:
      return "rank_correlation";
    case AgreementMetric::kPairwiseRankAgreement:
      return "pairwise_rank_agreement";
  }
  return "unknown";
}

AgreementMetric parse_agreement_metric(std::string_view name) {
  for (AgreementMetric m : kAllAgreementMetrics) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown agreement metric '" + std::string(name) + "'");
}

bool needs_sign(AgreementMetric m) {
  return m == AgreementMetric::kSignAgreement || m == AgreementMetric::kSignedRankAgreement;
}

double agreement(const Explanation& a, const Explanation& b, std::size_t length, std::size_t k,
                 std::uint64_t seed, AgreementMetric metric) {
  if (length == 0) throw InvalidArgument("empty sentence");
  if (k == 0 || k > length) throw InvalidArgument("k must be in [1, sentence length]");
  check_explanation(a, length);
  check_explanation(b, length);
  if (needs_sign(metric) &&
      (std::holds_alternative<TopKExplanation>(a) || std::holds_alternative<TopKExplanation>(b))) {
    throw UnsupportedMetric(std::string(to_string(metric)) + " needs signed scores; top-k explanations have none");
  }

  const auto keys = tie_break_keys(length, seed);
  const auto order_a = full_ranking(a, length, keys);
  const auto order_b = full_ranking(b, length, keys);

  auto top = [&](const Explanation& e, const std::vector<std::size_t>& order) {
    std::size_t n = k;
    if (const auto* t = std::get_if<TopKExplanation>(&e)) n = std::min(k, t->indices.size());
    return std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  };
  const auto top_a = top(a, order_a);
  const auto top_b = top(b, order_b);
  const double kk = static_cast<double>(k);

  auto score_sign = [](const Explanation& e, std::size_t i) {
    return sign_of(std::get<Attribution>(e).scores[i]);
  };

  switch (metric) {
    case AgreementMetric::kFeatureAgreement:
    case AgreementMetric::kSignAgreement: {
      std::size_t count = 0;
      for (std::size_t i : top_a) {
        if (std::find(top_b.begin(), top_b.end(), i) == top_b.end()) continue;
        if (metric == AgreementMetric::kSignAgreement && score_sign(a, i) != score_sign(b, i)) continue;
        ++count;
      }
      return static_cast<double>(count) / kk;
    }
    case AgreementMetric::kRankAgreement:
    case AgreementMetric::kSignedRankAgreement: {
      std::size_t count = 0;
      for (std::size_t p = 0; p < std::min(top_a.size(), top_b.size()); ++p) {
        if (top_a[p] != top_b[p]) continue;
        if (metric == AgreementMetric::kSignedRankAgreement && score_sign(a, top_a[p]) != score_sign(b, top_a[p])) {
          continue;
        }
        ++count;
      }
      return static_cast<double>(count) / kk;
    }
    case AgreementMetric::kRankCorrelation:
      return spearman(ranks_from_order(order_a), ranks_from_order(order_b));
    case AgreementMetric::kPairwiseRankAgreement: {
      if (length < 2) return 1.0;
      const auto ra = ranks_from_order(order_a);
      const auto rb = ranks_from_order(order_b);
      std::size_t agree = 0;
      std::size_t total = 0;
      for (std::size_t i = 0; i < length; ++i) {
        for (std::size_t j = i + 1; j < length; ++j) {
          ++total;
          if ((ra[i] < ra[j]) == (rb[i] < rb[j])) ++agree;
        }
      }
      return static_cast<double>(agree) / static_cast<double>(total);
    }
  }
  throw InvalidArgument("unknown agreement metric");
}

AgreementScores agreement_all(const Explanation& a, const Explanation& b, std::size_t length, std::size_t k,
                              std::uint64_t seed) {
  AgreementScores s;
  s.feature_agreement = agreement(a, b, length, k, seed, AgreementMetric::kFeatureAgreement);
  s.rank_agreement = agreement(a, b, length, k, seed, AgreementMetric::kRankAgreement);
  if (std::holds_alternative<Attribution>(a) && std::holds_alternative<Attribution>(b)) {
    s.sign_agreement = agreement(a, b, length, k, seed, AgreementMetric::kSignAgreement);
    s.signed_rank_agreement = agreement(a, b, length, k, seed, AgreementMetric::kSignedRankAgreement);
  }
  s.rank_correlation = agreement(a, b, length, k, seed, AgreementMetric::kRankCorrelation);
  s.pairwise_rank_agreement = agreement(a, b, length, k, seed, AgreementMetric::kPairwiseRankAgreement);
  return s;
}

}  // namespace selfexp
