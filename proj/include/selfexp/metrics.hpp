#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/explainers.hpp"
#include "selfexp/ranking.hpp"

namespace selfexp {

// Removal-curve schedule for comprehensiveness and sufficiency. Empty
// fractions means the full curve m = 1..L; otherwise each fraction q gives
// m = ceil(q * L) clamped to [1, L].
struct MetricOptions {
  std::vector<double> removal_fractions;
  ImportanceOrdering ordering = ImportanceOrdering::kTowardClass;
};

std::vector<std::size_t> removal_steps(std::size_t length, const MetricOptions& options);

struct FaithfulnessScores {
  double comp = 0.0;
  double suff = 0.0;
  double df_mit = 0.0;
  double df_frac = 0.0;
  double rank_del = 0.0;
};

struct FaithfulnessAtK {
  double comp_at_k = 0.0;
  double suff_at_k = 0.0;
  double df_mit_at_k = 0.0;
};

// Each metric queries f(x) for the full sentence, orders tokens by the
// attribution (toward the predicted label by default, seeded tie-break) and
// then queries the needed perturbations.

// Mean over m of f(x) - f(x without the top-m tokens).
double comprehensiveness(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                         std::uint64_t seed, const MetricOptions& options = {});
// Mean over m of f(x) - f(only the top-m tokens).
double sufficiency(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                   std::uint64_t seed, const MetricOptions& options = {});
// 1 when deleting the top token flips [f > 0.5].
double df_mit(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr, std::uint64_t seed,
              const MetricOptions& options = {});
// Fraction of tokens deleted (in importance order) at the first flip; 1 when
// the decision never flips.
double df_frac(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
               std::uint64_t seed, const MetricOptions& options = {});
// Spearman correlation between the attribution ranking and the ranking of
// single-deletion drops, both oriented toward the predicted label.
double rank_del(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                std::uint64_t seed, const MetricOptions& options = {});

FaithfulnessScores faithfulness(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                                std::uint64_t seed, const MetricOptions& options = {});

// comp@k, suff@k and DF_MIT@k for a ranked-free top-k set.
FaithfulnessAtK faithfulness_at_k(const PromptedClassifier& clf, const TokenSequence& seq,
                                  const TopKExplanation& topk);
// Same, taking the k most important tokens of a full attribution.
FaithfulnessAtK faithfulness_at_k(const PromptedClassifier& clf, const TokenSequence& seq, const Attribution& attr,
                                  std::size_t k, std::uint64_t seed, const MetricOptions& options = {});

enum class AgreementMetric {
  kFeatureAgreement,
  kRankAgreement,
  kSignAgreement,
  kSignedRankAgreement,
  kRankCorrelation,
  kPairwiseRankAgreement,
};

inline constexpr std::array<AgreementMetric, 6> kAllAgreementMetrics = {
    AgreementMetric::kFeatureAgreement,    AgreementMetric::kRankAgreement,
    AgreementMetric::kSignAgreement,       AgreementMetric::kSignedRankAgreement,
    AgreementMetric::kRankCorrelation,     AgreementMetric::kPairwiseRankAgreement};

std::string_view to_string(AgreementMetric m);
AgreementMetric parse_agreement_metric(std::string_view name);
bool needs_sign(AgreementMetric m);

using Explanation = std::variant<Attribution, TopKExplanation>;

// Agreement of two explanations of the same sentence of `length` tokens.
// Attributions are ranked by |score| with the seeded tie-break (the same keys
// for both sides); a top-k explanation ranks its listed tokens first and the
// rest by the tie-break keys. Sign metrics on a top-k explanation throw
// UnsupportedMetric.
double agreement(const Explanation& a, const Explanation& b, std::size_t length, std::size_t k,
                 std::uint64_t seed, AgreementMetric metric);

struct AgreementScores {
  double feature_agreement = 0.0;
  double rank_agreement = 0.0;
  std::optional<double> sign_agreement;
  std::optional<double> signed_rank_agreement;
  double rank_correlation = 0.0;
  double pairwise_rank_agreement = 0.0;
};

// All six; the sign metrics are empty when either side is a top-k explanation.
AgreementScores agreement_all(const Explanation& a, const Explanation& b, std::size_t length, std::size_t k,
                              std::uint64_t seed);

}  // namespace selfexp
