#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/model_client.hpp"
#include "selfexp/parser.hpp"
#include "selfexp/prompts.hpp"
#include "selfexp/ranking.hpp"

namespace selfexp {

// A chat model bound to one system prompt: the classifier f that explainers
// and metrics query. Predictions are memoized per input text.
class PromptedClassifier {
 public:
  // k is required for the top-k variants and forbidden otherwise.
  // parallelism bounds predict_many's worker count.
  PromptedClassifier(ChatModel& model, PromptVariant variant, std::optional<std::size_t> k = std::nullopt,
                     int parallelism = 1);

  PromptVariant variant() const { return variant_; }
  ChatModel& model() const { return model_; }

  // Raw assistant text for the review text.
  std::string respond(std::string_view text) const;
  // Parsed prediction. Throws ParseError / TransportError.
  Prediction predict(std::string_view text) const;
  // positivity(predict(text)).
  double f(std::string_view text) const { return positivity(predict(text)).value; }

  // Predictions for every text, assembled by index. Runs up to `parallelism`
  // queries at once. Throws PerturbationError naming the failed indices
  // after all queries have been attempted.
  std::vector<Prediction> predict_many(std::span<const std::string> texts) const;

  // Number of distinct texts sent to the model so far.
  std::size_t distinct_queries() const;

 private:
  ChatModel& model_;
  PromptVariant variant_;
  std::optional<std::size_t> k_;
  int parallelism_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Prediction> memo_;
};

struct ExplainerBudget {
  std::size_t perturbations_per_token = 10;
  std::uint64_t seed = 0;
};

// One model call under `variant` (k = choose_k(L) for top-k variants); the
// prediction and the explanation come from the same response.
ParsedResponse self_explain(ChatModel& model, PromptVariant variant, const TokenSequence& seq);

// a(w_i) = f(x) - f(x with token i removed). L + 1 queries.
Attribution occlusion(const PromptedClassifier& clf, const TokenSequence& seq);

// Perturbation masks of the LIME sampler: row 0 keeps every token, the other
// rows keep each token independently with probability 1/2. n_samples rows of
// seq-length 0/1 entries.
std::vector<std::vector<std::uint8_t>> lime_masks(std::size_t length, std::size_t n_samples, std::uint64_t seed);

// Least-squares fit of f on token-presence indicators (with intercept) over
// perturbations_per_token * L seeded random deletions. Scores are the slope
// coefficients. Throws InvalidArgument when the budget is below L + 1 and
// RankDeficientError when the sampled design stays singular after one resample.
Attribution lime(const PromptedClassifier& clf, const TokenSequence& seq, const ExplainerBudget& budget);

// The k most important tokens by the given ordering, seeded tie-break.
TopKExplanation topk_from(const Attribution& attr, const Prediction& pred, std::size_t k, std::uint64_t seed,
                          ImportanceOrdering ordering = ImportanceOrdering::kTowardClass);

}  // namespace selfexp
