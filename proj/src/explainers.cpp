#include "selfexp/explainers.hpp"

#include <Eigen/Dense>

#include <exception>
#include <numeric>

#include "parallel.hpp"
#include "selfexp/errors.hpp"
#include "selfexp/random.hpp"

namespace selfexp {

PromptedClassifier::PromptedClassifier(ChatModel& model, PromptVariant variant, std::optional<std::size_t> k,
                                       int parallelism)
    : model_(model), variant_(variant), k_(k), parallelism_(parallelism) {
  if (is_topk(variant) != k.has_value()) {
    throw InvalidArgument("k must be given exactly for the top-k variants");
  }
}

std::string PromptedClassifier::respond(std::string_view text) const {
  const auto messages = prompts::render(variant_, text, k_);
  return model_.complete(messages);
}

Prediction PromptedClassifier::predict(std::string_view text) const {
  const std::string key(text);
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const Prediction p = parse_prediction(respond(text), variant_).prediction;
  std::lock_guard lock(mu_);
  memo_.emplace(key, p);
  return p;
}

std::vector<Prediction> PromptedClassifier::predict_many(std::span<const std::string> texts) const {
  std::vector<Prediction> out(texts.size());
  std::vector<std::exception_ptr> errors(texts.size());
  detail::parallel_for(texts.size(), parallelism_, [&](std::size_t i) {
    try {
      out[i] = predict(texts[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  std::vector<std::size_t> failed;
  std::string first_message;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    if (failed.empty()) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        first_message = e.what();
      }
    }
    failed.push_back(i);
  }
  if (!failed.empty()) {
    std::string message = std::to_string(failed.size()) + " of " + std::to_string(texts.size()) +
                          " perturbation queries failed; first (#" + std::to_string(failed.front()) +
                          "): " + first_message;
    throw PerturbationError(std::move(message), std::move(failed));
  }
  return out;
}

std::size_t PromptedClassifier::distinct_queries() const {
  std::lock_guard lock(mu_);
  return memo_.size();
}

ParsedResponse self_explain(ChatModel& model, PromptVariant variant, const TokenSequence& seq) {
  if (!is_explaining(variant)) throw InvalidArgument("predict_only does not produce an explanation");
  std::optional<std::size_t> k;
  if (is_topk(variant)) k = prompts::choose_k(seq.size());
  const std::string response = model.complete(prompts::render(variant, seq, k));
  return parse_response(response, variant, seq, k);
}

Attribution occlusion(const PromptedClassifier& clf, const TokenSequence& seq) {
  // Index 0 is the full sentence, index i + 1 drops token i.
  std::vector<std::string> texts;
  texts.reserve(seq.size() + 1);
  texts.push_back(seq.source_text());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::size_t drop[] = {i};
    texts.push_back(remove_words(seq, drop));
  }
  const auto preds = clf.predict_many(texts);
  const double base = positivity(preds[0]).value;
  Attribution attr;
  attr.provenance = Provenance::kOcclusion;
  attr.scores.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) attr.scores.push_back(base - positivity(preds[i + 1]).value);
  return attr;
}

std::vector<std::vector<std::uint8_t>> lime_masks(std::size_t length, std::size_t n_samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::uint8_t>> masks(n_samples, std::vector<std::uint8_t>(length, 1));
  for (std::size_t s = 1; s < n_samples; ++s) {
    for (std::size_t j = 0; j < length; ++j) masks[s][j] = rng.coin() ? 1 : 0;
  }
  return masks;
}

Attribution lime(const PromptedClassifier& clf, const TokenSequence& seq, const ExplainerBudget& budget) {
  const std::size_t L = seq.size();
  const std::size_t n = budget.perturbations_per_token * L;
  if (n < L + 1) {
    throw InvalidArgument("LIME budget of " + std::to_string(n) + " perturbations is below L + 1 = " +
                          std::to_string(L + 1));
  }

  auto design_for = [&](const std::vector<std::vector<std::uint8_t>>& masks) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L + 1));
    for (std::size_t s = 0; s < n; ++s) {
      x(static_cast<Eigen::Index>(s), 0) = 1.0;
      for (std::size_t j = 0; j < L; ++j) {
        x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j + 1)) = masks[s][j];
      }
    }
    return x;
  };

  auto masks = lime_masks(L, n, budget.seed);
  Eigen::MatrixXd x = design_for(masks);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < static_cast<Eigen::Index>(L + 1)) {
    masks = lime_masks(L, n, derive_seed(budget.seed, "lime-resample"));
    x = design_for(masks);
    qr.compute(x);
    if (qr.rank() < static_cast<Eigen::Index>(L + 1)) {
      throw RankDeficientError("LIME design matrix is rank deficient after resampling (L = " +
                               std::to_string(L) + ", N = " + std::to_string(n) + ")");
    }
  }

  std::vector<std::string> texts;
  texts.reserve(n);
  for (const auto& m : masks) {
    std::vector<std::size_t> drop;
    for (std::size_t j = 0; j < L; ++j) {
      if (!m[j]) drop.push_back(j);
    }
    texts.push_back(remove_words(seq, drop));
  }
  const auto preds = clf.predict_many(texts);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) y(static_cast<Eigen::Index>(s)) = positivity(preds[s]).value;

  const Eigen::VectorXd coef = qr.solve(y);
  Attribution attr;
  attr.provenance = Provenance::kLime;
  attr.scores.reserve(L);
  for (std::size_t j = 0; j < L; ++j) attr.scores.push_back(coef(static_cast<Eigen::Index>(j + 1)));
  return attr;
}

TopKExplanation topk_from(const Attribution& attr, const Prediction& pred, std::size_t k, std::uint64_t seed,
                          ImportanceOrdering ordering) {
  if (k == 0 || k > attr.size()) {
    throw InvalidArgument("k = " + std::to_string(k) + " must be in [1, " + std::to_string(attr.size()) + "]");
  }
  auto order = importance_order(attr.scores, pred.label, seed, ordering);
  order.resize(k);
  return TopKExplanation{std::move(order)};
}

}  // namespace selfexp
