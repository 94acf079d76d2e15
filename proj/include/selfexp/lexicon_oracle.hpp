#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/model_client.hpp"

namespace selfexp {

// Deterministic linear sentiment model over token presence:
//   p(x) = clamp(bias + sum over tokens t in x of weight(t), 0, 1).
// With weights that keep p inside [0, 1] the model is exactly linear, so the
// occlusion and LIME attributions of it are known in closed form.
class LexiconOracle {
 public:
  using Weights = std::map<std::string, double, std::less<>>;

  LexiconOracle() = default;
  explicit LexiconOracle(Weights weights, double bias = 0.5);

  // token<TAB>weight lines; '#' comments and blank lines are skipped.
  static LexiconOracle FromFile(const std::filesystem::path& path, double bias = 0.5);
  // Small general-purpose sentiment lexicon with dyadic weights.
  static LexiconOracle BuiltIn(double bias = 0.5);

  double weight(std::string_view token) const;
  double bias() const { return bias_; }
  const Weights& weights() const { return weights_; }

  // bias + sum of weights, before clamping.
  double raw_score(std::span<const std::string> tokens) const;
  double score(std::span<const std::string> tokens) const;
  double score_text(std::string_view text) const;

  // The oracle's prediction pair: label 1 with confidence p when p > 0.5,
  // otherwise label 0 with confidence 1 - p.
  Prediction predict(std::span<const std::string> tokens) const;

 private:
  Weights weights_;
  double bias_ = 0.5;
};

// Ground-truth explanation of the oracle: score_i = weight(token_i). Throws
// OracleSaturatedError when the clamp is active on seq or on any
// single-deletion perturbation of it.
Attribution oracle_attribution(const LexiconOracle& oracle, const TokenSequence& seq);

// ChatModel face of the oracle. It recognizes which of the five system
// prompts it was given and answers in that prompt's output grammar, with the
// lexicon weights as its self-explanation.
class OracleChatModel : public ChatModel {
 public:
  explicit OracleChatModel(LexiconOracle oracle, std::string model_name = "lexicon-oracle");

  std::string_view model_name() const override { return model_name_; }
  const LexiconOracle& oracle() const { return oracle_; }

 protected:
  std::string do_complete(std::span<const Message> messages) override;

 private:
  LexiconOracle oracle_;
  std::string model_name_;
};

// Shortest decimal that round-trips to the same double.
std::string format_decimal(double value);

}  // namespace selfexp
