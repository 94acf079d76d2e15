#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/lexicon_oracle.hpp"
#include "selfexp/metrics.hpp"
#include "selfexp/model_client.hpp"
#include "selfexp/random.hpp"

namespace selfexp::testing {

// ChatModel whose reply is computed by a function of the request.
class ScriptedModel : public ChatModel {
 public:
  using Reply = std::function<std::string(std::span<const Message>)>;
  explicit ScriptedModel(Reply reply, std::string name = "scripted") : reply_(std::move(reply)), name_(std::move(name)) {}
  std::string_view model_name() const override { return name_; }
  std::size_t calls() const { return calls_; }

 protected:
  std::string do_complete(std::span<const Message> messages) override {
    ++calls_;
    return reply_(messages);
  }

 private:
  Reply reply_;
  std::string name_;
  std::atomic<std::size_t> calls_{0};
};

// Review text of the user message "<review> ... <review>".
std::string review_of(std::span<const Message> messages);

struct OracleCase {
  LexiconOracle oracle;
  TokenSequence seq;
};

// Random sentence of 1..max_len tokens over a small vocabulary, with weights
// that are multiples of 1/denominator in [-max_units, max_units]/denominator.
OracleCase random_case(Rng& rng, std::size_t min_len, std::size_t max_len, int max_units, int denominator);

// Random sentence whose every token subset scores inside [0, 1], so the
// oracle is exactly linear on all perturbations.
OracleCase clamp_free_case(Rng& rng, std::size_t max_len);

// Random attribution scores on a coarse dyadic grid (ties are common).
std::vector<double> random_scores(Rng& rng, std::size_t n);

// Least squares via the normal equations (X^T X) b = X^T y, solved by Gauss
// elimination with partial pivoting. X gets an intercept column prepended;
// returns the slopes only.
std::vector<double> normal_equation_slopes(const std::vector<std::vector<std::uint8_t>>& masks,
                                           const std::vector<double>& y);

// Enumeration-based faithfulness reference over every token subset of a
// sentence scored by the lexicon oracle.
class BruteForce {
 public:
  BruteForce(const LexiconOracle& oracle, const TokenSequence& seq);

  // Positivity of the sentence keeping exactly the tokens whose bit is set.
  double f(std::uint32_t kept) const { return table_[kept]; }
  std::uint32_t all() const { return (1u << length_) - 1; }
  int label() const { return f(all()) > 0.5 ? 1 : 0; }

  // Indices, most important toward the class first; ties by tie_break_keys.
  std::vector<std::size_t> ranking(const std::vector<double>& scores, std::uint64_t seed) const;

  FaithfulnessScores metrics(const std::vector<double>& scores, std::uint64_t seed) const;
  FaithfulnessAtK at_k(const std::vector<std::size_t>& indices) const;

 private:
  std::size_t length_;
  std::vector<double> table_;
};

// Verbatim assistant outputs and their reviews.
struct Transcript {
  std::string review;
  std::string response;
};
extern const Transcript kExplainPredictTranscript;
extern const Transcript kPredictExplainTranscript;
extern const Transcript kExplainPredictTopKTranscript;
extern const Transcript kPredictExplainTopKTranscript;
// Few-shot conversation replies: "Classification: l, c confidence. [...]".
extern const std::vector<Transcript> kFewShotTranscripts;

struct ExpectedPairs {
  std::vector<std::string> tokens;
  std::vector<double> scores;
  Prediction prediction;
};
extern const ExpectedPairs kExplainPredictExpected;
extern const ExpectedPairs kPredictExplainExpected;
extern const std::vector<ExpectedPairs> kFewShotExpected;

}  // namespace selfexp::testing
