#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace selfexp {

// Whitespace-token view of one review sentence. Every attribution indexes into
// this sequence.
class TokenSequence {
 public:
  TokenSequence() = default;

  // Throws InvalidInput when text has no non-whitespace characters.
  static TokenSequence FromText(std::string_view text);
  // Throws InvalidInput on an empty list or a token that is empty or holds
  // whitespace.
  static TokenSequence FromTokens(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  // Tokens joined with single spaces.
  const std::string& text() const { return text_; }
  // The string the sequence was tokenized from, unmodified.
  const std::string& source_text() const { return source_; }

 private:
  std::vector<std::string> tokens_;
  std::string text_;
  std::string source_;
};

TokenSequence tokenize(std::string_view text);

// Word deletion: the sentence with every index in `drop` removed, survivors
// joined by single spaces in their original order. An empty drop set returns
// source_text(). Dropping everything yields "".
std::string remove_words(const TokenSequence& seq, std::span<const std::size_t> drop);

// Complement of remove_words: only the listed indices survive (in sentence
// order, regardless of the order given).
std::string keep_words(const TokenSequence& seq, std::span<const std::size_t> keep);

struct Prediction {
  int label = 0;            // 0 = negative, 1 = positive
  double confidence = 0.0;  // in [0, 1]

  // Throws InvalidArgument when label is not 0/1 or confidence leaves [0, 1].
  static Prediction Make(int label, double confidence);

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Scalar used as f(x) by every explainer and metric: 0 = confidently negative,
// 1 = confidently positive.
struct PositivityScore {
  double value = 0.5;

  // The binary decision implied by the score.
  int label() const { return value > 0.5 ? 1 : 0; }
};

// label 1 -> confidence, label 0 -> 1 - confidence.
PositivityScore positivity(const Prediction& pred);

enum class Provenance { kSelfExplanation, kOcclusion, kLime };

std::string_view to_string(Provenance p);

struct Attribution {
  std::vector<double> scores;
  Provenance provenance = Provenance::kSelfExplanation;

  std::size_t size() const { return scores.size(); }
};

// Ordered top-k token indices, most important first. No scores.
struct TopKExplanation {
  std::vector<std::size_t> indices;

  std::size_t k() const { return indices.size(); }
};

// Throws InvalidArgument unless indices are distinct and all < length.
void validate_topk(const TopKExplanation& topk, std::size_t length);

}  // namespace selfexp
