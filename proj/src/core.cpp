#include "selfexp/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "selfexp/errors.hpp"

namespace selfexp {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<bool> index_mask(const TokenSequence& seq, std::span<const std::size_t> idx) {
  std::vector<bool> mask(seq.size(), false);
  for (std::size_t i : idx) {
    if (i >= seq.size()) {
      throw IndexError("token index " + std::to_string(i) + " out of range for sentence of " +
                       std::to_string(seq.size()) + " tokens");
    }
    mask[i] = true;
  }
  return mask;
}

}  // namespace

TokenSequence TokenSequence::FromText(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  if (tokens.empty()) throw InvalidInput("text is empty or whitespace-only");
  TokenSequence seq;
  seq.tokens_ = std::move(tokens);
  seq.text_ = join(seq.tokens_);
  seq.source_ = std::string(text);
  return seq;
}

TokenSequence TokenSequence::FromTokens(std::vector<std::string> tokens) {
  if (tokens.empty()) throw InvalidInput("token list is empty");
  for (const auto& t : tokens) {
    if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
      throw InvalidInput("token '" + t + "' is empty or contains whitespace");
    }
  }
  TokenSequence seq;
  seq.tokens_ = std::move(tokens);
  seq.text_ = join(seq.tokens_);
  seq.source_ = seq.text_;
  return seq;
}

TokenSequence tokenize(std::string_view text) { return TokenSequence::FromText(text); }

std::string remove_words(const TokenSequence& seq, std::span<const std::size_t> drop) {
  const auto mask = index_mask(seq, drop);
  if (drop.empty()) return seq.source_text();
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (mask[i]) continue;
    if (!out.empty()) out += ' ';
    out += seq.token(i);
  }
  return out;
}

std::string keep_words(const TokenSequence& seq, std::span<const std::size_t> keep) {
  const auto mask = index_mask(seq, keep);
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!mask[i]) continue;
    if (!out.empty()) out += ' ';
    out += seq.token(i);
  }
  return out;
}

Prediction Prediction::Make(int label, double confidence) {
  if (label != 0 && label != 1) {
    throw InvalidArgument("prediction label must be 0 or 1, got " + std::to_string(label));
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw InvalidArgument("prediction confidence outside [0, 1]");
  }
  return Prediction{label, confidence};
}

PositivityScore positivity(const Prediction& pred) {
  return PositivityScore{pred.label == 1 ? pred.confidence : 1.0 - pred.confidence};
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kSelfExplanation:
      return "self_explanation";
    case Provenance::kOcclusion:
      return "occlusion";
    case Provenance::kLime:
      return "lime";
  }
  return "unknown";
}

void validate_topk(const TopKExplanation& topk, std::size_t length) {
  std::vector<bool> seen(length, false);
  for (std::size_t i : topk.indices) {
    if (i >= length) throw InvalidArgument("top-k index out of range");
    if (seen[i]) throw InvalidArgument("top-k indices are not distinct");
    seen[i] = true;
  }
}

}  // namespace selfexp
