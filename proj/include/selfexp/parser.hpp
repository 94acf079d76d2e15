#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/prompts.hpp"

namespace selfexp {

// Response grammars (see docs/response_grammar.md):
//   attribution list  '[' (pair (',' pair)*)? ','? ']'   pair = '(' quoted ',' number ')'
//   prediction pair   '(' int ',' number ')'             (EP, PE, predict_only)
//   top-k line        word {',' word} ',' int ',' number (EP_topk)
//                     int ',' number {',' word}          (PE_topk)

struct ScoredToken {
  std::string token;
  double score = 0.0;

  friend bool operator==(const ScoredToken&, const ScoredToken&) = default;
};

struct AttributionList {
  std::vector<ScoredToken> pairs;
  std::vector<std::string> warnings;
};

// Finds the first '[' ... ']' list of (quoted token, number) tuples. Scores
// outside [-1, 1] are clamped with a warning, as is a pair whose ')' is
// missing right before the next pair or the closing ']'. Throws ParseError
// (with the byte offset) when no list is found or the list is malformed or
// truncated.
AttributionList parse_attribution_list(std::string_view text);

// Formats pairs in the grammar above, e.g. [('a', 0.5), ("'s", -0.25)].
std::string format_attribution_list(const std::vector<ScoredToken>& pairs);

struct PredictionParse {
  Prediction prediction;
  std::vector<std::string> warnings;
};

// Parenthesized (label, confidence) for EP / PE / predict_only, the bare
// comma-separated pair for the top-k variants. Without a parenthesized pair,
// a bare "label, confidence" outside the list is accepted with a warning.
// Confidence outside [0, 1] is clamped with a warning; a label outside
// {0, 1} is a ParseError.
PredictionParse parse_prediction(std::string_view text, PromptVariant variant);

struct TopKParse {
  std::vector<std::string> words;
  std::vector<std::string> warnings;
};

// Word items of a top-k response, most important first. Duplicates keep the
// first occurrence (warning); a count different from k is a warning. Zero
// words is a ParseError.
TopKParse parse_topk(std::string_view text, PromptVariant variant, std::size_t k);

struct Alignment {
  Attribution attribution;
  std::vector<std::string> warnings;
};

// Greedy in-order exact matching of parsed tokens against the sentence.
// Unmatched sentence tokens score 0; unmatched parsed tokens are dropped.
// Each mismatch adds one warning. Always returns seq.size() scores.
Alignment align(const std::vector<ScoredToken>& pairs, const TokenSequence& seq);

struct TopKAlignment {
  TopKExplanation topk;
  std::vector<std::string> warnings;
};

// Maps ranked words to token indices: each word takes the first unused
// token with the identical string. Unmatched words are dropped with a
// warning; no match at all is a ParseError.
TopKAlignment align_topk(const std::vector<std::string>& words, const TokenSequence& seq);

struct ParsedResponse {
  Prediction prediction;
  std::optional<Attribution> attribution;
  std::optional<TopKExplanation> topk;
  std::vector<std::string> alignment_warnings;
};

// Full parse of one response for the given variant and sentence.
ParsedResponse parse_response(std::string_view text, PromptVariant variant, const TokenSequence& seq,
                              std::optional<std::size_t> k = std::nullopt);

}  // namespace selfexp
