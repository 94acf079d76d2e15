#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selfexp/core.hpp"
#include "selfexp/model_client.hpp"

namespace selfexp {

// The five system prompts. Each one is a distinct classifier: explanations
// and perturbation queries are only comparable under the same variant.
enum class PromptVariant { kExplainPredict, kPredictExplain, kExplainPredictTopK, kPredictExplainTopK, kPredictOnly };

inline constexpr std::array<PromptVariant, 5> kAllVariants = {
    PromptVariant::kExplainPredict, PromptVariant::kPredictExplain, PromptVariant::kExplainPredictTopK,
    PromptVariant::kPredictExplainTopK, PromptVariant::kPredictOnly};

// Short names used on the CLI and in reports: EP, PE, EP_topk, PE_topk, predict_only.
std::string_view to_string(PromptVariant v);
// Throws InvalidArgument for an unknown name.
PromptVariant parse_variant(std::string_view name);

bool is_topk(PromptVariant v);
// Variants whose response carries an explanation (all but predict_only).
bool is_explaining(PromptVariant v);

namespace prompts {

// Raw template text ("{k}" placeholders still in place for top-k variants).
std::string_view template_text(PromptVariant v);

// Asset file name under assets/prompts/ that the template was built from.
std::string_view asset_name(PromptVariant v);

std::string system_text(PromptVariant v, std::optional<std::size_t> k = std::nullopt);

// "<review> " + text + " <review>". Both delimiters are opening tags.
std::string user_text(std::string_view review);

// k must be given exactly when the variant is a top-k variant; otherwise
// InvalidArgument. The review text is embedded verbatim (it may be empty for a
// fully deleted perturbation).
std::vector<Message> render(PromptVariant v, std::string_view review, std::optional<std::size_t> k = std::nullopt);
std::vector<Message> render(PromptVariant v, const TokenSequence& seq, std::optional<std::size_t> k = std::nullopt);

// max(1, floor(L / 5)). L must be >= 1.
std::size_t choose_k(std::size_t length);

struct Identified {
  PromptVariant variant;
  std::optional<std::size_t> k;
};

// Recognizes a rendered system prompt, recovering k for the top-k variants.
std::optional<Identified> identify(std::string_view system_message);

// Extracts the review text from a rendered user message; nullopt if the
// message does not have the "<review> ... <review>" shape.
std::optional<std::string> extract_review(std::string_view user_message);

}  // namespace prompts
}  // namespace selfexp
