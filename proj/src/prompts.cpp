#include "selfexp/prompts.hpp"

#include <charconv>

#include "prompt_templates.hpp"
#include "selfexp/errors.hpp"

namespace selfexp {

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::kExplainPredict:
      return "EP";
    case PromptVariant::kPredictExplain:
      return "PE";
    case PromptVariant::kExplainPredictTopK:
      return "EP_topk";
    case PromptVariant::kPredictExplainTopK:
      return "PE_topk";
    case PromptVariant::kPredictOnly:
      return "predict_only";
  }
  return "unknown";
}

PromptVariant parse_variant(std::string_view name) {
  for (PromptVariant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw InvalidArgument("unknown prompt variant '" + std::string(name) +
                        "' (expected EP, PE, EP_topk, PE_topk or predict_only)");
}

bool is_topk(PromptVariant v) {
  return v == PromptVariant::kExplainPredictTopK || v == PromptVariant::kPredictExplainTopK;
}

bool is_explaining(PromptVariant v) { return v != PromptVariant::kPredictOnly; }

namespace prompts {
namespace {

constexpr std::string_view kPlaceholder = "{k}";
constexpr std::string_view kReviewTag = "<review>";

}  // namespace

std::string_view template_text(PromptVariant v) {
  switch (v) {
    case PromptVariant::kExplainPredict:
      return detail::kExplainPredictTemplate;
    case PromptVariant::kPredictExplain:
      return detail::kPredictExplainTemplate;
    case PromptVariant::kExplainPredictTopK:
      return detail::kExplainPredictTopKTemplate;
    case PromptVariant::kPredictExplainTopK:
      return detail::kPredictExplainTopKTemplate;
    case PromptVariant::kPredictOnly:
      return detail::kPredictOnlyTemplate;
  }
  return {};
}

std::string_view asset_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::kExplainPredict:
      return "ep.txt";
    case PromptVariant::kPredictExplain:
      return "pe.txt";
    case PromptVariant::kExplainPredictTopK:
      return "ep_topk.txt";
    case PromptVariant::kPredictExplainTopK:
      return "pe_topk.txt";
    case PromptVariant::kPredictOnly:
      return "predict_only.txt";
  }
  return {};
}

std::string system_text(PromptVariant v, std::optional<std::size_t> k) {
  if (is_topk(v) != k.has_value()) {
    throw InvalidArgument(std::string("variant ") + std::string(to_string(v)) +
                          (is_topk(v) ? " requires k" : " does not take k"));
  }
  if (k && *k == 0) throw InvalidArgument("k must be positive");
  std::string text(template_text(v));
  if (!k) return text;
  const std::string value = std::to_string(*k);
  for (std::size_t pos = text.find(kPlaceholder); pos != std::string::npos;
       pos = text.find(kPlaceholder, pos + value.size())) {
    text.replace(pos, kPlaceholder.size(), value);
  }
  return text;
}

std::string user_text(std::string_view review) {
  std::string out;
  out.reserve(review.size() + 2 * kReviewTag.size() + 2);
  out.append(kReviewTag).append(" ").append(review).append(" ").append(kReviewTag);
  return out;
}

std::vector<Message> render(PromptVariant v, std::string_view review, std::optional<std::size_t> k) {
  return {Message{Role::kSystem, system_text(v, k)}, Message{Role::kUser, user_text(review)}};
}

std::vector<Message> render(PromptVariant v, const TokenSequence& seq, std::optional<std::size_t> k) {
  return render(v, seq.source_text(), k);
}

std::size_t choose_k(std::size_t length) {
  if (length == 0) throw InvalidArgument("sentence length must be at least 1");
  return std::max<std::size_t>(1, length / 5);
}

std::optional<Identified> identify(std::string_view system_message) {
  for (PromptVariant v : kAllVariants) {
    if (!is_topk(v)) {
      if (system_message == template_text(v)) return Identified{v, std::nullopt};
      continue;
    }
    // The template prefix up to the first placeholder must match; the digits
    // that follow are k.
    const std::string_view tmpl = template_text(v);
    const std::size_t slot = tmpl.find(kPlaceholder);
    if (system_message.substr(0, slot) != tmpl.substr(0, slot)) continue;
    std::size_t k = 0;
    const char* first = system_message.data() + slot;
    const char* last = system_message.data() + system_message.size();
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec != std::errc() || k == 0) continue;
    if (system_message == system_text(v, k)) return Identified{v, k};
  }
  return std::nullopt;
}

std::optional<std::string> extract_review(std::string_view user_message) {
  const std::string_view open = "<review> ";
  const std::string_view close = " <review>";
  if (user_message.size() < open.size() + close.size()) return std::nullopt;
  if (!user_message.starts_with(open) || !user_message.ends_with(close)) return std::nullopt;
  return std::string(user_message.substr(open.size(), user_message.size() - open.size() - close.size()));
}

}  // namespace prompts
}  // namespace selfexp
