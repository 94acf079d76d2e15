#pragma once

#include <string_view>

namespace selfexp::prompts::detail {

// System-prompt texts; the top-k templates carry "{k}" at both count slots.
extern const std::string_view kExplainPredictTemplate;
extern const std::string_view kPredictExplainTemplate;
extern const std::string_view kExplainPredictTopKTemplate;
extern const std::string_view kPredictExplainTopKTemplate;
extern const std::string_view kPredictOnlyTemplate;

}  // namespace selfexp::prompts::detail
