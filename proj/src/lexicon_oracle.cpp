#include "selfexp/lexicon_oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "selfexp/errors.hpp"
#include "selfexp/parser.hpp"
#include "selfexp/prompts.hpp"

namespace selfexp {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string format_pair(const Prediction& p) {
  return "(" + std::to_string(p.label) + ", " + format_decimal(p.confidence) + ")";
}

std::string format_bare_pair(const Prediction& p) {
  return std::to_string(p.label) + ", " + format_decimal(p.confidence);
}

}  // namespace

std::string format_decimal(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  std::string out(buf, ptr);
  // Keep a decimal point so the text reads as a float in every grammar.
  if (out.find_first_of(".eE") == std::string::npos && out.find("nan") == std::string::npos &&
      out.find("inf") == std::string::npos) {
    out += ".0";
  }
  return out;
}

LexiconOracle::LexiconOracle(Weights weights, double bias) : weights_(std::move(weights)), bias_(bias) {}

LexiconOracle LexiconOracle::FromFile(const std::filesystem::path& path, double bias) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon file: " + path.string());
  Weights weights;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw LoadError("expected token<TAB>weight", line_no);
    double w = 0.0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, w);
    if (ec != std::errc() || ptr != last) throw LoadError("unparseable weight", line_no);
    weights[line.substr(0, tab)] = w;
  }
  return LexiconOracle(std::move(weights), bias);
}

LexiconOracle LexiconOracle::BuiltIn(double bias) {
  // Multiples of 1/16, so sums of a handful of them are exact in binary.
  Weights w = {
      {"amazing", 0.25},      {"beautiful", 0.1875},  {"best", 0.25},        {"brilliant", 0.25},
      {"charming", 0.1875},   {"delight", 0.1875},    {"enjoyable", 0.1875}, {"excellent", 0.25},
      {"fantastic", 0.25},    {"fun", 0.125},         {"funny", 0.125},      {"good", 0.125},
      {"great", 0.1875},      {"greatest", 0.25},     {"love", 0.1875},      {"masterpiece", 0.3125},
      {"memorable", 0.1875},  {"moving", 0.125},      {"perfect", 0.25},     {"powerful", 0.1875},
      {"rare", 0.0625},       {"smart", 0.125},       {"superb", 0.25},      {"wonderful", 0.25},
      {"awful", -0.25},       {"bad", -0.1875},       {"boring", -0.1875},   {"confusing", -0.125},
      {"dull", -0.1875},      {"fails", -0.1875},     {"hideous", -0.25},    {"lifeless", -0.1875},
      {"mess", -0.1875},      {"never", -0.0625},     {"not", -0.125},       {"poor", -0.1875},
      {"stupid", -0.1875},    {"terrible", -0.25},    {"tedious", -0.1875},  {"waste", -0.25},
      {"worst", -0.3125},     {"weak", -0.125},
  };
  return LexiconOracle(std::move(w), bias);
}

double LexiconOracle::weight(std::string_view token) const {
  auto it = weights_.find(token);
  return it == weights_.end() ? 0.0 : it->second;
}

double LexiconOracle::raw_score(std::span<const std::string> tokens) const {
  double s = bias_;
  for (const auto& t : tokens) s += weight(t);
  return s;
}

double LexiconOracle::score(std::span<const std::string> tokens) const { return clamp01(raw_score(tokens)); }

double LexiconOracle::score_text(std::string_view text) const {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return clamp01(bias_);
  const TokenSequence seq = tokenize(text);
  return score(seq.tokens());
}

Prediction LexiconOracle::predict(std::span<const std::string> tokens) const {
  const double p = score(tokens);
  return p > 0.5 ? Prediction{1, p} : Prediction{0, 1.0 - p};
}

Attribution oracle_attribution(const LexiconOracle& oracle, const TokenSequence& seq) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  std::vector<std::string> tokens = seq.tokens();
  if (!in_range(oracle.raw_score(tokens))) {
    throw OracleSaturatedError("oracle clamp active on '" + seq.text() + "'");
  }
  Attribution attr;
  attr.provenance = Provenance::kOcclusion;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::vector<std::string> rest;
    rest.reserve(tokens.size() - 1);
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (j != i) rest.push_back(tokens[j]);
    }
    if (!in_range(oracle.raw_score(rest))) {
      throw OracleSaturatedError("oracle clamp active after deleting token " + std::to_string(i));
    }
    attr.scores.push_back(oracle.weight(tokens[i]));
  }
  return attr;
}

OracleChatModel::OracleChatModel(LexiconOracle oracle, std::string model_name)
    : oracle_(std::move(oracle)), model_name_(std::move(model_name)) {}

std::string OracleChatModel::do_complete(std::span<const Message> messages) {
  const auto id = prompts::identify(messages.front().content);
  if (!id) throw InvalidArgument("oracle does not recognize the system prompt");
  const auto review = prompts::extract_review(messages.back().content);
  if (!review) throw InvalidArgument("oracle expects the review wrapped in <review> tags");

  std::vector<std::string> tokens;
  if (review->find_first_not_of(" \t\r\n") != std::string::npos) tokens = tokenize(*review).tokens();
  const Prediction pred = oracle_.predict(tokens);

  auto attribution_list = [&] {
    std::vector<ScoredToken> pairs;
    for (const auto& t : tokens) pairs.push_back({t, std::clamp(oracle_.weight(t), -1.0, 1.0)});
    return format_attribution_list(pairs);
  };
  auto topk_words = [&](std::size_t k) {
    // Toward-class weight descending, position ascending on ties; distinct
    // strings only, and never a token that would break the comma list.
    const double sign = pred.label == 1 ? 1.0 : -1.0;
    std::vector<std::size_t> order(tokens.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sign * oracle_.weight(tokens[a]) > sign * oracle_.weight(tokens[b]);
    });
    std::vector<std::string> words;
    std::set<std::string> used;
    for (std::size_t i : order) {
      if (words.size() == k) break;
      const auto& t = tokens[i];
      if (t.find(',') != std::string::npos || !used.insert(t).second) continue;
      words.push_back(t);
    }
    std::string out;
    for (const auto& w : words) out += w + ", ";
    return out;
  };

  switch (id->variant) {
    case PromptVariant::kExplainPredict:
      return attribution_list() + "\n" + format_pair(pred);
    case PromptVariant::kPredictExplain:
      return format_pair(pred) + "\n" + attribution_list();
    case PromptVariant::kPredictOnly:
      return format_pair(pred);
    case PromptVariant::kExplainPredictTopK:
      return topk_words(*id->k) + format_bare_pair(pred);
    case PromptVariant::kPredictExplainTopK: {
      std::string words = topk_words(*id->k);
      if (!words.empty()) words.resize(words.size() - 2);
      return format_bare_pair(pred) + (words.empty() ? "" : ", " + words);
    }
  }
  throw InvalidArgument("unsupported prompt variant");
}

}  // namespace selfexp
