#include "selfexp/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "selfexp/errors.hpp"
#include "selfexp/lexicon_oracle.hpp"

namespace selfexp {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Cursor over the response text. Offsets reported in ParseError are absolute.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t pos) : text_(text), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  void skip_ws() {
    while (!done() && is_space(text_[pos_])) ++pos_;
  }
  void expect(char c, const char* what) {
    skip_ws();
    if (peek() != c) {
      throw ParseError(done() ? std::string("unexpected end of text, expected ") + what
                              : std::string("expected ") + what,
                       pos_);
    }
    ++pos_;
  }

  // Python-style quoted string. A quote only closes the string when the next
  // non-space character is ',' or ')', which tolerates unescaped apostrophes
  // such as 'don't'.
  std::string quoted() {
    skip_ws();
    const char q = peek();
    const std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (!done()) {
      char c = text_[pos_];
      if (c == '\\' && pos_ + 1 < text_.size()) {
        const char n = text_[pos_ + 1];
        switch (n) {
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          default:
            out += n;
        }
        pos_ += 2;
        continue;
      }
      if (c == q) {
        std::size_t look = pos_ + 1;
        while (look < text_.size() && is_space(text_[look])) ++look;
        if (look >= text_.size() || text_[look] == ',' || text_[look] == ')') {
          ++pos_;
          return out;
        }
      }
      out += c;
      ++pos_;
    }
    throw ParseError("unterminated quoted token", start);
  }

  // Unquoted token: everything up to the next ',' (a leading ',' is itself the
  // token), trailing spaces trimmed.
  std::string bare() {
    skip_ws();
    const std::size_t start = pos_;
    if (peek() == ',') {
      ++pos_;
      return ",";
    }
    while (!done() && text_[pos_] != ',' && text_[pos_] != ')') ++pos_;
    std::string_view tok = text_.substr(start, pos_ - start);
    while (!tok.empty() && is_space(tok.back())) tok.remove_suffix(1);
    if (tok.empty()) throw ParseError("empty token", start);
    return std::string(tok);
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    bool negative = false;
    if (peek() == '+' || peek() == '-') {
      negative = peek() == '-';
      ++pos_;
    }
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr == first) throw ParseError("expected a number", start);
    pos_ += static_cast<std::size_t>(ptr - first);
    return negative ? -value : value;
  }

 private:
  std::string_view text_;
  std::size_t pos_;
};

struct ListSpan {
  AttributionList list;
  std::size_t begin = 0;
  std::size_t end = 0;  // one past ']'
};

// True when the text at pos reads ", (" or "]": the next pair or the list end
// follows a score whose ')' is absent.
bool missing_close(std::string_view text, std::size_t pos) {
  auto next_non_space = [&](std::size_t i) {
    while (i < text.size() && is_space(text[i])) ++i;
    return i;
  };
  pos = next_non_space(pos);
  if (pos >= text.size()) return false;
  if (text[pos] == ']') return true;
  if (text[pos] != ',') return false;
  pos = next_non_space(pos + 1);
  return pos < text.size() && text[pos] == '(';
}

ListSpan parse_list_at(std::string_view text, std::size_t open) {
  ListSpan span;
  span.begin = open;
  Cursor cur(text, open + 1);
  cur.skip_ws();
  if (cur.peek() == ']') {
    span.end = cur.pos() + 1;
    return span;
  }
  while (true) {
    cur.expect('(', "'(' opening a (token, score) pair");
    cur.skip_ws();
    std::string token = (cur.peek() == '\'' || cur.peek() == '"') ? cur.quoted() : cur.bare();
    cur.expect(',', "',' after token");
    const std::size_t num_pos = cur.pos();
    double score = cur.number();
    cur.skip_ws();
    if (cur.peek() == ')') {
      cur.expect(')', "')'");
    } else if (missing_close(text, cur.pos())) {
      span.list.warnings.push_back("missing ')' after the score for '" + token + "' at offset " +
                                   std::to_string(cur.pos()) + " repaired");
    } else {
      cur.expect(')', "')' closing a pair");
    }
    if (score < -1.0 || score > 1.0) {
      span.list.warnings.push_back("score " + format_decimal(score) + " for '" + token + "' at offset " +
                                   std::to_string(num_pos) + " clamped to [-1, 1]");
      score = std::clamp(score, -1.0, 1.0);
    }
    span.list.pairs.push_back({std::move(token), score});
    cur.skip_ws();
    if (cur.peek() == ',') {
      cur.expect(',', "','");
      cur.skip_ws();
      if (cur.peek() == ']') {
        span.end = cur.pos() + 1;
        return span;
      }
      continue;
    }
    cur.expect(']', "']' closing the list");
    span.end = cur.pos();
    return span;
  }
}

std::optional<ListSpan> find_list(std::string_view text) {
  const auto open = text.find('[');
  if (open == std::string_view::npos) return std::nullopt;
  return parse_list_at(text, open);
}

std::string quote_token(const std::string& t) {
  const bool has_single = t.find('\'') != std::string::npos;
  const bool has_double = t.find('"') != std::string::npos;
  const char q = (has_single && !has_double) ? '"' : '\'';
  std::string out(1, q);
  for (char c : t) {
    if (c == '\\' || c == q) out += '\\';
    out += c;
  }
  out += q;
  return out;
}

struct RawPair {
  long label;
  double confidence;
  std::size_t offset;
};

// Every "(int, number)" group in text[begin, end).
std::vector<RawPair> find_parenthesized_pairs(std::string_view text, std::size_t begin, std::size_t end) {
  std::vector<RawPair> out;
  for (std::size_t i = begin; i < end; ++i) {
    if (text[i] != '(') continue;
    Cursor cur(text.substr(0, end), i + 1);
    try {
      cur.skip_ws();
      if (!(is_digit(cur.peek()) || cur.peek() == '-' || cur.peek() == '+')) continue;
      const double label = cur.number();
      cur.expect(',', "','");
      const double conf = cur.number();
      cur.expect(')', "')'");
      if (label != static_cast<double>(static_cast<long>(label))) continue;
      out.push_back({static_cast<long>(label), conf, i});
    } catch (const ParseError&) {
      continue;
    }
  }
  return out;
}

// Every "int, number" written without parentheses in text[begin, end), e.g.
// "Classification: 1, 0.90 confidence.".
std::vector<RawPair> find_bare_pairs(std::string_view text, std::size_t begin, std::size_t end) {
  std::vector<RawPair> out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!is_digit(text[i]) || (i > begin && (is_digit(text[i - 1]) || text[i - 1] == '.'))) continue;
    Cursor cur(text.substr(0, end), i);
    try {
      const double label = cur.number();
      if (label != static_cast<double>(static_cast<long>(label))) continue;
      cur.expect(',', "','");
      cur.skip_ws();
      if (!is_digit(cur.peek())) continue;
      const double conf = cur.number();
      out.push_back({static_cast<long>(label), conf, i});
      i = cur.pos();
    } catch (const ParseError&) {
      continue;
    }
  }
  return out;
}

std::string trim_item(std::string_view s) {
  auto strip = [](char c) { return is_space(c) || c == '(' || c == ')' || c == '[' || c == ']' || c == '\'' || c == '"'; };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && strip(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_items(std::string_view text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    std::string item = trim_item(piece);
    if (!item.empty()) items.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

std::optional<long> as_int(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_pair(const std::string& label, const std::string& conf) {
  return as_int(label).has_value() && as_number(conf).has_value();
}

PredictionParse make_prediction(long label, double conf, std::size_t offset) {
  if (label != 0 && label != 1) {
    throw ParseError("prediction label " + std::to_string(label) + " is not 0 or 1", offset);
  }
  PredictionParse out;
  if (!(conf >= 0.0 && conf <= 1.0)) {
    out.warnings.push_back("confidence " + format_decimal(conf) + " clamped to [0, 1]");
    conf = std::clamp(conf, 0.0, 1.0);
  }
  out.prediction = Prediction{static_cast<int>(label), conf};
  return out;
}

}  // namespace

AttributionList parse_attribution_list(std::string_view text) {
  auto span = find_list(text);
  if (!span) throw ParseError("no bracketed attribution list found", 0);
  return std::move(span->list);
}

std::string format_attribution_list(const std::vector<ScoredToken>& pairs) {
  std::string out = "[";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ", ";
    out += "(" + quote_token(pairs[i].token) + ", " + format_decimal(pairs[i].score) + ")";
  }
  out += "]";
  return out;
}

PredictionParse parse_prediction(std::string_view text, PromptVariant variant) {
  if (is_topk(variant)) {
    const auto items = split_items(text);
    if (items.size() >= 2) {
      const std::size_t at = variant == PromptVariant::kExplainPredictTopK ? items.size() - 2 : 0;
      if (auto label = as_int(items[at])) {
        if (auto conf = as_number(items[at + 1])) return make_prediction(*label, *conf, 0);
      }
    }
    throw ParseError("no comma-separated (label, confidence) pair found", 0);
  }

  // Pairs inside the attribution list are excluded.
  std::vector<RawPair> pairs;
  std::optional<ListSpan> list;
  try {
    list = find_list(text);
  } catch (const ParseError&) {
    list.reset();
  }
  if (list) {
    pairs = find_parenthesized_pairs(text, 0, list->begin);
    auto after = find_parenthesized_pairs(text, list->end, text.size());
    pairs.insert(pairs.end(), after.begin(), after.end());
  } else {
    pairs = find_parenthesized_pairs(text, 0, text.size());
  }
  std::vector<std::string> warnings;
  if (pairs.empty()) {
    if (list) {
      pairs = find_bare_pairs(text, 0, list->begin);
      auto after = find_bare_pairs(text, list->end, text.size());
      pairs.insert(pairs.end(), after.begin(), after.end());
    } else {
      pairs = find_bare_pairs(text, 0, text.size());
    }
    if (pairs.empty()) throw ParseError("no (label, confidence) pair found", 0);
    warnings.push_back("prediction pair without parentheses at offset " + std::to_string(pairs.front().offset));
  }
  const RawPair& chosen = variant == PromptVariant::kExplainPredict ? pairs.back() : pairs.front();
  auto out = make_prediction(chosen.label, chosen.confidence, chosen.offset);
  out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

TopKParse parse_topk(std::string_view text, PromptVariant variant, std::size_t k) {
  if (!is_topk(variant)) throw InvalidArgument("parse_topk needs a top-k variant");
  auto items = split_items(text);
  if (items.size() >= 2) {
    if (variant == PromptVariant::kExplainPredictTopK && is_pair(items[items.size() - 2], items.back())) {
      items.resize(items.size() - 2);
    } else if (variant == PromptVariant::kPredictExplainTopK && is_pair(items[0], items[1])) {
      items.erase(items.begin(), items.begin() + 2);
    }
  }
  TopKParse out;
  std::set<std::string> seen;
  for (auto& w : items) {
    if (!seen.insert(w).second) {
      out.warnings.push_back("duplicate top-k word '" + w + "' dropped");
      continue;
    }
    out.words.push_back(std::move(w));
  }
  if (out.words.empty()) throw ParseError("top-k response lists no words", 0);
  if (out.words.size() != k) {
    out.warnings.push_back("expected " + std::to_string(k) + " top-k words, got " +
                           std::to_string(out.words.size()));
  }
  return out;
}

Alignment align(const std::vector<ScoredToken>& pairs, const TokenSequence& seq) {
  Alignment out;
  out.attribution.provenance = Provenance::kSelfExplanation;
  out.attribution.scores.assign(seq.size(), 0.0);
  std::size_t next = 0;
  for (const auto& p : pairs) {
    std::size_t j = next;
    while (j < seq.size() && seq.token(j) != p.token) ++j;
    if (j == seq.size()) {
      out.warnings.push_back("response token '" + p.token + "' not found in the review; dropped");
      continue;
    }
    for (std::size_t s = next; s < j; ++s) {
      out.warnings.push_back("review token " + std::to_string(s) + " '" + seq.token(s) +
                             "' missing from the response; scored 0");
    }
    out.attribution.scores[j] = p.score;
    next = j + 1;
  }
  for (std::size_t s = next; s < seq.size(); ++s) {
    out.warnings.push_back("review token " + std::to_string(s) + " '" + seq.token(s) +
                           "' missing from the response; scored 0");
  }
  return out;
}

TopKAlignment align_topk(const std::vector<std::string>& words, const TokenSequence& seq) {
  TopKAlignment out;
  std::vector<bool> used(seq.size(), false);
  for (const auto& w : words) {
    bool matched = false;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (!used[i] && seq.token(i) == w) {
        used[i] = true;
        out.topk.indices.push_back(i);
        matched = true;
        break;
      }
    }
    if (!matched) out.warnings.push_back("top-k word '" + w + "' not found in the review; dropped");
  }
  if (out.topk.indices.empty()) throw ParseError("no top-k word matches a review token", 0);
  return out;
}

ParsedResponse parse_response(std::string_view text, PromptVariant variant, const TokenSequence& seq,
                              std::optional<std::size_t> k) {
  ParsedResponse out;
  auto pred = parse_prediction(text, variant);
  out.prediction = pred.prediction;
  out.alignment_warnings = std::move(pred.warnings);
  auto append = [&](std::vector<std::string>& w) {
    out.alignment_warnings.insert(out.alignment_warnings.end(), w.begin(), w.end());
  };

  switch (variant) {
    case PromptVariant::kExplainPredict:
    case PromptVariant::kPredictExplain: {
      auto list = parse_attribution_list(text);
      append(list.warnings);
      auto aligned = align(list.pairs, seq);
      append(aligned.warnings);
      out.attribution = std::move(aligned.attribution);
      break;
    }
    case PromptVariant::kExplainPredictTopK:
    case PromptVariant::kPredictExplainTopK: {
      if (!k) throw InvalidArgument("top-k response parsing needs k");
      auto words = parse_topk(text, variant, *k);
      append(words.warnings);
      auto aligned = align_topk(words.words, seq);
      append(aligned.warnings);
      out.topk = std::move(aligned.topk);
      break;
    }
    case PromptVariant::kPredictOnly:
      break;
  }
  return out;
}

}  // namespace selfexp
