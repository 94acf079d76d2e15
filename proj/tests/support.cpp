#include "support.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "selfexp/prompts.hpp"

namespace selfexp::testing {

std::string review_of(std::span<const Message> messages) {
  const auto review = prompts::extract_review(messages.back().content);
  if (!review) throw std::runtime_error("no review in request");
  return *review;
}

OracleCase random_case(Rng& rng, std::size_t min_len, std::size_t max_len, int max_units, int denominator) {
  static const char* kVocab[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
                                 "golf",  "hotel", "india",   "juliet", "kilo", "lima"};
  LexiconOracle::Weights weights;
  for (const char* w : kVocab) {
    const auto units = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * max_units + 1))) - max_units;
    weights.emplace(w, static_cast<double>(units) / denominator);
  }
  const std::size_t len = min_len + rng.below(max_len - min_len + 1);
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < len; ++i) tokens.emplace_back(kVocab[rng.below(std::size(kVocab))]);
  return OracleCase{LexiconOracle(std::move(weights), 0.5), TokenSequence::FromTokens(std::move(tokens))};
}

OracleCase clamp_free_case(Rng& rng, std::size_t max_len) {
  // 12 tokens of at most 8/256 each stay within 0.5 of the bias.
  return random_case(rng, 1, max_len, 8, 256);
}

std::vector<double> random_scores(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& s : out) s = (static_cast<double>(rng.below(9)) - 4.0) / 4.0;
  return out;
}

std::vector<double> normal_equation_slopes(const std::vector<std::vector<std::uint8_t>>& masks,
                                           const std::vector<double>& y) {
  const std::size_t p = masks.front().size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < masks.size(); ++r) {
    std::vector<double> x(p, 1.0);
    for (std::size_t j = 1; j < p; ++j) x[j] = masks[r][j - 1];
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += x[i] * x[j];
      a[i][p] += x[i] * y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (std::fabs(a[piv][c]) < 1e-12) throw std::runtime_error("singular normal equations");
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double m = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= p; ++j) a[r][j] -= m * a[c][j];
    }
  }
  std::vector<double> slopes(p - 1);
  for (std::size_t j = 1; j < p; ++j) slopes[j - 1] = a[j][p] / a[j][j];
  return slopes;
}

BruteForce::BruteForce(const LexiconOracle& oracle, const TokenSequence& seq) : length_(seq.size()) {
  if (length_ > 20) throw std::runtime_error("too long to enumerate");
  table_.resize(std::size_t{1} << length_);
  for (std::uint32_t kept = 0; kept < table_.size(); ++kept) {
    double raw = oracle.bias();
    for (std::size_t i = 0; i < length_; ++i) {
      if (kept & (1u << i)) raw += oracle.weight(seq.token(i));
    }
    table_[kept] = std::min(1.0, std::max(0.0, raw));
  }
}

std::vector<std::size_t> BruteForce::ranking(const std::vector<double>& scores, std::uint64_t seed) const {
  const auto keys = tie_break_keys(length_, seed);
  const double sign = label() == 1 ? 1.0 : -1.0;
  std::vector<bool> taken(length_, false);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < length_; ++step) {
    std::size_t best = length_;
    for (std::size_t i = 0; i < length_; ++i) {
      if (taken[i]) continue;
      if (best == length_) {
        best = i;
        continue;
      }
      const double vi = sign * scores[i];
      const double vb = sign * scores[best];
      if (vi > vb || (vi == vb && keys[i] < keys[best])) best = i;
    }
    taken[best] = true;
    order.push_back(best);
  }
  return order;
}

FaithfulnessScores BruteForce::metrics(const std::vector<double>& scores, std::uint64_t seed) const {
  const auto order = ranking(scores, seed);
  const double full = f(all());
  const std::size_t n = length_;
  FaithfulnessScores out;
  std::uint32_t top = 0;
  double comp = 0.0;
  double suff = 0.0;
  std::size_t first_flip = 0;
  for (std::size_t m = 1; m <= n; ++m) {
    top |= 1u << order[m - 1];
    const double removed = f(all() & ~top);
    comp += full - removed;
    suff += full - f(top);
    if (first_flip == 0 && (removed > 0.5) != (full > 0.5)) first_flip = m;
    if (m == 1) out.df_mit = (removed > 0.5) != (full > 0.5) ? 1.0 : 0.0;
  }
  out.comp = comp / static_cast<double>(n);
  out.suff = suff / static_cast<double>(n);
  out.df_frac = first_flip == 0 ? 1.0 : static_cast<double>(first_flip) / static_cast<double>(n);

  // Single-deletion drops toward the class, ranked with their own tie-break.
  const double sign = label() == 1 ? 1.0 : -1.0;
  std::vector<double> drops(n);
  for (std::size_t i = 0; i < n; ++i) drops[i] = sign * (full - f(all() & ~(1u << i)));
  const auto drop_keys = tie_break_keys(n, derive_seed(seed, "rank_del-drops"));
  std::vector<std::size_t> drop_rank(n, 0);
  std::vector<std::size_t> attr_rank(n, 0);
  for (std::size_t p = 0; p < n; ++p) attr_rank[order[p]] = p;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (drops[j] > drops[i] || (drops[j] == drops[i] && drop_keys[j] < drop_keys[i])) ++drop_rank[i];
    }
  }
  if (n == 1) {
    out.rank_del = 1.0;
  } else {
    long long d2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long long d = static_cast<long long>(attr_rank[i]) - static_cast<long long>(drop_rank[i]);
      d2 += d * d;
    }
    const double nn = static_cast<double>(n);
    out.rank_del = 1.0 - 6.0 * static_cast<double>(d2) / (nn * (nn * nn - 1.0));
  }
  return out;
}

FaithfulnessAtK BruteForce::at_k(const std::vector<std::size_t>& indices) const {
  std::uint32_t top = 0;
  for (std::size_t i : indices) top |= 1u << i;
  const double full = f(all());
  const double removed = f(all() & ~top);
  return FaithfulnessAtK{full - removed, full - f(top), (removed > 0.5) != (full > 0.5) ? 1.0 : 0.0};
}

const Transcript kExplainPredictTranscript{
    "Offers that rare combination of entertainment and education .",
    "[('Offers', 0.500), ('that', 0.000), ('rare', 0.500), ('combination', 0.000), ('of', 0.000), "
    "('entertainment', 0.750), ('and', 0.000), ('education', 0.750), ('.', 0.000)]\n(1, 1.000)"};

const Transcript kPredictExplainTranscript{
    "A film that takes you inside the rhythms of its subject : You experience it as you watch .",
    "(1, 0.8)\n[('A', 0.2), ('film', 0.5), ('that', 0.1), ('takes', 0.3), ('you', 0.4), ('inside', 0.6), "
    "('the', 0.1), ('rhythms', 0.7), ('of', 0.1), ('its', 0.1), ('subject', 0.5), (':', 0.1), ('You', 0.4), "
    "('experience', 0.6), ('it', 0.3), ('as', 0.2), ('watch', 0.4), ('.', 0.1)]"};

const Transcript kExplainPredictTopKTranscript{
    "A film that takes you inside the rhythms of its subject : You experience it as you watch .",
    "rhythms, experience, watch, 1, 0.9"};

const Transcript kPredictExplainTopKTranscript{
    "A film that takes you inside the rhythms of its subject : You experience it as you watch .",
    "1, 0.8, rhythms, experience, watch"};

const std::vector<Transcript> kFewShotTranscripts = {
    {"Reggio 's trippy , ambitious downer can also sometimes come across like nothing more than a glorified Nike ad .",
     "Classification: 0, 0.82 confidence. [(\"Reggio\", 0.254), (\"'s\", 0.192), (\"trippy\", -0.392), "
     "(\",\", -0.045), (\"ambitious\", 0.498), (\"downer\", -0.602), (\"can\", 0.195), (\"also\", 0.075), "
     "(\"sometimes\", 0.285), (\"come\", 0.043), (\"across\", 0.177), (\"like\", 0.101), (\"nothing\", -0.255), "
     "(\"more\", -0.101), (\"than\", 0.121), (\"a\", 0.004), (\"glorified\", 0.384), (\"Nike\", -0.369), "
     "(\"ad\", -0.739), (\".\", 0.007)]"},
    {"There is not a single movie that could have been better than this .",
     "Classification: 1, 0.90 confidence. [(\"There\", 0.004), (\"is\", 0.114), (\"not\", -0.787), "
     "(\"a\", 0.119), (\"single\", 0.239, (\"movie\", 0.395, (\"that\", 0.043), (\"could\", 0.294), "
     "(\"have\", 0.155), (\"been\", 0.020), (\"better\", 0.859), (\"than\", 0.122), (\"this\", 0.500), "
     "(\".\", 0.001)]"},
    {"It was a great movie overall , but the ending was a bit lackluster .",
     "Classification: 1, 0.75 confidence. [(\"It\", 0.174), (\"was\", -0.101), (\"a\", 0.122), "
     "(\"great\", 0.825), (\"movie\", 0.608), (\"overall\", 0.390), (\",\", -0.009), (\"but\", -0.134), "
     "(\"the\", 0.033), (\"ending\", -0.635), (\"was\", -0.145), (\"a\", 0.103), (\"bit\", -0.396), "
     "(\"lackluster\", -0.859), (\".\", -0.003)]"},
    {"The film provides some great insight into the neurotic mindset of all comics even those who have reached "
     "the absolute top of the game .",
     "Classification: 1, 0.98 confidence. [(\"The\", 0.033), (\"film\", 0.607), (\"provides\", 0.346), "
     "(\"some\", 0.091), (\"great\", 0.825), (\"insight\", 0.537), (\"into\", 0.091), (\"the\", 0.033), "
     "(\"neurotic\", -0.498), (\"mindset\", -0.498), (\"of\", 0.033), (\"all\", 0.033), (\"comics\", 0.537), "
     "(\"even\", 0.033), (\"those\", 0.033), (\"who\", 0.033), (\"have\", 0.033), (\"reached\", 0.033), "
     "(\"the\", 0.033), (\"absolute\", 0.033), (\"top\", 0.033), (\"of\", 0.033), (\"the\", 0.033), "
     "(\"game\", 0.033), (\".\", 0.000)]"},
};

const ExpectedPairs kExplainPredictExpected{
    {"Offers", "that", "rare", "combination", "of", "entertainment", "and", "education", "."},
    {0.5, 0.0, 0.5, 0.0, 0.0, 0.75, 0.0, 0.75, 0.0},
    Prediction{1, 1.0}};

const ExpectedPairs kPredictExplainExpected{
    {"A", "film", "that", "takes", "you", "inside", "the", "rhythms", "of", "its", "subject", ":", "You",
     "experience", "it", "as", "watch", "."},
    {0.2, 0.5, 0.1, 0.3, 0.4, 0.6, 0.1, 0.7, 0.1, 0.1, 0.5, 0.1, 0.4, 0.6, 0.3, 0.2, 0.4, 0.1},
    Prediction{1, 0.8}};

const std::vector<ExpectedPairs> kFewShotExpected = {
    {{"Reggio", "'s", "trippy", ",", "ambitious", "downer", "can", "also", "sometimes", "come", "across", "like",
      "nothing", "more", "than", "a", "glorified", "Nike", "ad", "."},
     {0.254, 0.192, -0.392, -0.045, 0.498, -0.602, 0.195, 0.075, 0.285, 0.043, 0.177, 0.101, -0.255, -0.101, 0.121,
      0.004, 0.384, -0.369, -0.739, 0.007},
     Prediction{0, 0.82}},
    {{"There", "is", "not", "a", "single", "movie", "that", "could", "have", "been", "better", "than", "this", "."},
     {0.004, 0.114, -0.787, 0.119, 0.239, 0.395, 0.043, 0.294, 0.155, 0.020, 0.859, 0.122, 0.500, 0.001},
     Prediction{1, 0.90}},
    {{"It", "was", "a", "great", "movie", "overall", ",", "but", "the", "ending", "was", "a", "bit", "lackluster",
      "."},
     {0.174, -0.101, 0.122, 0.825, 0.608, 0.390, -0.009, -0.134, 0.033, -0.635, -0.145, 0.103, -0.396, -0.859,
      -0.003},
     Prediction{1, 0.75}},
    {{"The", "film", "provides", "some", "great", "insight", "into", "the", "neurotic", "mindset", "of", "all",
      "comics", "even", "those", "who", "have", "reached", "the", "absolute", "top", "of", "the", "game", "."},
     {0.033, 0.607, 0.346, 0.091, 0.825, 0.537, 0.091, 0.033, -0.498, -0.498, 0.033, 0.033, 0.537, 0.033, 0.033,
      0.033, 0.033, 0.033, 0.033, 0.033, 0.033, 0.033, 0.033, 0.033, 0.000},
     Prediction{1, 0.98}},
};

}  // namespace selfexp::testing
