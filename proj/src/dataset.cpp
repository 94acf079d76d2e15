#include "selfexp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "selfexp/errors.hpp"
#include "selfexp/random.hpp"

namespace selfexp {

LoadedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset " + path.string(), 0);
  LoadedDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::string sentence;
    double score = 0.0;
    if (line.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(line);
        sentence = j.at("sentence").get<std::string>();
        score = j.at("score").get<double>();
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("bad JSONL record: ") + e.what(), line_no);
      }
    } else {
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw LoadError("expected sentence<TAB>score", line_no);
      sentence = line.substr(0, tab);
      const char* first = line.data() + tab + 1;
      const char* last = line.data() + line.size();
      auto [ptr, ec] = std::from_chars(first, last, score);
      if (ec != std::errc() || ptr != last) throw LoadError("unparseable score", line_no);
    }
    if (!(score >= 0.0 && score <= 1.0)) throw LoadError("score outside [0, 1]", line_no);
    if (score == 0.5) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": score exactly 0.5 has no binary label; skipped");
      continue;
    }
    TokenSequence seq;
    try {
      seq = tokenize(sentence);
    } catch (const InvalidInput&) {
      throw LoadError("empty sentence", line_no);
    }
    out.entries.push_back(DatasetEntry{line_no, std::move(seq), score > 0.5 ? 1 : 0, score});
  }
  return out;
}

std::vector<DatasetEntry> sample(const std::vector<DatasetEntry>& entries, std::size_t n, std::uint64_t seed) {
  if (n > entries.size()) {
    throw InvalidArgument("sample size " + std::to_string(n) + " exceeds dataset size " +
                          std::to_string(entries.size()));
  }
  std::vector<std::size_t> idx(entries.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are the draw.
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(idx[i], idx[i + rng.below(entries.size() - i)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<DatasetEntry> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(entries[i]);
  return out;
}

AccuracyResult accuracy(const std::vector<std::optional<Prediction>>& predictions,
                        const std::vector<DatasetEntry>& entries) {
  if (predictions.empty()) throw InvalidArgument("accuracy of an empty prediction set");
  if (predictions.size() != entries.size()) throw InvalidArgument("predictions and entries differ in length");
  AccuracyResult r;
  r.total = predictions.size();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!predictions[i]) {
      ++r.unparseable;
      continue;
    }
    if (predictions[i]->label == entries[i].gold_label) ++r.correct;
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

}  // namespace selfexp
