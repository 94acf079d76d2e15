#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfexp/core.hpp"

namespace selfexp {

struct DatasetEntry {
  std::size_t id = 0;  // 1-based line number in the source file
  TokenSequence sentence;
  int gold_label = 0;  // 1 iff raw_score > 0.5
  double raw_score = 0.0;
};

struct LoadedDataset {
  std::vector<DatasetEntry> entries;
  std::vector<std::string> warnings;
};

// "sentence<TAB>score" lines, or JSONL objects {"sentence": ..., "score": ...}
// (format detected per line by a leading '{'). Scores of exactly 0.5 are
// excluded with a warning. Throws LoadError with the line number.
LoadedDataset load_dataset(const std::filesystem::path& path);

// n entries without replacement, seeded, returned in file order.
std::vector<DatasetEntry> sample(const std::vector<DatasetEntry>& entries, std::size_t n, std::uint64_t seed);

struct AccuracyResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t unparseable = 0;
  double accuracy = 0.0;
};

// predictions[i] is the parsed prediction for entries[i], or nullopt when the
// response could not be parsed (counted wrong and tallied separately).
AccuracyResult accuracy(const std::vector<std::optional<Prediction>>& predictions,
                        const std::vector<DatasetEntry>& entries);

}  // namespace selfexp
