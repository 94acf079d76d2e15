#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "selfexp/harness.hpp"

namespace selfexp {

// One JSON object per line; doubles round-trip exactly.
std::string to_json_line(const EvalRecord& record);
std::string to_json_line(const PredictionRecord& record);
EvalRecord eval_record_from_json(std::string_view line);
PredictionRecord prediction_record_from_json(std::string_view line);

std::string metadata_json(const RunMetadata& metadata);
RunMetadata metadata_from_json(std::string_view text);

// Corpus tables. CSV numbers use six decimals; "NA" marks an empty mean.
std::string accuracy_csv(const Aggregates& aggregates);
std::string faithfulness_csv(const Aggregates& aggregates);
std::string faithfulness_at_k_csv(const Aggregates& aggregates);
// Mean agreement matrices per variant and metric; null for undefined cells.
std::string agreement_json(const Aggregates& aggregates);
// Zero-occlusion fractions and failed sentence ids.
std::string summary_json(const Aggregates& aggregates);

// Writes records.jsonl, predictions.jsonl, metadata.json, accuracy.csv,
// faithfulness.csv, faithfulness_at_k.csv, agreement.json and summary.json
// into `dir`, creating it if needed. Output bytes depend only on the report.
void write_report(const Report& report, const std::filesystem::path& dir);

// Reads records, predictions and metadata back and recomputes the aggregates
// from them. Throws LoadError.
Report read_report(const std::filesystem::path& dir);

}  // namespace selfexp
