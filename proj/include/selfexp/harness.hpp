#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfexp/config.hpp"
#include "selfexp/dataset.hpp"
#include "selfexp/metrics.hpp"

namespace selfexp {

// Explainers compared for each evaluated model, in report order. "topk" is
// the top-k prompt's answer, treated as an external explainer.
inline constexpr std::array<std::string_view, 4> kExplainerNames = {"self", "occlusion", "lime", "topk"};

struct ExplainerResult {
  std::string name;
  std::optional<Attribution> attribution;  // absent for "topk"
  TopKExplanation topk;                    // for attributions: topk_from(...)
  std::optional<FaithfulnessScores> faithfulness;  // absent for "topk"
  FaithfulnessAtK at_k;
};

// Square matrix over kExplainerNames; nullopt where the metric is undefined
// (sign metrics against the top-k explainer).
using AgreementMatrix = std::vector<std::vector<std::optional<double>>>;

// Results for one sentence under one evaluated model (EP or PE).
struct EvalRecord {
  std::size_t sentence_id = 0;
  std::string sentence;
  PromptVariant variant = PromptVariant::kExplainPredict;
  std::size_t length = 0;
  std::size_t k = 0;
  int gold_label = 0;
  bool ok = false;
  std::string error;  // set when !ok
  Prediction prediction;
  std::vector<ExplainerResult> explainers;
  std::map<std::string, AgreementMatrix> agreement;  // metric name -> matrix
  std::size_t zero_occlusion = 0;                   // tokens with occlusion score exactly 0
  std::vector<std::string> warnings;
};

// One accuracy query: a sentence under one of the five prompts.
struct PredictionRecord {
  std::size_t sentence_id = 0;
  PromptVariant variant = PromptVariant::kPredictOnly;
  int gold_label = 0;
  std::optional<Prediction> prediction;
  std::string error;
};

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string backend;
  std::string model_name;
  std::string dataset;
  std::size_t sample_size = 0;
  std::size_t perturbations_per_token = 0;
  std::string ordering;
  std::vector<double> removal_fractions;
  std::vector<std::size_t> sample_ids;
  std::string cache_digest;  // empty when no cache is attached
  std::vector<std::string> dataset_warnings;
};

struct AccuracyRow {
  PromptVariant variant;
  AccuracyResult result;
};

struct FaithfulnessRow {
  PromptVariant variant;
  std::string explainer;
  std::size_t n = 0;
  // Empty when n = 0; `mean` is also empty for "topk".
  std::optional<FaithfulnessScores> mean;
  std::optional<FaithfulnessAtK> mean_at_k;
};

struct AgreementSummary {
  PromptVariant variant;
  std::size_t n = 0;
  std::map<std::string, AgreementMatrix> mean;
};

// Corpus-level numbers, all derived from the per-sentence records.
struct Aggregates {
  std::vector<AccuracyRow> accuracy;
  std::vector<FaithfulnessRow> faithfulness;
  std::vector<AgreementSummary> agreement;
  std::map<std::string, double> zero_occlusion_fraction;  // per variant
  std::map<std::string, std::vector<std::size_t>> failed_ids;
};

struct Report {
  RunMetadata metadata;
  std::vector<PredictionRecord> predictions;
  std::vector<EvalRecord> records;
  Aggregates aggregates;
};

// Seeds for one sentence: derived from (global seed, sentence id, label).
std::uint64_t sentence_seed(std::uint64_t global_seed, std::size_t sentence_id, std::string_view label);

// Full evaluation of one sentence under one model (self, occlusion, LIME and
// the top-k prompt's explanation; faithfulness, @k and agreement). Failures
// are captured in the record rather than thrown.
EvalRecord evaluate_sentence(ChatModel& model, PromptVariant variant, const DatasetEntry& entry,
                             const RunConfig& config);

// Means over ok records only; accuracy over all prediction records.
Aggregates aggregate(const std::vector<PredictionRecord>& predictions, const std::vector<EvalRecord>& records);

// Validates the config (cache directory, dataset), then evaluates every
// sampled sentence. Sentences run concurrently up to the model concurrency;
// the report does not depend on completion order.
Report run(const RunConfig& config);
// Same, against an already-built model.
Report run(const RunConfig& config, ChatModel& model);

}  // namespace selfexp
