#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfexp/metrics.hpp"
#include "selfexp/model_client.hpp"
#include "selfexp/prompts.hpp"

namespace selfexp {

struct RunConfig {
  ModelConfig model;
  std::string dataset_path;
  std::string output_dir = "report";
  std::uint64_t seed = 0;
  std::size_t sample_size = 100;
  std::size_t perturbations_per_token = 10;
  // Models whose self-explanations are evaluated; each is paired with its
  // top-k counterpart as an external explainer.
  std::vector<PromptVariant> base_variants = {PromptVariant::kExplainPredict, PromptVariant::kPredictExplain};
  MetricOptions metrics;
};

// Plain "key = value" lines; '#' starts a comment. Keys:
//   backend, endpoint, model, concurrency, cache, api_key_env, max_attempts,
//   backoff_ms, timeout_seconds, lexicon, oracle_bias, dataset, output, seed,
//   sample_size, lime_perturbations_per_token, variants, ordering,
//   removal_fractions
// An API key is never accepted here ("api_key" is rejected); it is read from
// the environment variable named by api_key_env. Throws ConfigError.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Applies one key/value pair (shared by the file parser and CLI overrides).
void apply_config_value(RunConfig& config, std::string_view key, std::string_view value);

}  // namespace selfexp
