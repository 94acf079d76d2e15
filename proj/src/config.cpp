#include "selfexp/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "selfexp/errors.hpp"

namespace selfexp {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    auto piece = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void apply_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  try {
    if (key == "backend") {
      c.model.backend = parse_backend(value);
    } else if (key == "endpoint") {
      c.model.endpoint_url = value;
    } else if (key == "model") {
      c.model.model_name = value;
    } else if (key == "concurrency") {
      c.model.max_concurrency = parse_number<int>(key, value);
    } else if (key == "cache") {
      c.model.cache_path = value;
    } else if (key == "api_key_env") {
      c.model.api_key_env = value;
    } else if (key == "max_attempts") {
      c.model.max_attempts = parse_number<int>(key, value);
    } else if (key == "backoff_ms") {
      c.model.initial_backoff_ms = parse_number<int>(key, value);
    } else if (key == "timeout_seconds") {
      c.model.timeout_seconds = parse_number<int>(key, value);
    } else if (key == "lexicon") {
      c.model.lexicon_path = value;
    } else if (key == "oracle_bias") {
      c.model.oracle_bias = parse_number<double>(key, value);
    } else if (key == "temperature") {
      c.model.temperature = parse_number<double>(key, value);
    } else if (key == "dataset") {
      c.dataset_path = value;
    } else if (key == "output") {
      c.output_dir = value;
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
      c.model.seed = c.seed;
    } else if (key == "sample_size") {
      c.sample_size = parse_number<std::size_t>(key, value);
    } else if (key == "lime_perturbations_per_token") {
      c.perturbations_per_token = parse_number<std::size_t>(key, value);
    } else if (key == "variants") {
      c.base_variants.clear();
      for (auto v : split_list(value)) {
        const PromptVariant pv = parse_variant(v);
        if (pv != PromptVariant::kExplainPredict && pv != PromptVariant::kPredictExplain) {
          throw ConfigError("variants lists evaluated models and accepts only EP and PE");
        }
        c.base_variants.push_back(pv);
      }
    } else if (key == "ordering") {
      c.metrics.ordering = parse_ordering(value);
    } else if (key == "removal_fractions") {
      c.metrics.removal_fractions.clear();
      if (value != "full") {
        for (auto v : split_list(value)) c.metrics.removal_fractions.push_back(parse_number<double>(key, v));
      }
    } else if (key == "api_key") {
      throw ConfigError("API keys are never read from config; set the environment variable named by api_key_env");
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_value(base, trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace selfexp
