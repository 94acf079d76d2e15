#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "selfexp/config.hpp"
#include "selfexp/errors.hpp"
#include "selfexp/explainers.hpp"
#include "selfexp/harness.hpp"
#include "selfexp/metrics.hpp"
#include "selfexp/report.hpp"

using namespace selfexp;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample_size;
  std::optional<std::size_t> perturbations;
  std::string backend, cache, model, lexicon, endpoint, dataset, out;
  std::optional<int> concurrency;
};

RunConfig build_config(const Overrides& o) {
  RunConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path);
  auto set = [&](std::string_view key, const std::string& value) {
    if (!value.empty()) apply_config_value(c, key, value);
  };
  set("backend", o.backend);
  set("cache", o.cache);
  set("model", o.model);
  set("lexicon", o.lexicon);
  set("endpoint", o.endpoint);
  set("dataset", o.dataset);
  set("output", o.out);
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.sample_size) set("sample_size", std::to_string(*o.sample_size));
  if (o.perturbations) set("lime_perturbations_per_token", std::to_string(*o.perturbations));
  if (o.concurrency) set("concurrency", std::to_string(*o.concurrency));
  return c;
}

PromptVariant base_variant(const std::string& name) {
  const PromptVariant v = parse_variant(name);
  if (v != PromptVariant::kExplainPredict && v != PromptVariant::kPredictExplain) {
    throw InvalidArgument("--variant must be EP or PE");
  }
  return v;
}

PromptVariant topk_of(PromptVariant v) {
  return v == PromptVariant::kExplainPredict ? PromptVariant::kExplainPredictTopK
                                             : PromptVariant::kPredictExplainTopK;
}

// Explanation of `seq` by `method` for the model prompted with `v`.
Explanation explain_with(ChatModel& model, PromptVariant v, const std::string& method, const TokenSequence& seq,
                         const RunConfig& c) {
  if (method == "self") return *self_explain(model, v, seq).attribution;
  if (method == "topk") {
    TopKExplanation t = *self_explain(model, topk_of(v), seq).topk;
    const std::size_t k = prompts::choose_k(seq.size());
    if (t.indices.size() > k) t.indices.resize(k);
    return t;
  }
  const PromptedClassifier clf(model, v);
  if (method == "occlusion") return occlusion(clf, seq);
  if (method == "lime") {
    return lime(clf, seq, ExplainerBudget{c.perturbations_per_token, sentence_seed(c.seed, 0, "lime:" + std::string(to_string(v)))});
  }
  throw InvalidArgument("unknown method '" + method + "' (self, occlusion, lime, topk)");
}

json explanation_json(const Explanation& e, const TokenSequence& seq) {
  json j;
  if (const auto* a = std::get_if<Attribution>(&e)) {
    j["provenance"] = to_string(a->provenance);
    json tokens = json::array();
    for (std::size_t i = 0; i < seq.size(); ++i) tokens.push_back(json::array({seq.token(i), a->scores[i]}));
    j["scores"] = std::move(tokens);
  } else {
    const auto& t = std::get<TopKExplanation>(e);
    json words = json::array();
    for (std::size_t i : t.indices) words.push_back(json::array({i, seq.token(i)}));
    j["topk"] = std::move(words);
  }
  return j;
}

void print_report_summary(const Report& r, const std::string& dir) {
  for (const auto& row : r.aggregates.accuracy) {
    std::printf("accuracy %-13s %.4f (%zu/%zu, %zu unparseable)\n", std::string(to_string(row.variant)).c_str(),
                row.result.accuracy, row.result.correct, row.result.total, row.result.unparseable);
  }
  for (const auto& [variant, ids] : r.aggregates.failed_ids) {
    if (!ids.empty()) std::printf("%s: %zu sentence(s) failed and are excluded from means\n", variant.c_str(), ids.size());
  }
  std::printf("report written to %s\n", dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-explanation faithfulness and agreement toolkit"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "global seed");
  app.add_option("--backend", o.backend, "remote, oracle or replay");
  app.add_option("--cache", o.cache, "response cache (JSONL)");
  app.add_option("--model", o.model, "model name");
  app.add_option("--lexicon", o.lexicon, "oracle lexicon (token<TAB>weight)");
  app.add_option("--endpoint", o.endpoint, "chat completions URL");
  app.add_option("--concurrency", o.concurrency, "maximum in-flight requests");
  app.add_option("--lime-perturbations", o.perturbations, "LIME samples per token");

  std::string text, variant_name = "EP", method = "self", method_b = "occlusion", report_dir;

  auto* predict = app.add_subcommand("predict", "classify one review");
  predict->add_option("--text", text, "review text")->required();
  predict->add_option("--variant", variant_name, "EP, PE, EP_topk, PE_topk or predict_only");

  auto* explain = app.add_subcommand("explain", "explain one review");
  explain->add_option("--text", text, "review text")->required();
  explain->add_option("--variant", variant_name, "EP or PE");
  explain->add_option("--method", method, "self, occlusion, lime or topk");

  auto* evaluate = app.add_subcommand("evaluate", "faithfulness of one explanation");
  evaluate->add_option("--text", text, "review text")->required();
  evaluate->add_option("--variant", variant_name, "EP or PE");
  evaluate->add_option("--method", method, "self, occlusion, lime or topk");
  std::vector<std::string> metric_filter;
  evaluate->add_option("--metrics", metric_filter, "subset of comp,suff,df_mit,df_frac,rank_del,at_k")
      ->delimiter(',');

  auto* agree = app.add_subcommand("agree", "agreement between two explanations");
  agree->add_option("--text", text, "review text")->required();
  agree->add_option("--variant", variant_name, "EP or PE");
  agree->add_option("--a", method, "first method");
  agree->add_option("--b", method_b, "second method");

  auto* run_cmd = app.add_subcommand("run", "evaluate a dataset sample and write a report");
  run_cmd->add_option("--dataset", o.dataset, "TSV or JSONL dataset");
  run_cmd->add_option("--out", o.out, "report directory");
  run_cmd->add_option("--sample-size", o.sample_size, "sentences to sample (0 = all)");

  auto* report_cmd = app.add_subcommand("report", "recompute report tables from saved records");
  report_cmd->add_option("--dir", report_dir, "report directory with records")->required();
  report_cmd->add_option("--out", o.out, "where to write the tables (default: --dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*report_cmd) {
      const Report r = read_report(report_dir);
      const std::string out = o.out.empty() ? report_dir : o.out;
      write_report(r, out);
      print_report_summary(r, out);
      return 0;
    }

    const RunConfig config = build_config(o);
    if (*run_cmd) {
      const Report r = run(config);
      write_report(r, config.output_dir);
      print_report_summary(r, config.output_dir);
      return 0;
    }

    auto model = make_model(config.model);
    const TokenSequence seq = tokenize(text);

    if (*predict) {
      const PromptVariant v = parse_variant(variant_name);
      std::optional<std::size_t> k;
      if (is_topk(v)) k = prompts::choose_k(seq.size());
      const Prediction p = PromptedClassifier(*model, v, k).predict(seq.source_text());
      std::cout << json{{"label", p.label}, {"confidence", p.confidence}}.dump() << "\n";
      return 0;
    }

    const PromptVariant v = base_variant(variant_name);
    if (*explain) {
      std::cout << explanation_json(explain_with(*model, v, method, seq, config), seq).dump(2) << "\n";
      return 0;
    }
    if (*evaluate) {
      const Explanation e = explain_with(*model, v, method, seq, config);
      const PromptedClassifier clf(*model, v);
      const std::uint64_t tie = sentence_seed(config.seed, 0, "tiebreak:" + std::string(to_string(v)));
      json j = explanation_json(e, seq);
      if (const auto* a = std::get_if<Attribution>(&e)) {
        const auto f = faithfulness(clf, seq, *a, tie, config.metrics);
        j["faithfulness"] = {{"comp", f.comp}, {"suff", f.suff}, {"df_mit", f.df_mit}, {"df_frac", f.df_frac},
                             {"rank_del", f.rank_del}};
        const auto at = faithfulness_at_k(clf, seq, *a, prompts::choose_k(seq.size()), tie, config.metrics);
        j["at_k"] = {{"comp_at_k", at.comp_at_k}, {"suff_at_k", at.suff_at_k}, {"df_mit_at_k", at.df_mit_at_k}};
      } else {
        const auto at = faithfulness_at_k(clf, seq, std::get<TopKExplanation>(e));
        j["at_k"] = {{"comp_at_k", at.comp_at_k}, {"suff_at_k", at.suff_at_k}, {"df_mit_at_k", at.df_mit_at_k}};
      }
      if (!metric_filter.empty()) {
        auto wanted = [&](const std::string& name) {
          return std::find(metric_filter.begin(), metric_filter.end(), name) != metric_filter.end();
        };
        for (const auto& name : metric_filter) {
          if (name != "at_k" && !(j.contains("faithfulness") && j["faithfulness"].contains(name))) {
            throw InvalidArgument("metric '" + name + "' is not available for method " + method);
          }
        }
        if (!wanted("at_k")) j.erase("at_k");
        if (j.contains("faithfulness")) {
          json kept = json::object();
          for (const auto& [name, value] : j["faithfulness"].items()) {
            if (wanted(name)) kept[name] = value;
          }
          if (kept.empty()) {
            j.erase("faithfulness");
          } else {
            j["faithfulness"] = std::move(kept);
          }
        }
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*agree) {
      const Explanation a = explain_with(*model, v, method, seq, config);
      const Explanation b = explain_with(*model, v, method_b, seq, config);
      const std::uint64_t seed = sentence_seed(config.seed, 0, "agreement:" + std::string(to_string(v)));
      const std::size_t k = prompts::choose_k(seq.size());
      json j;
      j["k"] = k;
      for (AgreementMetric m : kAllAgreementMetrics) {
        try {
          j[std::string(to_string(m))] = agreement(a, b, seq.size(), k, seed, m);
        } catch (const UnsupportedMetric&) {
          j[std::string(to_string(m))] = nullptr;
        }
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
