#include "selfexp/harness.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>

#include "parallel.hpp"
#include "selfexp/errors.hpp"
#include "selfexp/random.hpp"
#include "selfexp/response_cache.hpp"

namespace selfexp {
namespace {

PromptVariant topk_counterpart(PromptVariant v) {
  switch (v) {
    case PromptVariant::kExplainPredict:
      return PromptVariant::kExplainPredictTopK;
    case PromptVariant::kPredictExplain:
      return PromptVariant::kPredictExplainTopK;
    default:
      throw InvalidArgument("only EP and PE are evaluated models");
  }
}

void add_warnings(std::vector<std::string>& into, std::string_view prefix, const std::vector<std::string>& from) {
  for (const auto& w : from) into.push_back(std::string(prefix) + ": " + w);
}

std::string cache_digest(const ChatModel& model) {
  if (const auto* cached = dynamic_cast<const CachedModel*>(&model)) return cached->cache().digest();
  if (const auto* replay = dynamic_cast<const ReplayModel*>(&model)) return replay->cache().digest();
  return {};
}

}  // namespace

std::uint64_t sentence_seed(std::uint64_t global_seed, std::size_t sentence_id, std::string_view label) {
  return derive_seed(derive_seed(global_seed, static_cast<std::uint64_t>(sentence_id)), label);
}

EvalRecord evaluate_sentence(ChatModel& model, PromptVariant variant, const DatasetEntry& entry,
                             const RunConfig& config) {
  const TokenSequence& seq = entry.sentence;
  const std::string vname(to_string(variant));
  EvalRecord r;
  r.sentence_id = entry.id;
  r.sentence = seq.source_text();
  r.variant = variant;
  r.length = seq.size();
  r.k = prompts::choose_k(seq.size());
  r.gold_label = entry.gold_label;

  try {
    const ParsedResponse self = self_explain(model, variant, seq);
    add_warnings(r.warnings, "self", self.alignment_warnings);
    r.prediction = self.prediction;

    const PromptVariant topk_variant = topk_counterpart(variant);
    ParsedResponse top = self_explain(model, topk_variant, seq);
    add_warnings(r.warnings, "topk", top.alignment_warnings);
    if (top.topk->indices.size() > r.k) top.topk->indices.resize(r.k);

    const PromptedClassifier clf(model, variant);
    const std::uint64_t tie_seed = sentence_seed(config.seed, entry.id, "tiebreak:" + vname);
    const ExplainerBudget budget{config.perturbations_per_token, sentence_seed(config.seed, entry.id, "lime:" + vname)};

    const Attribution occ = occlusion(clf, seq);
    const Attribution lime_attr = lime(clf, seq, budget);
    const Prediction full = clf.predict(seq.source_text());

    const Attribution* attrs[] = {&*self.attribution, &occ, &lime_attr};
    for (std::size_t e = 0; e < 3; ++e) {
      ExplainerResult res;
      res.name = kExplainerNames[e];
      res.attribution = *attrs[e];
      res.faithfulness = faithfulness(clf, seq, *attrs[e], tie_seed, config.metrics);
      res.topk = topk_from(*attrs[e], full, r.k, tie_seed, config.metrics.ordering);
      res.at_k = faithfulness_at_k(clf, seq, res.topk);
      r.explainers.push_back(std::move(res));
    }
    ExplainerResult topk_res;
    topk_res.name = kExplainerNames[3];
    topk_res.topk = *top.topk;
    topk_res.at_k = faithfulness_at_k(clf, seq, topk_res.topk);
    r.explainers.push_back(std::move(topk_res));

    for (double s : occ.scores) r.zero_occlusion += (s == 0.0);

    const std::vector<Explanation> expl = {*self.attribution, occ, lime_attr, *top.topk};
    const std::uint64_t agree_seed = sentence_seed(config.seed, entry.id, "agreement:" + vname);
    for (AgreementMetric m : kAllAgreementMetrics) {
      AgreementMatrix mat(expl.size(), std::vector<std::optional<double>>(expl.size()));
      for (std::size_t i = 0; i < expl.size(); ++i) {
        for (std::size_t j = 0; j < expl.size(); ++j) {
          try {
            mat[i][j] = agreement(expl[i], expl[j], seq.size(), r.k, agree_seed, m);
          } catch (const UnsupportedMetric&) {
            mat[i][j].reset();
          }
        }
      }
      r.agreement.emplace(std::string(to_string(m)), std::move(mat));
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = "sentence " + std::to_string(entry.id) + " (" + vname + "): " + e.what();
    r.explainers.clear();
    r.agreement.clear();
    r.zero_occlusion = 0;
  }
  return r;
}

Aggregates aggregate(const std::vector<PredictionRecord>& predictions, const std::vector<EvalRecord>& records) {
  Aggregates agg;

  for (PromptVariant v : kAllVariants) {
    std::vector<std::optional<Prediction>> preds;
    std::vector<DatasetEntry> gold;
    for (const auto& p : predictions) {
      if (p.variant != v) continue;
      preds.push_back(p.prediction);
      DatasetEntry e;
      e.gold_label = p.gold_label;
      gold.push_back(std::move(e));
    }
    if (preds.empty()) continue;
    agg.accuracy.push_back(AccuracyRow{v, accuracy(preds, gold)});
  }

  std::vector<PromptVariant> variants;
  for (const auto& r : records) {
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
  }
  std::sort(variants.begin(), variants.end());

  for (PromptVariant v : variants) {
    const std::string vname(to_string(v));
    std::vector<const EvalRecord*> ok;
    auto& failed = agg.failed_ids[vname];
    for (const auto& r : records) {
      if (r.variant != v) continue;
      if (r.ok) {
        ok.push_back(&r);
      } else {
        failed.push_back(r.sentence_id);
      }
    }
    const double n = static_cast<double>(ok.size());

    for (std::size_t e = 0; e < kExplainerNames.size(); ++e) {
      FaithfulnessRow row{v, std::string(kExplainerNames[e]), ok.size(), std::nullopt, std::nullopt};
      if (!ok.empty()) {
        FaithfulnessAtK at{};
        for (const auto* r : ok) {
          at.comp_at_k += r->explainers[e].at_k.comp_at_k;
          at.suff_at_k += r->explainers[e].at_k.suff_at_k;
          at.df_mit_at_k += r->explainers[e].at_k.df_mit_at_k;
        }
        row.mean_at_k = FaithfulnessAtK{at.comp_at_k / n, at.suff_at_k / n, at.df_mit_at_k / n};
        if (ok.front()->explainers[e].faithfulness) {
          FaithfulnessScores s{};
          for (const auto* r : ok) {
            const auto& f = *r->explainers[e].faithfulness;
            s.comp += f.comp;
            s.suff += f.suff;
            s.df_mit += f.df_mit;
            s.df_frac += f.df_frac;
            s.rank_del += f.rank_del;
          }
          row.mean = FaithfulnessScores{s.comp / n, s.suff / n, s.df_mit / n, s.df_frac / n, s.rank_del / n};
        }
      }
      agg.faithfulness.push_back(std::move(row));
    }

    AgreementSummary summary{v, ok.size(), {}};
    for (AgreementMetric m : kAllAgreementMetrics) {
      const std::string mname(to_string(m));
      const std::size_t dim = kExplainerNames.size();
      AgreementMatrix mean(dim, std::vector<std::optional<double>>(dim));
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
          double sum = 0.0;
          std::size_t count = 0;
          for (const auto* r : ok) {
            const auto& cell = r->agreement.at(mname)[i][j];
            if (cell) {
              sum += *cell;
              ++count;
            }
          }
          if (count) mean[i][j] = sum / static_cast<double>(count);
        }
      }
      summary.mean.emplace(mname, std::move(mean));
    }
    agg.agreement.push_back(std::move(summary));

    std::size_t zeros = 0;
    std::size_t tokens = 0;
    for (const auto* r : ok) {
      zeros += r->zero_occlusion;
      tokens += r->length;
    }
    agg.zero_occlusion_fraction[vname] = tokens ? static_cast<double>(zeros) / static_cast<double>(tokens) : 0.0;
  }
  return agg;
}

Report run(const RunConfig& config) {
  if (config.dataset_path.empty()) throw ConfigError("no dataset configured");
  if (!std::filesystem::exists(config.dataset_path)) {
    throw ConfigError("dataset file does not exist: " + config.dataset_path);
  }
  auto model = make_model(config.model);
  return run(config, *model);
}

Report run(const RunConfig& config, ChatModel& model) {
  if (config.base_variants.empty()) throw ConfigError("no evaluated variants configured");
  const LoadedDataset loaded = load_dataset(config.dataset_path);
  const std::size_t n = config.sample_size == 0 ? loaded.entries.size() : config.sample_size;
  const auto entries = sample(loaded.entries, n, derive_seed(config.seed, "sample"));

  Report report;
  auto& meta = report.metadata;
  meta.seed = config.seed;
  meta.backend = std::string(to_string(config.model.backend));
  meta.model_name = std::string(model.model_name());
  meta.dataset = std::filesystem::path(config.dataset_path).filename().string();
  meta.sample_size = entries.size();
  meta.perturbations_per_token = config.perturbations_per_token;
  meta.ordering = std::string(to_string(config.metrics.ordering));
  meta.removal_fractions = config.metrics.removal_fractions;
  meta.dataset_warnings = loaded.warnings;
  for (const auto& e : entries) meta.sample_ids.push_back(e.id);

  const std::size_t nv = kAllVariants.size();
  const std::size_t nb = config.base_variants.size();
  report.predictions.resize(entries.size() * nv);
  report.records.resize(entries.size() * nb);

  detail::parallel_for(entries.size(), config.model.max_concurrency, [&](std::size_t s) {
    const DatasetEntry& entry = entries[s];
    for (std::size_t vi = 0; vi < nv; ++vi) {
      const PromptVariant v = kAllVariants[vi];
      PredictionRecord& p = report.predictions[s * nv + vi];
      p.sentence_id = entry.id;
      p.variant = v;
      p.gold_label = entry.gold_label;
      try {
        std::optional<std::size_t> k;
        if (is_topk(v)) k = prompts::choose_k(entry.sentence.size());
        const PromptedClassifier clf(model, v, k);
        p.prediction = clf.predict(entry.sentence.source_text());
      } catch (const std::exception& e) {
        p.error = e.what();
      }
    }
    for (std::size_t b = 0; b < nb; ++b) {
      report.records[s * nb + b] = evaluate_sentence(model, config.base_variants[b], entry, config);
    }
  });

  report.aggregates = aggregate(report.predictions, report.records);
  meta.cache_digest = cache_digest(model);
  return report;
}

}  // namespace selfexp
