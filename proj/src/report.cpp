#include "selfexp/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "selfexp/errors.hpp"

namespace selfexp {
namespace {

using nlohmann::json;

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const AgreementMatrix& m) {
  json out = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(optional_json(cell));
    out.push_back(std::move(r));
  }
  return out;
}

AgreementMatrix matrix_from(const json& j) {
  AgreementMatrix m;
  for (const auto& row : j) {
    std::vector<std::optional<double>> r;
    for (const auto& cell : row) {
      if (cell.is_null()) {
        r.emplace_back();
      } else {
        r.emplace_back(cell.get<double>());
      }
    }
    m.push_back(std::move(r));
  }
  return m;
}

json prediction_json(const Prediction& p) { return json{{"label", p.label}, {"confidence", p.confidence}}; }

Prediction prediction_from(const json& j) {
  return Prediction::Make(j.at("label").get<int>(), j.at("confidence").get<double>());
}

json faithfulness_json(const FaithfulnessScores& f) {
  return json{{"comp", f.comp}, {"suff", f.suff}, {"df_mit", f.df_mit}, {"df_frac", f.df_frac}, {"rank_del", f.rank_del}};
}

json at_k_json(const FaithfulnessAtK& f) {
  return json{{"comp_at_k", f.comp_at_k}, {"suff_at_k", f.suff_at_k}, {"df_mit_at_k", f.df_mit_at_k}};
}

Provenance provenance_from(std::string_view s) {
  for (Provenance p : {Provenance::kSelfExplanation, Provenance::kOcclusion, Provenance::kLime}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidArgument("unknown provenance '" + std::string(s) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

template <typename T, typename Parse>
std::vector<T> read_lines(const std::filesystem::path& path, Parse parse) {
  std::istringstream in(read_file(path));
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const json::exception& e) {
      throw LoadError(path.filename().string() + ": " + e.what(), line_no);
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw LoadError(path.filename().string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

std::string to_json_line(const EvalRecord& r) {
  json j;
  j["sentence_id"] = r.sentence_id;
  j["sentence"] = r.sentence;
  j["variant"] = to_string(r.variant);
  j["length"] = r.length;
  j["k"] = r.k;
  j["gold_label"] = r.gold_label;
  j["ok"] = r.ok;
  j["error"] = r.error;
  j["prediction"] = prediction_json(r.prediction);
  json explainers = json::array();
  for (const auto& e : r.explainers) {
    json x;
    x["name"] = e.name;
    if (e.attribution) {
      x["attribution"] = e.attribution->scores;
      x["provenance"] = to_string(e.attribution->provenance);
    }
    x["topk"] = e.topk.indices;
    if (e.faithfulness) x["faithfulness"] = faithfulness_json(*e.faithfulness);
    x["at_k"] = at_k_json(e.at_k);
    explainers.push_back(std::move(x));
  }
  j["explainers"] = std::move(explainers);
  json agreement = json::object();
  for (const auto& [name, m] : r.agreement) agreement[name] = matrix_json(m);
  j["agreement"] = std::move(agreement);
  j["zero_occlusion"] = r.zero_occlusion;
  j["warnings"] = r.warnings;
  return j.dump();
}

EvalRecord eval_record_from_json(std::string_view line) {
  const json j = json::parse(line);
  EvalRecord r;
  r.sentence_id = j.at("sentence_id").get<std::size_t>();
  r.sentence = j.at("sentence").get<std::string>();
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.length = j.at("length").get<std::size_t>();
  r.k = j.at("k").get<std::size_t>();
  r.gold_label = j.at("gold_label").get<int>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").get<std::string>();
  r.prediction = prediction_from(j.at("prediction"));
  for (const auto& x : j.at("explainers")) {
    ExplainerResult e;
    e.name = x.at("name").get<std::string>();
    if (x.contains("attribution")) {
      e.attribution = Attribution{x.at("attribution").get<std::vector<double>>(),
                                  provenance_from(x.at("provenance").get<std::string>())};
    }
    e.topk.indices = x.at("topk").get<std::vector<std::size_t>>();
    if (x.contains("faithfulness")) {
      const auto& f = x.at("faithfulness");
      e.faithfulness = FaithfulnessScores{f.at("comp").get<double>(), f.at("suff").get<double>(),
                                          f.at("df_mit").get<double>(), f.at("df_frac").get<double>(),
                                          f.at("rank_del").get<double>()};
    }
    const auto& a = x.at("at_k");
    e.at_k = FaithfulnessAtK{a.at("comp_at_k").get<double>(), a.at("suff_at_k").get<double>(),
                             a.at("df_mit_at_k").get<double>()};
    r.explainers.push_back(std::move(e));
  }
  for (const auto& [name, m] : j.at("agreement").items()) r.agreement.emplace(name, matrix_from(m));
  r.zero_occlusion = j.at("zero_occlusion").get<std::size_t>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string to_json_line(const PredictionRecord& r) {
  json j;
  j["sentence_id"] = r.sentence_id;
  j["variant"] = to_string(r.variant);
  j["gold_label"] = r.gold_label;
  j["prediction"] = r.prediction ? prediction_json(*r.prediction) : json(nullptr);
  j["error"] = r.error;
  return j.dump();
}

PredictionRecord prediction_record_from_json(std::string_view line) {
  const json j = json::parse(line);
  PredictionRecord r;
  r.sentence_id = j.at("sentence_id").get<std::size_t>();
  r.variant = parse_variant(j.at("variant").get<std::string>());
  r.gold_label = j.at("gold_label").get<int>();
  if (!j.at("prediction").is_null()) r.prediction = prediction_from(j.at("prediction"));
  r.error = j.at("error").get<std::string>();
  return r;
}

std::string metadata_json(const RunMetadata& m) {
  json j;
  j["seed"] = m.seed;
  j["backend"] = m.backend;
  j["model_name"] = m.model_name;
  j["dataset"] = m.dataset;
  j["sample_size"] = m.sample_size;
  j["lime_perturbations_per_token"] = m.perturbations_per_token;
  j["ordering"] = m.ordering;
  j["removal_fractions"] = m.removal_fractions;
  j["sample_ids"] = m.sample_ids;
  j["cache_digest"] = m.cache_digest;
  j["dataset_warnings"] = m.dataset_warnings;
  return j.dump(2) + "\n";
}

RunMetadata metadata_from_json(std::string_view text) {
  const json j = json::parse(text);
  RunMetadata m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.backend = j.at("backend").get<std::string>();
  m.model_name = j.at("model_name").get<std::string>();
  m.dataset = j.at("dataset").get<std::string>();
  m.sample_size = j.at("sample_size").get<std::size_t>();
  m.perturbations_per_token = j.at("lime_perturbations_per_token").get<std::size_t>();
  m.ordering = j.at("ordering").get<std::string>();
  m.removal_fractions = j.at("removal_fractions").get<std::vector<double>>();
  m.sample_ids = j.at("sample_ids").get<std::vector<std::size_t>>();
  m.cache_digest = j.at("cache_digest").get<std::string>();
  m.dataset_warnings = j.at("dataset_warnings").get<std::vector<std::string>>();
  return m;
}

std::string accuracy_csv(const Aggregates& a) {
  std::string out = "variant,n,correct,unparseable,accuracy\n";
  for (const auto& row : a.accuracy) {
    out += std::string(to_string(row.variant)) + "," + std::to_string(row.result.total) + "," +
           std::to_string(row.result.correct) + "," + std::to_string(row.result.unparseable) + "," +
           fixed(row.result.accuracy) + "\n";
  }
  return out;
}

std::string faithfulness_csv(const Aggregates& a) {
  std::string out = "variant,explainer,n,Comp,Suff,DF_MIT,DF_Frac,Rank_Del\n";
  for (const auto& row : a.faithfulness) {
    if (row.explainer == "topk") continue;
    out += std::string(to_string(row.variant)) + "," + row.explainer + "," + std::to_string(row.n);
    if (row.mean) {
      const auto& m = *row.mean;
      for (double v : {m.comp, m.suff, m.df_mit, m.df_frac, m.rank_del}) out += "," + fixed(v);
    } else {
      out += ",NA,NA,NA,NA,NA";
    }
    out += "\n";
  }
  return out;
}

std::string faithfulness_at_k_csv(const Aggregates& a) {
  std::string out = "variant,explainer,n,Comp@k,Suff@k,DF_MIT@k\n";
  for (const auto& row : a.faithfulness) {
    out += std::string(to_string(row.variant)) + "," + row.explainer + "," + std::to_string(row.n);
    if (row.mean_at_k) {
      const auto& m = *row.mean_at_k;
      for (double v : {m.comp_at_k, m.suff_at_k, m.df_mit_at_k}) out += "," + fixed(v);
    } else {
      out += ",NA,NA,NA";
    }
    out += "\n";
  }
  return out;
}

std::string agreement_json(const Aggregates& a) {
  json j = json::object();
  for (const auto& s : a.agreement) {
    json v;
    v["n"] = s.n;
    json names = json::array();
    for (auto name : kExplainerNames) names.push_back(std::string(name));
    v["explainers"] = std::move(names);
    json metrics = json::object();
    for (const auto& [name, m] : s.mean) metrics[name] = matrix_json(m);
    v["metrics"] = std::move(metrics);
    j[std::string(to_string(s.variant))] = std::move(v);
  }
  return j.dump(2) + "\n";
}

std::string summary_json(const Aggregates& a) {
  json j;
  j["zero_occlusion_fraction"] = a.zero_occlusion_fraction;
  j["failed_ids"] = a.failed_ids;
  return j.dump(2) + "\n";
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string records;
  for (const auto& r : report.records) records += to_json_line(r) + "\n";
  std::string predictions;
  for (const auto& p : report.predictions) predictions += to_json_line(p) + "\n";
  write_file(dir / "records.jsonl", records);
  write_file(dir / "predictions.jsonl", predictions);
  write_file(dir / "metadata.json", metadata_json(report.metadata));
  write_file(dir / "accuracy.csv", accuracy_csv(report.aggregates));
  write_file(dir / "faithfulness.csv", faithfulness_csv(report.aggregates));
  write_file(dir / "faithfulness_at_k.csv", faithfulness_at_k_csv(report.aggregates));
  write_file(dir / "agreement.json", agreement_json(report.aggregates));
  write_file(dir / "summary.json", summary_json(report.aggregates));
}

Report read_report(const std::filesystem::path& dir) {
  Report report;
  try {
    report.metadata = metadata_from_json(read_file(dir / "metadata.json"));
  } catch (const json::exception& e) {
    throw LoadError(std::string("metadata.json: ") + e.what(), 0);
  }
  report.records = read_lines<EvalRecord>(dir / "records.jsonl", eval_record_from_json);
  report.predictions = read_lines<PredictionRecord>(dir / "predictions.jsonl", prediction_record_from_json);
  report.aggregates = aggregate(report.predictions, report.records);
  return report;
}

}  // namespace selfexp
