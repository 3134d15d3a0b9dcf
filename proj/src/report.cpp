#include <filesystem>
#include <fstream>
#include <map>

#include "faircompose/composer.hpp"

namespace faircompose {

namespace {

using nlohmann::ordered_json;

ordered_json metrics_json(const MetricBundle& m) {
  ordered_json j;
  j["accuracy"] = m.accuracy;
  j["balanced_accuracy"] = m.balanced_accuracy;
  j["roc_auc"] = m.roc_auc;
  j["spd"] = m.spd;
  if (m.di_infinite)
    j["di"] = nullptr;
  else
    j["di"] = m.di;
  j["di_infinite"] = m.di_infinite;
  j["eod"] = m.eod;
  j["aod"] = m.aod;
  j["selection_rate_priv"] = m.rates.selection_priv;
  j["selection_rate_unpriv"] = m.rates.selection_unpriv;
  j["tpr_priv"] = m.rates.tpr_priv;
  j["tpr_unpriv"] = m.rates.tpr_unpriv;
  j["fpr_priv"] = m.rates.fpr_priv;
  j["fpr_unpriv"] = m.rates.fpr_unpriv;
  return j;
}

std::string dataset_source(const PipelineConfig& cfg) {
  if (!cfg.use_synth) return cfg.csv_path;
  return "synth(n=" + std::to_string(cfg.synth.n) + ",d=" + std::to_string(cfg.synth.d) +
         ",gap=" + format_double(cfg.synth.label_gap) +
         ",noise=" + format_double(cfg.synth.score_noise) + ")";
}

}  // namespace

ordered_json report_json(const RunResult& run) {
  ordered_json j;
  j["run_id"] = run.run_id;
  ordered_json echo;
  echo["dataset_source"] = dataset_source(run.config);
  echo["seed"] = run.config.seed;
  echo["seed_source"] = run.config.seed_source;
  echo["normalized"] = normalized_yaml(run.config);
  j["config_echo"] = std::move(echo);
  j["explain_instances"] = run.explain_ids;
  j["errors"] = run.errors;

  ordered_json reports = ordered_json::array();
  for (const StageReport& rep : run.reports) {
    ordered_json r;
    r["model"] = rep.model;
    r["stage"] = rep.stage;
    r["metrics"] = metrics_json(rep.metrics);
    if (rep.stage_internal_threshold)
      r["threshold"] = "stage-internal";
    else
      r["threshold"] = rep.threshold;
    r["params"] = rep.params;
    r["flags"] = rep.flags;
    ordered_json expls = ordered_json::array();
    for (const ExplanationReport& er : rep.explanations) {
      ordered_json e;
      e["instance"] = er.instance;
      ordered_json feats = ordered_json::array();
      for (std::size_t k = 0; k < er.explanation.weights.size(); ++k) {
        feats.push_back({{"name", er.explanation.names[k]},
                         {"weight", er.explanation.weights[k]}});
      }
      e["features"] = std::move(feats);
      e["intercept"] = er.explanation.intercept;
      e["r2"] = er.explanation.r2;
      if (er.faithfulness.defined)
        e["faithfulness"] = er.faithfulness.value;
      else
        e["faithfulness"] = nullptr;
      expls.push_back(std::move(e));
    }
    r["explanations"] = std::move(expls);
    if (rep.faithfulness_mean_defined)
      r["faithfulness_mean"] = rep.faithfulness_mean;
    else
      r["faithfulness_mean"] = nullptr;
    reports.push_back(std::move(r));
  }
  j["reports"] = std::move(reports);
  return j;
}

std::string report_csv(const RunResult& run) {
  std::string out =
      "model,stage,accuracy,balanced_accuracy,roc_auc,spd,di,eod,aod,"
      "selection_rate_priv,selection_rate_unpriv,threshold,faithfulness_mean,flags\n";
  for (const StageReport& rep : run.reports) {
    const MetricBundle& m = rep.metrics;
    out += rep.model + "," + rep.stage + ",";
    out += format_double(m.accuracy) + "," + format_double(m.balanced_accuracy) + ",";
    out += format_double(m.roc_auc) + "," + format_double(m.spd) + ",";
    out += (m.di_infinite ? "inf" : format_double(m.di)) + ",";
    out += format_double(m.eod) + "," + format_double(m.aod) + ",";
    out += format_double(m.rates.selection_priv) + ",";
    out += format_double(m.rates.selection_unpriv) + ",";
    out += rep.stage_internal_threshold ? "stage-internal" : format_double(rep.threshold);
    out += ",";
    out += rep.faithfulness_mean_defined ? format_double(rep.faithfulness_mean) : "";
    out += ",";
    for (std::size_t i = 0; i < rep.flags.size(); ++i) {
      if (i) out += ';';
      for (char c : rep.flags[i]) out += c == ',' ? ';' : c;
    }
    out += "\n";
  }
  return out;
}

void emit_report(const RunResult& run, const std::string& format,
                 const std::string& out_dir) {
  if (run.reports.empty()) fail(ErrorKind::Parameter, "no reports to emit");
  if (format != "json" && format != "csv" && format != "both")
    fail(ErrorKind::Parameter, "format must be json, csv, or both");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + out_dir + "'");

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot write '" + path + "'");
    f << content;
  };
  if (format == "json" || format == "both")
    write_file("run.json", report_json(run).dump(2) + "\n");
  if (format == "csv" || format == "both") write_file("run.csv", report_csv(run));
}

std::vector<DeltaRow> compare_runs(const nlohmann::ordered_json& a,
                                   const nlohmann::ordered_json& b) {
  const std::string src_a = a.at("config_echo").at("dataset_source").get<std::string>();
  const std::string src_b = b.at("config_echo").at("dataset_source").get<std::string>();
  if (src_a != src_b)
    fail(ErrorKind::Parameter,
         "runs compare different datasets: '" + src_a + "' vs '" + src_b + "'");

  static const char* kMetrics[] = {"accuracy", "balanced_accuracy", "roc_auc", "spd",
                                   "di",       "eod",               "aod"};

  auto key_of = [](const nlohmann::ordered_json& r) {
    return r.at("model").get<std::string>() + "|" + r.at("stage").get<std::string>();
  };
  std::map<std::string, const nlohmann::ordered_json*> in_b;
  for (const auto& r : b.at("reports")) in_b[key_of(r)] = &r;

  std::vector<DeltaRow> rows;
  std::map<std::string, bool> seen;
  for (const auto& ra : a.at("reports")) {
    const std::string key = key_of(ra);
    seen[key] = true;
    const auto it = in_b.find(key);
    const std::string model = ra.at("model").get<std::string>();
    const std::string stage = ra.at("stage").get<std::string>();
    if (it == in_b.end()) {
      rows.push_back({model, stage, "", 0.0, 0.0, 0.0, "missing-in-b"});
      continue;
    }
    const auto& rb = *it->second;
    auto add_metric = [&](const std::string& name, const nlohmann::ordered_json& va,
                          const nlohmann::ordered_json& vb) {
      DeltaRow row{model, stage, name, 0.0, 0.0, 0.0, ""};
      if (va.is_null() || vb.is_null()) {
        row.note = "undefined";
      } else {
        row.a = va.get<double>();
        row.b = vb.get<double>();
        row.delta = row.b - row.a;
      }
      rows.push_back(std::move(row));
    };
    for (const char* name : kMetrics)
      add_metric(name, ra.at("metrics").at(name), rb.at("metrics").at(name));
    add_metric("faithfulness_mean", ra.at("faithfulness_mean"), rb.at("faithfulness_mean"));
  }
  for (const auto& rb : b.at("reports")) {
    const std::string key = key_of(rb);
    if (!seen.count(key))
      rows.push_back({rb.at("model").get<std::string>(), rb.at("stage").get<std::string>(),
                      "", 0.0, 0.0, 0.0, "missing-in-a"});
  }
  return rows;
}

std::string delta_csv(const std::vector<DeltaRow>& rows) {
  std::string out = "model,stage,metric,a,b,delta,note\n";
  for (const DeltaRow& r : rows) {
    out += r.model + "," + r.stage + "," + r.metric + ",";
    if (r.note.empty()) {
      out += format_double(r.a) + "," + format_double(r.b) + "," + format_double(r.delta);
    } else {
      out += ",,";
    }
    out += "," + r.note + "\n";
  }
  return out;
}

}  // namespace faircompose
