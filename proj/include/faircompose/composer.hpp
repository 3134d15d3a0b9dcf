#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faircompose/config.hpp"
#include "faircompose/explain.hpp"
#include "faircompose/metrics.hpp"

namespace faircompose {

struct ExplanationReport {
  std::size_t instance = 0;
  Explanation explanation;
  FaithfulnessScore faithfulness;
};

/// Metrics bundle plus explanations emitted after one executed stage prefix.
struct StageReport {
  std::string model;
  std::string stage;  // base | pre | pre+in | ... per executed prefix
  MetricBundle metrics;
  double threshold = 0.5;
  bool stage_internal_threshold = false;  // post stages emit hard decisions
  std::map<std::string, std::string> params;
  std::vector<std::string> flags;
  std::vector<ExplanationReport> explanations;
  double faithfulness_mean = 0.0;
  bool faithfulness_mean_defined = false;

  // Test-split outputs kept for verification; not serialized.
  std::vector<double> test_scores;
  std::vector<int> test_preds;
};

struct RunResult {
  PipelineConfig config;
  std::string run_id;
  std::vector<StageReport> reports;  // model-major, stage order
  // One entry per model whose pipeline aborted: "model: stage: message".
  std::vector<std::string> errors;
  std::vector<std::size_t> explain_ids;

  bool aborted() const { return !errors.empty(); }
};

/// Executes every configured model's pipeline: baseline fit, then the
/// optional pre, in, and post stages, re-tuning the decision threshold on
/// validation scores after every stage and reporting metrics on the test
/// split. Distinct models run concurrently up to `jobs`.
RunResult run_pipeline(const PipelineConfig& cfg, unsigned jobs = 1);

nlohmann::ordered_json report_json(const RunResult& run);
std::string report_csv(const RunResult& run);

/// Writes run.json and/or run.csv under out_dir. format: json | csv | both.
void emit_report(const RunResult& run, const std::string& format,
                 const std::string& out_dir);

struct DeltaRow {
  std::string model;
  std::string stage;
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;
  std::string note;  // "", "missing-in-a", "missing-in-b"
};

/// Per (model, stage, metric) signed differences B - A between two report
/// documents sharing a dataset.
std::vector<DeltaRow> compare_runs(const nlohmann::ordered_json& a,
                                   const nlohmann::ordered_json& b);
std::string delta_csv(const std::vector<DeltaRow>& rows);

}  // namespace faircompose
