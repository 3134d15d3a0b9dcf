#pragma once

#include <optional>
#include <string>
#include <vector>

#include "faircompose/dataset.hpp"
#include "faircompose/mitigation_in.hpp"
#include "faircompose/mitigation_post.hpp"
#include "faircompose/mitigation_pre.hpp"
#include "faircompose/models.hpp"

namespace faircompose {

struct ModelSpec {
  std::string kind;
  Hyperparams params;
};

struct StagePre {
  std::string name;  // reweigh | lfr
  LfrParams lfr;
  bool lfr_seed_set = false;
};

struct StageIn {
  std::string name;  // expgrad | gridsearch
  FairnessConstraint constraint;
  ExpGradParams expgrad;
  double grid_min = -2.0;
  double grid_max = 2.0;
  std::size_t grid_points = 21;

  std::vector<double> multiplier_grid() const;
};

struct StagePost {
  std::string name;  // roc | ceodds | threshopt
  double di_low = 0.8;
  double di_high = 1.25;
  CostMode cost_mode = CostMode::Weighted;
  double cost_tol = 0.02;
  ConstraintKind constraint = ConstraintKind::DemographicParity;
  double tol = 0.02;
};

struct ExplainSpec {
  std::size_t count = 10;
  std::size_t samples = 5000;
  double kernel_width = 0.0;  // 0: default 0.75*sqrt(d)
  std::size_t top_k = 10;
};

/// One validated composition: a dataset, splits, base models, at most one
/// intervention per stage class, and explanation settings.
struct PipelineConfig {
  bool use_synth = false;
  std::string csv_path;
  CsvSchema schema;
  SynthSpec synth;
  bool synth_seed_set = false;

  SplitSpec splits{0.6, 0.2, 0.2, 0};
  bool split_seed_set = false;

  std::vector<ModelSpec> models;
  std::optional<StagePre> pre;
  std::optional<StageIn> in_stage;
  std::optional<StagePost> post;
  ExplainSpec explain;

  std::uint64_t seed = 0;
  std::string seed_source = "config";
  std::vector<std::string> defaults_applied;
};

/// Parses and validates a config document. Unknown keys are rejected;
/// duplicated stage classes raise a composition error; an equalized-odds
/// in-stage combined with a DI-scored reject-option post stage raises a
/// compatibility error.
PipelineConfig parse_config(const std::string& text);

/// Reads a config file; relative dataset paths resolve against its directory.
PipelineConfig load_config_file(const std::string& path);

/// Normalized round-trippable view with every effective value filled in.
std::string normalized_yaml(const PipelineConfig& cfg);

}  // namespace faircompose
