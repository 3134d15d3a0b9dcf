#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faircompose/core.hpp"

namespace faircompose {

/// Column kind after encoding. Binary columns (one-hot levels and the
/// protected indicator) are never rescaled by standardize.
enum class ColumnKind { Continuous, Binary };

/// Immutable-after-construction tabular dataset. Labels are remapped so
/// 1 is always the favorable outcome; groups use 1 for privileged.
struct TabularDataset {
  Matrix features;  // n x d, row major
  std::vector<std::string> feature_names;
  std::vector<ColumnKind> column_kinds;
  // Columns expanded from the same categorical source share a group id;
  // -1 for continuous and standalone binary columns.
  std::vector<int> onehot_group;
  std::vector<int> labels;
  std::vector<int> groups;
  std::vector<double> weights;
  std::string favorable_raw;
  // Index of the protected indicator inside features, or -1 when the
  // protected attribute is not fed to classifiers.
  int protected_col = -1;
  std::string source_name;
  std::string split_tag;

  std::size_t n() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  /// Checks the representation invariants; throws a Data error on violation.
  void validate() const;
};

struct SplitSpec {
  double train_frac = 0.6;
  double valid_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;
};

struct CsvSchema {
  std::string label_column;
  std::string favorable_raw;
  std::string protected_column;
  std::string privileged_raw;
  std::vector<std::string> categorical;
  bool include_protected = true;
};

/// Loads a comma-separated file with a header row. Categorical feature
/// columns are one-hot encoded (levels sorted lexicographically, column
/// names "col=value"); all other feature columns must parse as numbers.
/// Missing values are rejected.
TabularDataset load_csv(const std::string& path, const CsvSchema& schema);

/// Same as load_csv but over an in-memory document.
TabularDataset load_csv_text(const std::string& text, const CsvSchema& schema,
                             const std::string& source_name);

/// Deterministic shuffled split. Sizes are floor(n*frac) for valid and test
/// with the remainder going to train. Fails with a Split error if any
/// resulting split holds fewer than 2 instances of some (group, label) cell.
std::array<TabularDataset, 3> split(const TabularDataset& ds, const SplitSpec& spec);

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> scaled;  // false: binary column or zero variance (center only)
};

/// Standardizes continuous columns of train to mean 0 / variance 1 and
/// applies the train parameters to the other splits. Zero-variance columns
/// are centered only; binary columns are untouched.
ScalerParams standardize(TabularDataset& train, std::span<TabularDataset*> others);

struct SynthSpec {
  std::size_t n = 1000;
  std::size_t d = 4;
  double label_gap = 0.0;    // favorable-rate difference, unpriv - priv
  double score_noise = 0.5;  // latent label noise scale
  std::uint64_t seed = 0;
  bool include_protected = true;
};

/// Generates a half-privileged population with Gaussian features whose
/// favorable-label rates differ between groups by approximately label_gap.
/// Feature 0 carries the label signal and is shifted +/-0.5 by group.
TabularDataset synth_biased(const SynthSpec& spec);

/// Writes a dataset back to CSV in a form load_csv can ingest: feature
/// columns, a "group" column with priv/unpriv, and an "outcome" label column.
void write_dataset_csv(const TabularDataset& ds, const std::string& path);

/// The schema matching write_dataset_csv output.
CsvSchema synth_csv_schema();

}  // namespace faircompose
