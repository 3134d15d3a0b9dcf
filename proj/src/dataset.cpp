#include "faircompose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace faircompose {

void TabularDataset::validate() const {
  const std::size_t rows = features.rows();
  if (labels.size() != rows || groups.size() != rows || weights.size() != rows)
    fail(ErrorKind::Data, "row count mismatch between features, labels, groups, weights");
  if (feature_names.size() != features.cols() || column_kinds.size() != features.cols())
    fail(ErrorKind::Data, "column metadata does not match feature width");
  for (double w : weights)
    if (!(w > 0.0)) fail(ErrorKind::Data, "all instance weights must be positive");
  for (int y : labels)
    if (y != 0 && y != 1) fail(ErrorKind::Data, "labels must be binary");
  for (int g : groups)
    if (g != 0 && g != 1) fail(ErrorKind::Data, "group indicators must be binary");
}

namespace {

// Minimal CSV reader: comma separated, optional double quotes, quotes
// escaped by doubling. No embedded newlines.
std::vector<std::string> parse_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted)
    fail(ErrorKind::Data, "unterminated quote on line " + std::to_string(line_no));
  fields.push_back(cur);
  return fields;
}

bool parse_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return false;
  *out = v;
  return true;
}

}  // namespace

TabularDataset load_csv_text(const std::string& text, const CsvSchema& schema,
                             const std::string& source_name) {
  std::vector<std::vector<std::string>> rows;
  {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
      rows.push_back(parse_csv_line(line, line_no));
    }
  }
  if (rows.size() < 2) fail(ErrorKind::Data, "CSV needs a header row and at least one data row");

  const std::vector<std::string>& header = rows.front();
  auto col_index = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };

  const auto label_idx = col_index(schema.label_column);
  if (!label_idx)
    fail(ErrorKind::Schema, "label column '" + schema.label_column + "' not in header");
  const auto prot_idx = col_index(schema.protected_column);
  if (!prot_idx)
    fail(ErrorKind::Schema, "protected column '" + schema.protected_column + "' not in header");
  for (const auto& cat : schema.categorical)
    if (!col_index(cat))
      fail(ErrorKind::Schema, "categorical column '" + cat + "' not in header");

  const std::size_t n = rows.size() - 1;
  for (std::size_t r = 1; r <= n; ++r) {
    if (rows[r].size() != header.size())
      fail(ErrorKind::Data, "row " + std::to_string(r + 1) + " has " +
                                std::to_string(rows[r].size()) + " fields, expected " +
                                std::to_string(header.size()));
    for (const auto& f : rows[r])
      if (f.empty()) fail(ErrorKind::Data, "missing value on row " + std::to_string(r + 1));
  }

  // Labels: the column must be binary in raw form, favorable_raw maps to 1.
  std::set<std::string> label_values;
  for (std::size_t r = 1; r <= n; ++r) label_values.insert(rows[r][*label_idx]);
  if (!label_values.count(schema.favorable_raw))
    fail(ErrorKind::Schema, "favorable value '" + schema.favorable_raw +
                                "' never occurs in label column");
  if (label_values.size() != 2)
    fail(ErrorKind::Data, "label column is not binary (" +
                              std::to_string(label_values.size()) + " distinct values)");

  bool priv_seen = false;
  for (std::size_t r = 1; r <= n; ++r)
    if (rows[r][*prot_idx] == schema.privileged_raw) priv_seen = true;
  if (!priv_seen)
    fail(ErrorKind::Schema, "privileged value '" + schema.privileged_raw +
                                "' never occurs in protected column");

  TabularDataset ds;
  ds.labels.reserve(n);
  ds.groups.reserve(n);
  for (std::size_t r = 1; r <= n; ++r) {
    ds.labels.push_back(rows[r][*label_idx] == schema.favorable_raw ? 1 : 0);
    ds.groups.push_back(rows[r][*prot_idx] == schema.privileged_raw ? 1 : 0);
  }
  if (std::count(ds.groups.begin(), ds.groups.end(), 0) == 0)
    fail(ErrorKind::Data, "unprivileged group is empty after mapping");
  if (std::count(ds.labels.begin(), ds.labels.end(), 1) == 0 ||
      std::count(ds.labels.begin(), ds.labels.end(), 0) == 0)
    fail(ErrorKind::Data, "a label class is empty after mapping");

  const std::set<std::string> cat_set(schema.categorical.begin(), schema.categorical.end());

  // Encoded column layout: source columns in header order, categorical ones
  // expanded into sorted levels, the protected indicator appended last.
  struct EncodedCol {
    std::string name;
    ColumnKind kind;
    int group;
    std::size_t src;
    std::string level;  // for one-hot columns
  };
  std::vector<EncodedCol> cols;
  int next_group = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *label_idx || c == *prot_idx) continue;
    if (cat_set.count(header[c])) {
      std::set<std::string> levels;
      for (std::size_t r = 1; r <= n; ++r) levels.insert(rows[r][c]);
      const int gid = next_group++;
      for (const auto& lv : levels)
        cols.push_back({header[c] + "=" + lv, ColumnKind::Binary, gid, c, lv});
    } else {
      cols.push_back({header[c], ColumnKind::Continuous, -1, c, ""});
    }
  }
  if (schema.include_protected)
    cols.push_back({schema.protected_column, ColumnKind::Binary, -1, *prot_idx, ""});

  ds.features = Matrix(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const EncodedCol& ec = cols[j];
    ds.feature_names.push_back(ec.name);
    ds.column_kinds.push_back(ec.kind);
    ds.onehot_group.push_back(ec.group);
    for (std::size_t r = 1; r <= n; ++r) {
      double v = 0.0;
      if (ec.src == *prot_idx) {
        v = ds.groups[r - 1];
      } else if (ec.kind == ColumnKind::Binary) {
        v = rows[r][ec.src] == ec.level ? 1.0 : 0.0;
      } else if (!parse_number(rows[r][ec.src], &v)) {
        fail(ErrorKind::Data, "column '" + ec.name + "' row " + std::to_string(r + 1) +
                                  ": not a number ('" + rows[r][ec.src] + "')");
      }
      ds.features(r - 1, j) = v;
    }
  }
  if (schema.include_protected) ds.protected_col = static_cast<int>(cols.size()) - 1;

  ds.weights.assign(n, 1.0);
  ds.favorable_raw = schema.favorable_raw;
  ds.source_name = source_name;
  ds.split_tag = "full";
  ds.validate();
  return ds;
}

TabularDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_text(buf.str(), schema, path);
}

namespace {

TabularDataset take_rows(const TabularDataset& ds, std::span<const std::size_t> idx,
                         const std::string& tag) {
  TabularDataset out;
  out.features = Matrix(idx.size(), ds.dim());
  out.feature_names = ds.feature_names;
  out.column_kinds = ds.column_kinds;
  out.onehot_group = ds.onehot_group;
  out.favorable_raw = ds.favorable_raw;
  out.protected_col = ds.protected_col;
  out.source_name = ds.source_name;
  out.split_tag = tag;
  out.labels.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    std::copy_n(ds.features.row(i), ds.dim(), out.features.row(k));
    out.labels.push_back(ds.labels[i]);
    out.groups.push_back(ds.groups[i]);
    out.weights.push_back(ds.weights[i]);
  }
  return out;
}

const char* cell_name(int g, int y) {
  if (g == 1) return y == 1 ? "(privileged, favorable)" : "(privileged, unfavorable)";
  return y == 1 ? "(unprivileged, favorable)" : "(unprivileged, unfavorable)";
}

}  // namespace

std::array<TabularDataset, 3> split(const TabularDataset& ds, const SplitSpec& spec) {
  const double fsum = spec.train_frac + spec.valid_frac + spec.test_frac;
  if (std::fabs(fsum - 1.0) > 1e-9)
    fail(ErrorKind::Split, "split fractions must sum to 1");
  for (double f : {spec.train_frac, spec.valid_frac, spec.test_frac})
    if (!(f > 0.0 && f < 1.0)) fail(ErrorKind::Split, "each split fraction must lie in (0,1)");

  const std::size_t n = ds.n();
  const std::size_t n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.valid_frac));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_frac));
  if (n_valid + n_test >= n) fail(ErrorKind::Split, "dataset too small for requested fractions");
  const std::size_t n_train = n - n_valid - n_test;  // remainder goes to train

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(spec.seed);
  shuffle_indices(idx, rng);

  std::array<TabularDataset, 3> out = {
      take_rows(ds, {idx.data(), n_train}, "train"),
      take_rows(ds, {idx.data() + n_train, n_valid}, "valid"),
      take_rows(ds, {idx.data() + n_train + n_valid, n_test}, "test"),
  };

  for (const auto& part : out) {
    long long cell[2][2] = {};
    for (std::size_t i = 0; i < part.n(); ++i) ++cell[part.groups[i]][part.labels[i]];
    for (int g = 0; g < 2; ++g)
      for (int y = 0; y < 2; ++y)
        if (cell[g][y] < 2)
          fail(ErrorKind::Split, part.split_tag + " split has " + std::to_string(cell[g][y]) +
                                     " instance(s) of cell " + cell_name(g, y) +
                                     "; need at least 2");
  }
  return out;
}

ScalerParams standardize(TabularDataset& train, std::span<TabularDataset*> others) {
  if (train.n() == 0) fail(ErrorKind::Data, "cannot standardize an empty training set");
  const std::size_t d = train.dim();
  ScalerParams p;
  p.mean.assign(d, 0.0);
  p.stddev.assign(d, 1.0);
  p.scaled.assign(d, false);

  const double n = static_cast<double>(train.n());
  for (std::size_t j = 0; j < d; ++j) {
    if (train.column_kinds[j] == ColumnKind::Binary) continue;
    double mean = 0.0;
    for (std::size_t i = 0; i < train.n(); ++i) mean += train.features(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < train.n(); ++i) {
      const double dv = train.features(i, j) - mean;
      var += dv * dv;
    }
    var /= n;
    p.mean[j] = mean;
    if (var > 1e-24) {
      p.stddev[j] = std::sqrt(var);
      p.scaled[j] = true;
    }
  }

  auto apply = [&](TabularDataset& ds) {
    for (std::size_t j = 0; j < d; ++j) {
      if (ds.column_kinds[j] == ColumnKind::Binary) continue;
      for (std::size_t i = 0; i < ds.n(); ++i) {
        double v = ds.features(i, j) - p.mean[j];
        if (p.scaled[j]) v /= p.stddev[j];
        ds.features(i, j) = v;
      }
    }
  };
  apply(train);
  for (TabularDataset* other : others) apply(*other);
  return p;
}

TabularDataset synth_biased(const SynthSpec& spec) {
  if (spec.n < 100) fail(ErrorKind::Parameter, "synth_biased requires n >= 100");
  if (spec.d < 2) fail(ErrorKind::Parameter, "synth_biased requires d >= 2");
  if (spec.label_gap < -1.0 || spec.label_gap > 1.0)
    fail(ErrorKind::Parameter, "label_gap " + format_double(spec.label_gap) +
                                   " would push a group rate outside [0,1]");
  if (spec.score_noise < 0.0) fail(ErrorKind::Parameter, "score_noise must be nonnegative");

  const std::size_t n = spec.n, d = spec.d;
  Rng rng(spec.seed);

  std::vector<int> groups(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) groups[i] = 1;
  {
    // Shuffle group assignment so row order carries no structure.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle_indices(idx, rng);
    std::vector<int> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = groups[idx[i]];
    groups = std::move(shuffled);
  }

  const double rate_priv = 0.5 - spec.label_gap / 2.0;
  const double rate_unpriv = 0.5 + spec.label_gap / 2.0;
  const double latent_sd = std::sqrt(1.0 + spec.score_noise * spec.score_noise);
  const double shift[2] = {-0.5, 0.5};  // unpriv, priv shift of feature 0
  const double cutoff[2] = {
      shift[0] + inverse_normal_cdf(1.0 - rate_unpriv) * latent_sd,
      shift[1] + inverse_normal_cdf(1.0 - rate_priv) * latent_sd,
  };

  const std::size_t width = d + (spec.include_protected ? 1 : 0);
  TabularDataset ds;
  ds.features = Matrix(n, width);
  ds.labels.resize(n);
  ds.groups = groups;
  ds.weights.assign(n, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    ds.feature_names.push_back("f" + std::to_string(j));
    ds.column_kinds.push_back(ColumnKind::Continuous);
    ds.onehot_group.push_back(-1);
  }
  if (spec.include_protected) {
    ds.feature_names.push_back("group");
    ds.column_kinds.push_back(ColumnKind::Binary);
    ds.onehot_group.push_back(-1);
    ds.protected_col = static_cast<int>(d);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const int g = groups[i];
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rng.gaussian();
    ds.features(i, 0) += shift[g];
    const double latent = ds.features(i, 0) + spec.score_noise * rng.gaussian();
    ds.labels[i] = latent >= cutoff[g] ? 1 : 0;
    if (spec.include_protected) ds.features(i, d) = g;
  }

  ds.favorable_raw = "1";
  ds.source_name = "synth";
  ds.split_tag = "full";
  ds.validate();
  return ds;
}

void write_dataset_csv(const TabularDataset& ds, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(ErrorKind::Io, "cannot write '" + path + "'");
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    if (static_cast<int>(j) == ds.protected_col) continue;
    std::fprintf(f, "%s,", ds.feature_names[j].c_str());
  }
  std::fprintf(f, "group,outcome\n");
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (static_cast<int>(j) == ds.protected_col) continue;
      std::fprintf(f, "%s,", format_double(ds.features(i, j)).c_str());
    }
    std::fprintf(f, "%s,%d\n", ds.groups[i] == 1 ? "priv" : "unpriv", ds.labels[i]);
  }
  std::fclose(f);
}

CsvSchema synth_csv_schema() {
  CsvSchema s;
  s.label_column = "outcome";
  s.favorable_raw = "1";
  s.protected_column = "group";
  s.privileged_raw = "priv";
  return s;
}

}  // namespace faircompose
