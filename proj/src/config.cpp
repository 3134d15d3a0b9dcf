#include "faircompose/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace faircompose {

std::vector<double> StageIn::multiplier_grid() const {
  if (grid_points < 1) fail(ErrorKind::Parameter, "gridsearch needs grid_points >= 1");
  std::vector<double> grid;
  grid.reserve(grid_points);
  if (grid_points == 1) {
    grid.push_back(grid_min);
    return grid;
  }
  const double step = (grid_max - grid_min) / static_cast<double>(grid_points - 1);
  for (std::size_t i = 0; i < grid_points; ++i)
    grid.push_back(grid_min + step * static_cast<double>(i));
  return grid;
}

namespace {

// Rejects unknown and duplicated keys. Duplicated pipeline stage classes are
// a composition error; everything else a config error.
void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& context, ErrorKind dup_kind = ErrorKind::Config) {
  if (!node.IsMap()) fail(ErrorKind::Config, context + " must be a mapping");
  std::set<std::string> seen;
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      fail(ErrorKind::Config, "unknown key '" + key + "' in " + context);
    if (!seen.insert(key).second)
      fail(dup_kind, "key '" + key + "' appears more than once in " + context);
  }
}

double get_number(const YAML::Node& node, const std::string& context) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    fail(ErrorKind::Config, context + " must be a number");
  }
}

std::string get_string(const YAML::Node& node, const std::string& context) {
  try {
    return node.as<std::string>();
  } catch (const YAML::Exception&) {
    fail(ErrorKind::Config, context + " must be a string");
  }
}

std::uint64_t get_seed(const YAML::Node& node, const std::string& context) {
  try {
    return node.as<unsigned long long>();
  } catch (const YAML::Exception&) {
    fail(ErrorKind::Config, context + " must be a nonnegative integer");
  }
}

bool get_bool(const YAML::Node& node, const std::string& context) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    fail(ErrorKind::Config, context + " must be a boolean");
  }
}

Hyperparams get_params_map(const YAML::Node& node, const std::string& context) {
  Hyperparams out;
  if (!node) return out;
  if (!node.IsMap()) fail(ErrorKind::Config, context + " must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (out.count(key))
      fail(ErrorKind::Config, "key '" + key + "' appears more than once in " + context);
    out[key] = get_number(kv.second, context + "." + key);
  }
  return out;
}

void parse_dataset(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"path", "schema", "synth", "include_protected"}, "dataset");
  const bool has_path = static_cast<bool>(node["path"]);
  const bool has_synth = static_cast<bool>(node["synth"]);
  if (has_path == has_synth)
    fail(ErrorKind::Config, "dataset needs exactly one of 'path' or 'synth'");

  bool include_protected = true;
  if (node["include_protected"])
    include_protected = get_bool(node["include_protected"], "dataset.include_protected");

  if (has_synth) {
    cfg.use_synth = true;
    const YAML::Node sy = node["synth"];
    check_keys(sy, {"n", "d", "gap", "noise", "seed"}, "dataset.synth");
    if (sy["n"]) cfg.synth.n = static_cast<std::size_t>(get_number(sy["n"], "dataset.synth.n"));
    if (sy["d"]) cfg.synth.d = static_cast<std::size_t>(get_number(sy["d"], "dataset.synth.d"));
    if (sy["gap"]) cfg.synth.label_gap = get_number(sy["gap"], "dataset.synth.gap");
    if (sy["noise"]) cfg.synth.score_noise = get_number(sy["noise"], "dataset.synth.noise");
    if (sy["seed"]) {
      cfg.synth.seed = get_seed(sy["seed"], "dataset.synth.seed");
      cfg.synth_seed_set = true;
    }
    cfg.synth.include_protected = include_protected;
    return;
  }

  cfg.csv_path = get_string(node["path"], "dataset.path");
  const YAML::Node sc = node["schema"];
  if (!sc) fail(ErrorKind::Config, "dataset.path requires a schema");
  check_keys(sc, {"label", "favorable", "protected", "privileged", "categorical"},
             "dataset.schema");
  for (const char* key : {"label", "favorable", "protected", "privileged"})
    if (!sc[key])
      fail(ErrorKind::Config, std::string("dataset.schema.") + key + " is required");
  cfg.schema.label_column = get_string(sc["label"], "dataset.schema.label");
  cfg.schema.favorable_raw = get_string(sc["favorable"], "dataset.schema.favorable");
  cfg.schema.protected_column = get_string(sc["protected"], "dataset.schema.protected");
  cfg.schema.privileged_raw = get_string(sc["privileged"], "dataset.schema.privileged");
  if (sc["categorical"]) {
    if (!sc["categorical"].IsSequence())
      fail(ErrorKind::Config, "dataset.schema.categorical must be a list");
    for (const auto& item : sc["categorical"])
      cfg.schema.categorical.push_back(get_string(item, "dataset.schema.categorical[]"));
  }
  cfg.schema.include_protected = include_protected;
}

void parse_splits(const YAML::Node& node, PipelineConfig& cfg) {
  if (!node) {
    cfg.defaults_applied.push_back("splits=0.6/0.2/0.2");
    return;
  }
  check_keys(node, {"train", "valid", "test", "seed"}, "splits");
  if (!node["train"] || !node["valid"] || !node["test"])
    fail(ErrorKind::Config, "splits requires train, valid, and test fractions");
  cfg.splits.train_frac = get_number(node["train"], "splits.train");
  cfg.splits.valid_frac = get_number(node["valid"], "splits.valid");
  cfg.splits.test_frac = get_number(node["test"], "splits.test");
  if (std::fabs(cfg.splits.train_frac + cfg.splits.valid_frac + cfg.splits.test_frac - 1.0) >
      1e-9)
    fail(ErrorKind::Config, "split fractions must sum to 1");
  if (node["seed"]) {
    cfg.splits.seed = get_seed(node["seed"], "splits.seed");
    cfg.split_seed_set = true;
  }
}

void parse_models(const YAML::Node& node, PipelineConfig& cfg) {
  if (!node || !node.IsSequence() || node.size() == 0)
    fail(ErrorKind::Config, "models must be a nonempty list");
  for (const auto& item : node) {
    check_keys(item, {"kind", "params"}, "models[]");
    if (!item["kind"]) fail(ErrorKind::Config, "models[].kind is required");
    ModelSpec spec;
    spec.kind = get_string(item["kind"], "models[].kind");
    spec.params = get_params_map(item["params"], "models[].params");
    // Validates the kind and every hyperparameter key.
    make_model(spec.kind, spec.params, 0);
    cfg.models.push_back(std::move(spec));
  }
}

double take(Hyperparams& hp, const std::string& key, double fallback) {
  auto it = hp.find(key);
  if (it == hp.end()) return fallback;
  const double v = it->second;
  hp.erase(it);
  return v;
}

void reject_leftovers(const Hyperparams& hp, const std::string& context) {
  if (!hp.empty())
    fail(ErrorKind::Config, "unknown key '" + hp.begin()->first + "' in " + context);
}

void parse_pre(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"name", "params"}, "pipeline.pre");
  StagePre st;
  st.name = node["name"] ? get_string(node["name"], "pipeline.pre.name") : "";
  Hyperparams hp = get_params_map(node["params"], "pipeline.pre.params");
  if (st.name == "reweigh") {
    reject_leftovers(hp, "pipeline.pre.params (reweigh has none)");
  } else if (st.name == "lfr") {
    st.lfr.k = static_cast<std::size_t>(take(hp, "k", 10));
    st.lfr.ax = take(hp, "ax", 0.01);
    st.lfr.ay = take(hp, "ay", 1.0);
    st.lfr.az = take(hp, "az", 50.0);
    st.lfr.max_iters = static_cast<std::size_t>(take(hp, "max_iters", 500));
    st.lfr.temperature = take(hp, "temperature", 1.0);
    st.lfr.relabel = take(hp, "relabel", 0) != 0.0;
    if (hp.count("seed")) {
      st.lfr.seed = static_cast<std::uint64_t>(take(hp, "seed", 0));
      st.lfr_seed_set = true;
    }
    reject_leftovers(hp, "pipeline.pre.params");
  } else {
    fail(ErrorKind::Config, "unknown pre-processor '" + st.name +
                                "' (expected reweigh or lfr)");
  }
  cfg.pre = std::move(st);
}

void parse_in(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"name", "constraint", "params"}, "pipeline.in");
  StageIn st;
  st.name = node["name"] ? get_string(node["name"], "pipeline.in.name") : "";
  if (st.name != "expgrad" && st.name != "gridsearch")
    fail(ErrorKind::Config, "unknown in-processor '" + st.name +
                                "' (expected expgrad or gridsearch)");
  if (node["constraint"])
    st.constraint.kind =
        parse_constraint(get_string(node["constraint"], "pipeline.in.constraint"));
  else
    cfg.defaults_applied.push_back("pipeline.in.constraint=demographic_parity");
  Hyperparams hp = get_params_map(node["params"], "pipeline.in.params");
  st.constraint.eps = take(hp, "eps", 0.01);
  if (st.name == "expgrad") {
    st.expgrad.max_rounds = static_cast<std::size_t>(take(hp, "max_rounds", 50));
    st.expgrad.eta = take(hp, "eta", 2.0);
    st.expgrad.bound = take(hp, "bound", 100.0);
  } else {
    st.grid_min = take(hp, "grid_min", -2.0);
    st.grid_max = take(hp, "grid_max", 2.0);
    st.grid_points = static_cast<std::size_t>(take(hp, "grid_points", 21));
  }
  reject_leftovers(hp, "pipeline.in.params");
  cfg.in_stage = std::move(st);
}

void parse_post(const YAML::Node& node, PipelineConfig& cfg) {
  check_keys(node, {"name", "constraint", "cost_mode", "params"}, "pipeline.post");
  StagePost st;
  st.name = node["name"] ? get_string(node["name"], "pipeline.post.name") : "";
  Hyperparams hp = get_params_map(node["params"], "pipeline.post.params");
  if (st.name == "roc") {
    if (node["constraint"] || node["cost_mode"])
      fail(ErrorKind::Config, "pipeline.post (roc) takes no constraint or cost_mode");
    st.di_low = take(hp, "di_low", 0.8);
    st.di_high = take(hp, "di_high", 1.25);
  } else if (st.name == "ceodds") {
    if (node["constraint"])
      fail(ErrorKind::Config, "pipeline.post (ceodds) takes no constraint");
    if (node["cost_mode"])
      st.cost_mode = parse_cost_mode(get_string(node["cost_mode"], "pipeline.post.cost_mode"));
    else
      cfg.defaults_applied.push_back("pipeline.post.cost_mode=weighted");
    st.cost_tol = take(hp, "cost_tol", 0.02);
  } else if (st.name == "threshopt") {
    if (node["cost_mode"])
      fail(ErrorKind::Config, "pipeline.post (threshopt) takes no cost_mode");
    if (node["constraint"])
      st.constraint =
          parse_constraint(get_string(node["constraint"], "pipeline.post.constraint"));
    st.tol = take(hp, "tol", 0.02);
  } else {
    fail(ErrorKind::Config, "unknown post-processor '" + st.name +
                                "' (expected roc, ceodds, or threshopt)");
  }
  reject_leftovers(hp, "pipeline.post.params");
  cfg.post = std::move(st);
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    fail(ErrorKind::Config, std::string("invalid YAML: ") + e.what());
  }
  check_keys(root, {"dataset", "splits", "models", "pipeline", "explain", "seed"},
             "top level");

  PipelineConfig cfg;
  if (!root["dataset"]) fail(ErrorKind::Config, "dataset section is required");
  parse_dataset(root["dataset"], cfg);
  parse_splits(root["splits"], cfg);
  parse_models(root["models"], cfg);

  if (root["pipeline"]) {
    const YAML::Node pl = root["pipeline"];
    // Duplicated stage classes violate the one-per-class composition rule.
    check_keys(pl, {"pre", "in", "post"}, "pipeline", ErrorKind::Composition);
    if (pl["pre"]) parse_pre(pl["pre"], cfg);
    if (pl["in"]) parse_in(pl["in"], cfg);
    if (pl["post"]) parse_post(pl["post"], cfg);
  }

  if (root["explain"]) {
    const YAML::Node ex = root["explain"];
    check_keys(ex, {"count", "samples", "kernel_width", "top_k"}, "explain");
    if (ex["count"])
      cfg.explain.count = static_cast<std::size_t>(get_number(ex["count"], "explain.count"));
    if (ex["samples"])
      cfg.explain.samples =
          static_cast<std::size_t>(get_number(ex["samples"], "explain.samples"));
    if (ex["kernel_width"])
      cfg.explain.kernel_width = get_number(ex["kernel_width"], "explain.kernel_width");
    if (ex["top_k"])
      cfg.explain.top_k = static_cast<std::size_t>(get_number(ex["top_k"], "explain.top_k"));
  }

  if (root["seed"])
    cfg.seed = get_seed(root["seed"], "seed");
  else
    cfg.defaults_applied.push_back("seed=0");

  // Compatibility: a DI-scored reject-option stage is inconsistent with an
  // equalized-odds in-stage constraint.
  if (cfg.in_stage && cfg.post && cfg.post->name == "roc" &&
      cfg.in_stage->constraint.kind == ConstraintKind::EqualizedOdds)
    fail(ErrorKind::Compatibility,
         "in-stage constraint equalized_odds is incompatible with a reject-option "
         "post stage scored on disparate impact; use demographic_parity");

  return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg = parse_config(buf.str());
  if (!cfg.use_synth) {
    std::filesystem::path p(cfg.csv_path);
    if (p.is_relative()) {
      cfg.csv_path = (std::filesystem::path(path).parent_path() / p).string();
    }
  }
  return cfg;
}

std::string normalized_yaml(const PipelineConfig& cfg) {
  YAML::Emitter out;
  out.SetFloatPrecision(17);
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  if (cfg.use_synth) {
    out << YAML::Key << "synth" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "n" << YAML::Value << cfg.synth.n;
    out << YAML::Key << "d" << YAML::Value << cfg.synth.d;
    out << YAML::Key << "gap" << YAML::Value << cfg.synth.label_gap;
    out << YAML::Key << "noise" << YAML::Value << cfg.synth.score_noise;
    if (cfg.synth_seed_set) out << YAML::Key << "seed" << YAML::Value << cfg.synth.seed;
    out << YAML::EndMap;
    out << YAML::Key << "include_protected" << YAML::Value << cfg.synth.include_protected;
  } else {
    out << YAML::Key << "path" << YAML::Value << cfg.csv_path;
    out << YAML::Key << "schema" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "label" << YAML::Value << cfg.schema.label_column;
    out << YAML::Key << "favorable" << YAML::Value << cfg.schema.favorable_raw;
    out << YAML::Key << "protected" << YAML::Value << cfg.schema.protected_column;
    out << YAML::Key << "privileged" << YAML::Value << cfg.schema.privileged_raw;
    out << YAML::Key << "categorical" << YAML::Value << YAML::Flow << cfg.schema.categorical;
    out << YAML::EndMap;
    out << YAML::Key << "include_protected" << YAML::Value << cfg.schema.include_protected;
  }
  out << YAML::EndMap;

  out << YAML::Key << "splits" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "train" << YAML::Value << cfg.splits.train_frac;
  out << YAML::Key << "valid" << YAML::Value << cfg.splits.valid_frac;
  out << YAML::Key << "test" << YAML::Value << cfg.splits.test_frac;
  if (cfg.split_seed_set) out << YAML::Key << "seed" << YAML::Value << cfg.splits.seed;
  out << YAML::EndMap;

  out << YAML::Key << "models" << YAML::Value << YAML::BeginSeq;
  for (const ModelSpec& m : cfg.models) {
    out << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << m.kind;
    const Hyperparams hp = [&] {
      Hyperparams merged = default_hyperparams(m.kind);
      for (const auto& [k, v] : m.params) merged[k] = v;
      return merged;
    }();
    out << YAML::Key << "params" << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (const auto& [k, v] : hp) out << YAML::Key << k << YAML::Value << v;
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "pipeline" << YAML::Value << YAML::BeginMap;
  if (cfg.pre) {
    out << YAML::Key << "pre" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.pre->name;
    if (cfg.pre->name == "lfr") {
      out << YAML::Key << "k" << YAML::Value << cfg.pre->lfr.k;
      out << YAML::Key << "ax" << YAML::Value << cfg.pre->lfr.ax;
      out << YAML::Key << "ay" << YAML::Value << cfg.pre->lfr.ay;
      out << YAML::Key << "az" << YAML::Value << cfg.pre->lfr.az;
      out << YAML::Key << "max_iters" << YAML::Value << cfg.pre->lfr.max_iters;
      out << YAML::Key << "temperature" << YAML::Value << cfg.pre->lfr.temperature;
      out << YAML::Key << "relabel" << YAML::Value << cfg.pre->lfr.relabel;
      if (cfg.pre->lfr_seed_set)
        out << YAML::Key << "seed" << YAML::Value << cfg.pre->lfr.seed;
    }
    out << YAML::EndMap;
  }
  if (cfg.in_stage) {
    out << YAML::Key << "in" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.in_stage->name;
    out << YAML::Key << "constraint" << YAML::Value
        << to_string(cfg.in_stage->constraint.kind);
    out << YAML::Key << "eps" << YAML::Value << cfg.in_stage->constraint.eps;
    if (cfg.in_stage->name == "expgrad") {
      out << YAML::Key << "max_rounds" << YAML::Value << cfg.in_stage->expgrad.max_rounds;
      out << YAML::Key << "eta" << YAML::Value << cfg.in_stage->expgrad.eta;
      out << YAML::Key << "bound" << YAML::Value << cfg.in_stage->expgrad.bound;
    } else {
      out << YAML::Key << "grid_min" << YAML::Value << cfg.in_stage->grid_min;
      out << YAML::Key << "grid_max" << YAML::Value << cfg.in_stage->grid_max;
      out << YAML::Key << "grid_points" << YAML::Value << cfg.in_stage->grid_points;
    }
    out << YAML::EndMap;
  }
  if (cfg.post) {
    out << YAML::Key << "post" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.post->name;
    if (cfg.post->name == "roc") {
      out << YAML::Key << "di_low" << YAML::Value << cfg.post->di_low;
      out << YAML::Key << "di_high" << YAML::Value << cfg.post->di_high;
    } else if (cfg.post->name == "ceodds") {
      out << YAML::Key << "cost_mode" << YAML::Value << to_string(cfg.post->cost_mode);
      out << YAML::Key << "cost_tol" << YAML::Value << cfg.post->cost_tol;
    } else {
      out << YAML::Key << "constraint" << YAML::Value << to_string(cfg.post->constraint);
      out << YAML::Key << "tol" << YAML::Value << cfg.post->tol;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "explain" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "count" << YAML::Value << cfg.explain.count;
  out << YAML::Key << "samples" << YAML::Value << cfg.explain.samples;
  out << YAML::Key << "kernel_width" << YAML::Value << cfg.explain.kernel_width;
  out << YAML::Key << "top_k" << YAML::Value << cfg.explain.top_k;
  out << YAML::EndMap;

  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "seed_source" << YAML::Value << cfg.seed_source;
  if (!cfg.defaults_applied.empty())
    out << YAML::Key << "defaults_applied" << YAML::Value << YAML::Flow
        << cfg.defaults_applied;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace faircompose
