// faircompose: compose fairness interventions around binary classifiers and
// report performance, fairness, and explanation-quality metrics per stage.
//
// Exit codes: 0 success, 2 configuration/validation errors, 3 runtime stage
// errors (partial reports are still written).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "faircompose/composer.hpp"

namespace fc = faircompose;

namespace {

int exit_code_for_config_error(const fc::Error& e) {
  std::cerr << e.what() << "\n";
  return 2;
}

fc::PipelineConfig load_with_env_seed(const std::string& path) {
  fc::PipelineConfig cfg = fc::load_config_file(path);
  if (const char* env = std::getenv("FAIRCOMPOSE_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      fc::fail(fc::ErrorKind::Config, "FAIRCOMPOSE_SEED is not a nonnegative integer");
    }
    cfg.seed_source = "env";
  }
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& format, unsigned jobs) {
  fc::PipelineConfig cfg;
  try {
    cfg = load_with_env_seed(config_path);
  } catch (const fc::Error& e) {
    return exit_code_for_config_error(e);
  }
  try {
    const fc::RunResult run = fc::run_pipeline(cfg, jobs);
    fc::emit_report(run, format, out_dir);
    if (run.aborted()) {
      for (const std::string& err : run.errors) std::cerr << err << "\n";
      return 3;
    }
    return 0;
  } catch (const fc::Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}

int cmd_validate(const std::string& config_path) {
  try {
    const fc::PipelineConfig cfg = fc::load_config_file(config_path);
    std::cout << fc::normalized_yaml(cfg);
    return 0;
  } catch (const fc::Error& e) {
    return exit_code_for_config_error(e);
  }
}

nlohmann::ordered_json load_report(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "run.json").string();
  std::ifstream in(path, std::ios::binary);
  if (!in) fc::fail(fc::ErrorKind::Io, "cannot open report '" + path + "'");
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fc::fail(fc::ErrorKind::Io, "cannot parse '" + path + "': " + e.what());
  }
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::string& out_path) {
  try {
    const auto rows = fc::compare_runs(load_report(dir_a), load_report(dir_b));
    std::ofstream f(out_path, std::ios::binary);
    if (!f) fc::fail(fc::ErrorKind::Io, "cannot write '" + out_path + "'");
    f << fc::delta_csv(rows);
    return 0;
  } catch (const fc::Error& e) {
    return exit_code_for_config_error(e);
  }
}

int cmd_synth(std::size_t n, std::size_t d, double gap, double noise,
              std::uint64_t seed, const std::string& out_path) {
  try {
    fc::SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.label_gap = gap;
    spec.score_noise = noise;
    spec.seed = seed;
    spec.include_protected = false;  // the CSV carries the group column itself
    const fc::TabularDataset ds = fc::synth_biased(spec);
    fc::write_dataset_csv(ds, out_path);
  } catch (const fc::Error& e) {
    return exit_code_for_config_error(e);
  }
  // Ready-to-paste dataset stanza for a run config.
  std::cout << "dataset:\n"
            << "  path: " << out_path << "\n"
            << "  schema:\n"
            << "    label: outcome\n"
            << "    favorable: \"1\"\n"
            << "    protected: group\n"
            << "    privileged: priv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compose fairness interventions and report per-stage metrics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "reports", format = "both";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  CLI::App* run = app.add_subcommand("run", "execute a pipeline config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory for reports");
  run->add_option("--format", format, "json|csv|both")
      ->check(CLI::IsMember({"json", "csv", "both"}));
  run->add_option("--jobs", jobs, "max concurrent model pipelines");

  std::string v_config;
  CLI::App* validate = app.add_subcommand("validate", "parse and check a config");
  validate->add_option("--config", v_config, "config file")->required();

  std::string dir_a, dir_b, cmp_out = "deltas.csv";
  CLI::App* compare = app.add_subcommand("compare", "diff two report directories");
  compare->add_option("--a", dir_a, "first report directory")->required();
  compare->add_option("--b", dir_b, "second report directory")->required();
  compare->add_option("--out", cmp_out, "delta CSV path");

  std::size_t n = 1000, d = 4;
  double gap = 0.0, noise = 0.5;
  std::uint64_t seed = 0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a biased synthetic CSV");
  synth->add_option("--n", n, "row count");
  synth->add_option("--d", d, "feature count");
  synth->add_option("--gap", gap, "favorable-rate gap, unpriv minus priv");
  synth->add_option("--noise", noise, "label noise scale");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--out", synth_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (run->parsed()) return cmd_run(config_path, out_dir, format, jobs);
  if (validate->parsed()) return cmd_validate(v_config);
  if (compare->parsed()) return cmd_compare(dir_a, dir_b, cmp_out);
  return cmd_synth(n, d, gap, noise, seed, synth_out);
}
