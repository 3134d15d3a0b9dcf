// Exercises the CLI's exit-code and output contract against the built
// binary. argv[1]: path to the faircompose executable; argv[2]: source dir.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

int failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

struct Result {
  int code = -1;
  std::string out;
};

Result run_cmd(const std::string& cmd) {
  const std::string out_file = "cli_stdout.tmp";
  const int raw = std::system((cmd + " > " + out_file + " 2> cli_stderr.tmp").c_str());
  Result r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: cli_contract <faircompose-binary> <source-dir>\n";
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path src_dir = argv[2];
  const fs::path work = fs::temp_directory_path() / "faircompose_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);
  fs::current_path(work);

  const std::string good_cfg = R"(dataset:
  synth: {n: 1000, d: 2, gap: -0.3}
models: [{kind: logistic_regression}]
pipeline:
  pre: {name: reweigh}
  post: {name: roc}
explain: {count: 2, samples: 400}
seed: 3
)";
  write_file("good.yaml", good_cfg);

  // run: success is silent on stdout, exit 0, reports written.
  {
    const Result r = run_cmd(bin + " run --config good.yaml --out rep");
    check(r.code == 0, "run exit 0, got " + std::to_string(r.code));
    check(r.out.empty(), "run stdout silent on success");
    check(fs::exists("rep/run.json") && fs::exists("rep/run.csv"), "report files present");
  }

  // run twice with --jobs 2: byte-identical JSON.
  {
    run_cmd(bin + " run --config good.yaml --out rep_a --jobs 2");
    run_cmd(bin + " run --config good.yaml --out rep_b --jobs 2");
    check(slurp("rep_a/run.json") == slurp("rep_b/run.json"),
          "byte-identical reports across runs");
  }

  // malformed config: exit 2 and a diagnostic naming the key.
  {
    write_file("bad.yaml", "dataset: {synth: {n: 500, d: 2}}\nmodels: [{kind: logistic_regression}]\nbogus_key: 1\n");
    const Result r = run_cmd(bin + " run --config bad.yaml --out rep_bad");
    check(r.code == 2, "malformed config exits 2, got " + std::to_string(r.code));
    check(slurp("cli_stderr.tmp").find("bogus_key") != std::string::npos,
          "diagnostic names the offending key");
  }

  // runtime stage failure: exit 3 with partial reports.
  {
    const std::string failing = R"(dataset:
  synth: {n: 1000, d: 2, gap: -0.35}
models: [{kind: logistic_regression}]
pipeline:
  post: {name: ceodds, cost_mode: fpr, params: {cost_tol: 0.0}}
explain: {count: 2, samples: 300}
seed: 13
)";
    write_file("failing.yaml", failing);
    const Result r = run_cmd(bin + " run --config failing.yaml --out rep_fail");
    check(r.code == 3, "stage failure exits 3, got " + std::to_string(r.code));
    const std::string json = slurp("rep_fail/run.json");
    check(json.find("\"stage\": \"base\"") != std::string::npos,
          "partial report still written");
    check(json.find("aborted") != std::string::npos, "abort flag recorded");
  }

  // validate: compatible config exits 0 and prints the normalized form.
  {
    const Result r = run_cmd(bin + " validate --config good.yaml");
    check(r.code == 0, "validate exit 0");
    check(r.out.find("reweigh") != std::string::npos, "normalized config printed");
  }

  // validate: incompatible composition exits 2 with the compatibility message.
  {
    write_file("incompat.yaml",
               "dataset: {synth: {n: 500, d: 2}}\nmodels: [{kind: logistic_regression}]\n"
               "pipeline:\n  in: {name: gridsearch, constraint: equalized_odds}\n"
               "  post: {name: roc}\n");
    const Result r = run_cmd(bin + " validate --config incompat.yaml");
    check(r.code == 2, "incompatible config exits 2");
    check(slurp("cli_stderr.tmp").find("compatibility") != std::string::npos,
          "compatibility diagnostic");
  }

  // validate: duplicate stage class exits 2.
  {
    write_file("dup.yaml",
               "dataset: {synth: {n: 500, d: 2}}\nmodels: [{kind: logistic_regression}]\n"
               "pipeline:\n  pre: {name: reweigh}\n  pre: {name: lfr}\n");
    const Result r = run_cmd(bin + " validate --config dup.yaml");
    check(r.code == 2, "duplicate stage exits 2");
  }

  // compare: identical dirs succeed; missing dir exits 2.
  {
    Result r = run_cmd(bin + " compare --a rep_a --b rep_b --out deltas.csv");
    check(r.code == 0, "compare exit 0");
    check(fs::exists("deltas.csv"), "delta file written");
    r = run_cmd(bin + " compare --a rep_a --b no_such_dir --out d2.csv");
    check(r.code == 2, "missing dir exits 2");
  }

  // synth: writes the CSV, prints a schema stanza, deterministic, range-checked.
  {
    Result r = run_cmd(bin + " synth --n 1000 --gap -0.3 --seed 5 --out s1.csv");
    check(r.code == 0, "synth exit 0");
    check(r.out.find("schema:") != std::string::npos, "schema stanza on stdout");
    std::istringstream csv(slurp("s1.csv"));
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line)) ++rows;
    check(rows == 1001, "synth writes 1000 data rows, got " + std::to_string(rows));

    run_cmd(bin + " synth --n 1000 --gap -0.3 --seed 5 --out s2.csv");
    check(slurp("s1.csv") == slurp("s2.csv"), "synth deterministic under a fixed seed");

    r = run_cmd(bin + " synth --n 1000 --gap -1.5 --seed 5 --out s3.csv");
    check(r.code == 2, "out-of-range gap exits 2");
  }

  // Forcing the scalar kernel backend still runs cleanly.
  {
    const Result r = run_cmd("FAIRCOMPOSE_KERNELS=scalar " + bin +
                             " run --config good.yaml --out rep_scalar");
    check(r.code == 0, "scalar-kernel run exit 0");
  }

  // FAIRCOMPOSE_SEED overrides the config seed and is recorded.
  {
    const Result r =
        run_cmd("FAIRCOMPOSE_SEED=99 " + bin + " run --config good.yaml --out rep_env");
    check(r.code == 0, "env-seed run exit 0");
    const std::string json = slurp("rep_env/run.json");
    check(json.find("\"seed\": 99") != std::string::npos, "env seed recorded");
    check(json.find("\"seed_source\": \"env\"") != std::string::npos,
          "seed source marked env");
  }

  // The delta file for identical runs has only zero deltas.
  {
    run_cmd(bin + " compare --a rep_a --b rep_b --out d3.csv");
    std::istringstream lines(slurp("d3.csv"));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
      const std::size_t last_comma = line.rfind(',');
      const std::size_t prev_comma = line.rfind(',', last_comma - 1);
      const std::string delta = line.substr(prev_comma + 1, last_comma - prev_comma - 1);
      check(delta == "0", "zero delta row, got '" + delta + "'");
    }
  }

  if (failures == 0) std::printf("cli_contract: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
