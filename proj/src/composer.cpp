#include "faircompose/composer.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <memory>
#include <thread>

#include "faircompose/threshold.hpp"

namespace faircompose {

namespace {

// Seed stream tags; every source of randomness derives from the run seed.
constexpr std::uint64_t kStreamBaseFit = 0x10000;
constexpr std::uint64_t kStreamPreFit = 0x20000;
constexpr std::uint64_t kStreamReduction = 0x30000;
constexpr std::uint64_t kStreamLfr = 0x40000;
constexpr std::uint64_t kStreamExplain = 0x50000;
constexpr std::uint64_t kStreamPick = 0x60000;

std::string fmt(double v) { return format_double(v); }

struct StageContext {
  const PipelineConfig& cfg;
  const ModelSpec& spec;
  std::size_t model_index;
  const std::vector<std::size_t>& explain_ids;
};

// Builds the metrics, explanations, and echo for one executed stage prefix.
// explain_fn_factory receives the explained instance's group so post-stage
// decision wrappers can fall back to it when the protected column is not a
// feature.
StageReport finish_report(const StageContext& ctx, const std::string& stage_label,
                          const TabularDataset& train_cur, const TabularDataset& test_cur,
                          std::vector<double> test_scores, std::vector<int> test_preds,
                          double threshold, bool stage_internal,
                          const std::function<BatchScoreFn(int)>& explain_fn_factory,
                          std::map<std::string, std::string> params,
                          std::vector<std::string> flags) {
  StageReport rep;
  rep.model = ctx.spec.kind;
  rep.stage = stage_label;
  rep.threshold = threshold;
  rep.stage_internal_threshold = stage_internal;
  rep.params = std::move(params);
  rep.flags = std::move(flags);
  rep.metrics = compute_metrics(test_scores, test_preds, test_cur.labels, test_cur.groups);

  const TrainStats stats = compute_train_stats(train_cur);
  LimeParams lime;
  lime.num_samples = ctx.cfg.explain.samples;
  lime.kernel_width = ctx.cfg.explain.kernel_width;
  lime.top_k = ctx.cfg.explain.top_k;

  double faith_sum = 0.0;
  std::size_t faith_n = 0;
  for (std::size_t id : ctx.explain_ids) {
    const BatchScoreFn fn = explain_fn_factory(test_cur.groups[id]);
    ExplanationReport er;
    er.instance = id;
    er.explanation =
        lime_explain(fn, test_cur.features.row_span(id), id, stats, lime,
                     mix_seed(ctx.cfg.seed, kStreamExplain + id));
    er.faithfulness =
        faithfulness(fn, test_cur.features.row_span(id), er.explanation, stats.mean);
    if (er.faithfulness.defined) {
      faith_sum += er.faithfulness.value;
      ++faith_n;
    }
    rep.explanations.push_back(std::move(er));
  }
  if (faith_n > 0) {
    rep.faithfulness_mean = faith_sum / static_cast<double>(faith_n);
    rep.faithfulness_mean_defined = true;
  }

  rep.test_scores = std::move(test_scores);
  rep.test_preds = std::move(test_preds);
  return rep;
}

std::map<std::string, std::string> echo_hyperparams(const ModelSpec& spec) {
  Hyperparams hp = default_hyperparams(spec.kind);
  for (const auto& [k, v] : spec.params) hp[k] = v;
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : hp) out[k] = fmt(v);
  return out;
}

// Executes the full stage chain for one model kind, appending each stage
// report as it completes. Throws Error on stage failures, leaving the
// already-emitted reports in place for the caller to flag.
void run_one_model(const StageContext& ctx, const TabularDataset& train0,
                   const TabularDataset& valid0, const TabularDataset& test0,
                   std::vector<StageReport>& reports) {
  const PipelineConfig& cfg = ctx.cfg;

  auto make_scorer = [](std::shared_ptr<ScoredClassifier> m) -> BatchScoreFn {
    return [m = std::move(m)](const Matrix& x) { return m->score(x); };
  };

  // ----- baseline: no interventions -----
  std::shared_ptr<ScoredClassifier> base = make_model(
      ctx.spec.kind, ctx.spec.params, mix_seed(cfg.seed, kStreamBaseFit + ctx.model_index));
  base->fit(train0);
  BatchScoreFn base_fn = make_scorer(base);
  ThresholdRule base_thr = tune_threshold(base->score(valid0), valid0.labels);
  {
    std::vector<double> scores = base->score(test0);
    std::vector<int> preds = apply_threshold(scores, base_thr);
    reports.push_back(finish_report(
        ctx, "base", train0, test0, std::move(scores), std::move(preds),
        base_thr.threshold, false, [&](int) { return base_fn; },
        echo_hyperparams(ctx.spec), {}));
  }

  // Current stage state: datasets (owned when transformed), predictor, label.
  TabularDataset train_owned, valid_owned, test_owned;
  const TabularDataset* train_cur = &train0;
  const TabularDataset* valid_cur = &valid0;
  const TabularDataset* test_cur = &test0;
  BatchScoreFn current_fn = base_fn;
  double current_thr = base_thr.threshold;
  std::string prefix;

  // ----- pre-processing -----
  if (cfg.pre) {
    std::map<std::string, std::string> params{{"name", cfg.pre->name}};
    if (cfg.pre->name == "reweigh") {
      ReweighResult rew = reweigh(*train_cur);
      train_owned = std::move(rew.dataset);
      params["w_priv_fav"] = fmt(rew.w_priv_fav);
      params["w_unpriv_fav"] = fmt(rew.w_unpriv_fav);
      params["w_priv_unfav"] = fmt(rew.w_priv_unfav);
      params["w_unpriv_unfav"] = fmt(rew.w_unpriv_unfav);
    } else {
      LfrParams lp = cfg.pre->lfr;
      if (!cfg.pre->lfr_seed_set) lp.seed = mix_seed(cfg.seed, kStreamLfr);
      const LfrModel lfr = lfr_fit(*train_cur, lp);
      train_owned = lfr_apply(lfr, *train_cur, lp.relabel);
      valid_owned = lfr_apply(lfr, *valid_cur, false);
      test_owned = lfr_apply(lfr, *test_cur, false);
      valid_cur = &valid_owned;
      test_cur = &test_owned;
      params["k"] = std::to_string(lp.k);
      params["ax"] = fmt(lp.ax);
      params["ay"] = fmt(lp.ay);
      params["az"] = fmt(lp.az);
      params["relabel"] = lp.relabel ? "true" : "false";
      params["final_loss"] = fmt(lfr.loss);
      params["iterations"] = std::to_string(lfr.iterations);
    }
    train_cur = &train_owned;

    std::shared_ptr<ScoredClassifier> refit = make_model(
        ctx.spec.kind, ctx.spec.params, mix_seed(cfg.seed, kStreamPreFit + ctx.model_index));
    refit->fit(*train_cur);
    current_fn = make_scorer(refit);
    ThresholdRule thr = tune_threshold(refit->score(*valid_cur), valid_cur->labels);
    current_thr = thr.threshold;
    prefix = "pre";

    std::vector<double> scores = refit->score(*test_cur);
    std::vector<int> preds = apply_threshold(scores, thr);
    reports.push_back(finish_report(ctx, prefix, *train_cur, *test_cur, std::move(scores),
                                    std::move(preds), thr.threshold, false,
                                    [&](int) { return current_fn; }, std::move(params), {}));
  }

  // ----- in-processing -----
  if (cfg.in_stage) {
    const StageIn& st = *cfg.in_stage;
    ModelFactory factory{ctx.spec.kind, ctx.spec.params,
                         mix_seed(cfg.seed, kStreamReduction + ctx.model_index)};
    auto reduction = std::make_shared<ReductionModel>(
        st.name == "expgrad"
            ? expgrad_fit(factory, *train_cur, st.constraint, st.expgrad)
            : gridsearch_fit(factory, *train_cur, st.constraint, {st.multiplier_grid()}));

    std::map<std::string, std::string> params{
        {"name", st.name},
        {"constraint", to_string(st.constraint.kind)},
        {"eps", fmt(st.constraint.eps)}};
    std::vector<std::string> flags;
    if (st.name == "expgrad") {
      params["max_rounds"] = std::to_string(st.expgrad.max_rounds);
      params["eta"] = fmt(st.expgrad.eta);
      params["bound"] = fmt(st.expgrad.bound);
    } else {
      params["grid_points"] = std::to_string(st.grid_points);
      params["selected_multiplier"] =
          fmt(reduction->candidates[reduction->selected].multiplier);
      if (!reduction->feasible_found) flags.push_back("infeasible_fallback");
    }

    current_fn = [reduction](const Matrix& x) { return reduction->score(x); };
    ThresholdRule thr = tune_threshold(reduction->score(valid_cur->features), valid_cur->labels);
    current_thr = thr.threshold;
    prefix = prefix.empty() ? "in" : prefix + "+in";

    std::vector<double> scores = reduction->score(test_cur->features);
    std::vector<int> preds = apply_threshold(scores, thr);
    reports.push_back(finish_report(ctx, prefix, *train_cur, *test_cur, std::move(scores),
                                    std::move(preds), thr.threshold, false,
                                    [&](int) { return current_fn; }, std::move(params),
                                    std::move(flags)));
  }

  // ----- post-processing -----
  if (cfg.post) {
    const StagePost& st = *cfg.post;
    const std::vector<double> valid_scores = current_fn(valid_cur->features);
    const std::vector<double> raw_test = current_fn(test_cur->features);
    const int prot = test_cur->protected_col;
    const BatchScoreFn model_fn = current_fn;

    std::map<std::string, std::string> params{{"name", st.name}};
    std::vector<std::string> flags;
    std::vector<double> metric_scores;
    std::vector<int> preds;
    std::function<BatchScoreFn(int)> explain_factory;

    if (st.name == "roc") {
      const RocBand band = roc_fit(valid_scores, valid_cur->labels, valid_cur->groups,
                                   st.di_low, st.di_high);
      if (!band.feasible) flags.push_back("infeasible_fallback");
      preds = roc_apply(raw_test, test_cur->groups, band);
      metric_scores = raw_test;
      for (std::size_t i = 0; i < metric_scores.size(); ++i) {
        const double s = metric_scores[i];
        if (s >= band.threshold - band.margin && s <= band.threshold + band.margin)
          metric_scores[i] = test_cur->groups[i] == 0 ? 1.0 : 0.0;
      }
      params["threshold"] = fmt(band.threshold);
      params["margin"] = fmt(band.margin);
      params["di_low"] = fmt(st.di_low);
      params["di_high"] = fmt(st.di_high);
      explain_factory = [model_fn, band, prot](int instance_group) -> BatchScoreFn {
        return [model_fn, band, prot, instance_group](const Matrix& x) {
          std::vector<double> s = model_fn(x);
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= band.threshold - band.margin && s[i] <= band.threshold + band.margin) {
              const int g = prot >= 0 ? (x(i, prot) >= 0.5 ? 1 : 0) : instance_group;
              s[i] = g == 0 ? 1.0 : 0.0;
            }
          }
          return s;
        };
      };
    } else if (st.name == "ceodds") {
      const CeoMix mix = ceodds_fit(valid_scores, valid_cur->labels, valid_cur->groups,
                                    st.cost_mode, current_thr, st.cost_tol);
      if (mix.calibration_warning) flags.push_back("calibration_warning");
      preds = ceodds_apply(raw_test, test_cur->groups, mix);
      metric_scores = ceodds_mix_scores(raw_test, test_cur->groups, mix);
      params["cost_mode"] = to_string(mix.mode);
      params["cost_tol"] = fmt(st.cost_tol);
      params["p_priv"] = fmt(mix.p_priv);
      params["p_unpriv"] = fmt(mix.p_unpriv);
      params["base_rate_priv"] = fmt(mix.base_rate_priv);
      params["base_rate_unpriv"] = fmt(mix.base_rate_unpriv);
      // The expected mixed score is the explained function: mixing keeps the
      // score with probability 1-p and replaces it with the base rate with
      // probability p.
      explain_factory = [model_fn, mix, prot](int instance_group) -> BatchScoreFn {
        return [model_fn, mix, prot, instance_group](const Matrix& x) {
          std::vector<double> s = model_fn(x);
          for (std::size_t i = 0; i < s.size(); ++i) {
            const int g = prot >= 0 ? (x(i, prot) >= 0.5 ? 1 : 0) : instance_group;
            const double p = g == 0 ? mix.p_unpriv : mix.p_priv;
            const double br = g == 0 ? mix.base_rate_unpriv : mix.base_rate_priv;
            s[i] = (1.0 - p) * s[i] + p * br;
          }
          return s;
        };
      };
    } else {
      const GroupThresholds gt = threshopt_fit(valid_scores, valid_cur->labels,
                                               valid_cur->groups, st.constraint, st.tol);
      if (!gt.feasible) flags.push_back("infeasible_fallback");
      preds = threshopt_apply(raw_test, test_cur->groups, gt);
      metric_scores = raw_test;
      const double lo = std::min(gt.t_priv, gt.t_unpriv);
      const double hi = std::max(gt.t_priv, gt.t_unpriv);
      for (std::size_t i = 0; i < metric_scores.size(); ++i) {
        const double s = metric_scores[i];
        if (s >= lo && s < hi) metric_scores[i] = preds[i] ? 1.0 : 0.0;
      }
      params["constraint"] = to_string(gt.constraint);
      params["tol"] = fmt(st.tol);
      params["t_priv"] = fmt(gt.t_priv);
      params["t_unpriv"] = fmt(gt.t_unpriv);
      params["achieved_gap"] = fmt(gt.achieved_gap);
      explain_factory = [model_fn, gt, prot](int instance_group) -> BatchScoreFn {
        return [model_fn, gt, prot, instance_group](const Matrix& x) {
          std::vector<double> s = model_fn(x);
          const double lo = std::min(gt.t_priv, gt.t_unpriv);
          const double hi = std::max(gt.t_priv, gt.t_unpriv);
          for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < lo || s[i] >= hi) continue;  // both groups agree outside
            const int g = prot >= 0 ? (x(i, prot) >= 0.5 ? 1 : 0) : instance_group;
            s[i] = s[i] >= (g == 0 ? gt.t_unpriv : gt.t_priv) ? 1.0 : 0.0;
          }
          return s;
        };
      };
    }

    prefix = prefix.empty() ? "post" : prefix + "+post";
    reports.push_back(finish_report(ctx, prefix, *train_cur, *test_cur,
                                    std::move(metric_scores), std::move(preds), current_thr,
                                    true, explain_factory, std::move(params),
                                    std::move(flags)));
  }
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, unsigned jobs) {
  RunResult run;
  run.config = cfg;
  const std::string normalized = normalized_yaml(cfg);
  {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(normalized)));
    run.run_id = buf;
  }

  TabularDataset full = cfg.use_synth
                            ? synth_biased([&] {
                                SynthSpec s = cfg.synth;
                                if (!cfg.synth_seed_set) s.seed = cfg.seed;
                                return s;
                              }())
                            : load_csv(cfg.csv_path, cfg.schema);

  SplitSpec sp = cfg.splits;
  if (!cfg.split_seed_set) sp.seed = cfg.seed;
  auto parts = split(full, sp);
  TabularDataset& train = parts[0];
  TabularDataset& valid = parts[1];
  TabularDataset& test = parts[2];
  {
    std::array<TabularDataset*, 2> others = {&valid, &test};
    standardize(train, others);
  }

  run.explain_ids =
      pick_explanation_instances(test.n(), cfg.explain.count, mix_seed(cfg.seed, kStreamPick));

  struct ModelOutput {
    std::vector<StageReport> reports;
    std::string error;
  };
  std::vector<ModelOutput> outputs(cfg.models.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.models.size()) break;
      StageContext ctx{cfg, cfg.models[i], i, run.explain_ids};
      try {
        run_one_model(ctx, train, valid, test, outputs[i].reports);
      } catch (const Error& e) {
        outputs[i].error = e.what();
      }
    }
  };

  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cfg.models.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    ModelOutput& out = outputs[i];
    if (!out.error.empty()) {
      const std::string note = cfg.models[i].kind + ": " + out.error;
      run.errors.push_back(note);
      if (!out.reports.empty())
        out.reports.back().flags.push_back("aborted: " + out.error);
    }
    for (auto& rep : out.reports) run.reports.push_back(std::move(rep));
  }
  return run;
}

}  // namespace faircompose
