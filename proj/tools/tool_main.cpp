// sls: layer-wise pruning decisions from per-layer feature traces.
//
//   sls evaluate --trace t.slsf            -> profile.json
//   sls plan --profile profile.json        -> plan.json
//   sls report plan.json... --model-spec m -> report.json
//   sls bench [--trace t.slsf]             -> bench.json + bench.csv
//   sls synth                              -> synthetic.slsf

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sls/errors.hpp"
#include "sls/json_io.hpp"
#include "sls/planner.hpp"
#include "sls/toy_bench.hpp"
#include "sls/trace_io.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct GlobalFlags {
  std::uint64_t seed = sls::kDefaultSeed;
  std::string output;
  std::string format = "json";
};

struct TsneFlags {
  sls::TsneConfig config;
  std::size_t n_runs = 1;
  std::size_t max_samples = 0;
};

void add_tsne_flags(CLI::App* cmd, TsneFlags& f) {
  cmd->add_option("--perplexity", f.config.perplexity, "t-SNE perplexity")->capture_default_str();
  cmd->add_option("--tsne-lr", f.config.learning_rate, "t-SNE learning rate")->capture_default_str();
  cmd->add_option("--tsne-iters", f.config.n_iter, "t-SNE iterations")->capture_default_str();
  cmd->add_option("--components", f.config.n_components, "embedding dimension")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  cmd->add_option("--early-exaggeration", f.config.early_exaggeration_factor, "early exaggeration factor")
      ->capture_default_str();
  cmd->add_option("--exaggeration-iters", f.config.early_exaggeration_iters, "iterations with exaggerated P")
      ->capture_default_str();
  cmd->add_option("--momentum-switch", f.config.momentum_switch_iter, "iteration where momentum goes 0.5 -> 0.8")
      ->capture_default_str();
  cmd->add_option("--n-runs", f.n_runs, "t-SNE runs averaged per layer")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-samples", f.max_samples, "stratified subsample cap, 0 = use every sample")
      ->capture_default_str();
}

struct SynthFlags {
  std::size_t layers = 12;
  std::size_t samples = 500;
  std::size_t dim = 64;
  std::size_t classes = 10;
  double noise = 1.0;
  double min_sep = 0.5;
  double max_sep = 5.0;
  std::vector<double> curve;
  std::string name = "synthetic";
};

void add_synth_flags(CLI::App* cmd, SynthFlags& f) {
  cmd->add_option("--synthetic-layers", f.layers, "layers in the generated trace")->capture_default_str();
  cmd->add_option("--synthetic-samples", f.samples, "samples in the generated trace")->capture_default_str();
  cmd->add_option("--synthetic-dim", f.dim, "feature dimension")->capture_default_str();
  cmd->add_option("--synthetic-classes", f.classes, "number of classes")->capture_default_str();
  cmd->add_option("--synthetic-noise", f.noise, "per-coordinate noise sigma")->capture_default_str();
  cmd->add_option("--synthetic-min-sep", f.min_sep, "class separation at layer 1 (saturating ramp)")
      ->capture_default_str();
  cmd->add_option("--synthetic-max-sep", f.max_sep, "class separation at the top layer (saturating ramp)")
      ->capture_default_str();
  cmd->add_option("--synthetic-curve", f.curve, "explicit per-layer separation, overrides the ramp")
      ->delimiter(',');
  cmd->add_option("--synthetic-name", f.name, "dataset name stored in the trace")->capture_default_str();
}

sls::FeatureTrace make_synthetic(const SynthFlags& f, std::uint64_t seed) {
  sls::SyntheticSpec spec;
  spec.n_layers = f.curve.empty() ? f.layers : f.curve.size();
  spec.n_samples = f.samples;
  spec.dim = f.dim;
  spec.n_classes = f.classes;
  spec.noise_sigma = f.noise;
  spec.seed = seed;
  spec.dataset_name = f.name;
  spec.separation_curve = f.curve.empty() ? sls::saturating_ramp(f.layers, f.min_sep, f.max_sep) : f.curve;
  return sls::gen_synthetic_trace(spec);
}

sls::FeatureTrace load_for_evaluation(const std::string& path, const TsneFlags& f, std::uint64_t seed) {
  sls::FeatureTrace trace = sls::load_trace_file(path);
  if (f.max_samples > 0) trace = sls::subsample_trace(trace, f.max_samples, seed);
  return trace;
}

void add_global_flags(CLI::App* cmd, GlobalFlags& g, const char* output_help) {
  cmd->add_option("--seed", g.seed, "random seed")->capture_default_str();
  cmd->add_option("--output,-o", g.output, output_help);
  cmd->add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

std::string output_or(const GlobalFlags& g, const char* fallback) { return g.output.empty() ? fallback : g.output; }

std::string profile_csv(const sls::ScProfile& p) {
  std::ostringstream out;
  out.precision(17);
  out << "layer,sc_index\n";
  for (std::size_t l = 0; l < p.values.size(); ++l) out << l + 1 << ',' << p.values[l] << '\n';
  return out.str();
}

void print_profile(const sls::ScProfile& p) {
  std::printf("%-6s %10s\n", "layer", "SC_Index");
  for (std::size_t l = 0; l < p.values.size(); ++l) std::printf("%-6zu %10.4f\n", l + 1, p.values[l]);
}

void print_plan(const sls::PruningPlan& plan) {
  std::printf("alpha %.4g  threshold %.6f  keep %zu of %zu layers", plan.alpha, plan.threshold, plan.keep_layers,
              plan.n_layers);
  if (plan.pruned_range) {
    std::printf("  prune [%zu, %zu]\n", plan.pruned_range->first, plan.pruned_range->second);
  } else {
    std::printf("  prune nothing\n");
  }
  for (const auto& w : plan.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise pruning decisions from t-SNE silhouette profiles"};
  app.require_subcommand(1);

  GlobalFlags global;

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "per-layer SC_Index profile of a trace (default output profile.json)");
  add_global_flags(evaluate, global, "output path [profile.json, or profile.csv with --format csv]");
  std::string trace_path;
  TsneFlags eval_flags;
  evaluate->add_option("--trace", trace_path, "SLSF trace file")->required();
  add_tsne_flags(evaluate, eval_flags);

  // plan
  auto* plan = app.add_subcommand("plan", "pruning plan from a profile (default output plan.json)");
  add_global_flags(plan, global, "output path [plan.json]");
  std::string profile_path;
  double alpha = sls::kDefaultAlpha;
  std::string strategy = "one_shot";
  plan->add_option("--profile", profile_path, "profile JSON from evaluate")->required();
  plan->add_option("--alpha", alpha, "threshold factor; T = alpha * SC_Index of the top layer")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  plan->add_option("--strategy", strategy, "pruning strategy recorded in the plan")
      ->check(CLI::IsMember({"one_shot", "iterative"}))
      ->capture_default_str();

  // report
  auto* report = app.add_subcommand("report", "storage accounting over plans (default output report.json)");
  add_global_flags(report, global, "output path [report.json]");
  std::vector<std::string> plan_paths;
  std::string model_spec_path;
  report->add_option("plans", plan_paths, "plan JSON files, one per dataset in model-spec order")->required();
  report->add_option("--model-spec", model_spec_path, "model storage spec JSON")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "desk-scale benchmark (default output prefix bench)");
  add_global_flags(bench, global, "output prefix for <prefix>.json and <prefix>.csv [bench]; --format picks what is echoed to stdout");
  std::string bench_trace;
  TsneFlags bench_tsne;
  SynthFlags bench_synth;
  std::vector<double> alphas{sls::kDefaultAlpha};
  std::string bench_strategy = "one_shot";
  std::string retrain = "1clr";
  sls::LrSchedule schedule;
  double holdout = 0.3;
  bench->add_option("--trace", bench_trace, "SLSF trace; a synthetic trace is generated when omitted");
  add_tsne_flags(bench, bench_tsne);
  add_synth_flags(bench, bench_synth);
  bench->add_option("--alphas", alphas, "comma-separated alpha values")->delimiter(',')->capture_default_str();
  bench->add_option("--strategy", bench_strategy, "one_shot or iterative")
      ->check(CLI::IsMember({"one_shot", "iterative"}))
      ->capture_default_str();
  bench->add_option("--retrain", retrain, "probe retraining: 1clr, tfs or ft")
      ->check(CLI::IsMember({"1clr", "tfs", "ft"}))
      ->capture_default_str();
  bench->add_option("--probe-lr", schedule.base_lr, "probe base learning rate")->capture_default_str();
  bench->add_option("--probe-epochs", schedule.total_epochs, "probe epochs")->capture_default_str();
  bench->add_option("--probe-warmup", schedule.warmup_epochs, "probe warm-up epochs")->capture_default_str();
  bench->add_option("--holdout", holdout, "held-out fraction for probe accuracy")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic SLSF trace (default output synthetic.slsf)");
  add_global_flags(synth, global, "output path [synthetic.slsf]");
  SynthFlags synth_flags;
  add_synth_flags(synth, synth_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*evaluate) {
      eval_flags.config.seed = global.seed;
      const auto trace = load_for_evaluation(trace_path, eval_flags, global.seed);
      const auto profile = sls::evaluate_all_layers(trace, eval_flags.config, eval_flags.n_runs);
      const auto out = output_or(global, global.format == "csv" ? "profile.csv" : "profile.json");
      sls::write_text_file(out, global.format == "csv" ? profile_csv(profile) : sls::dump(sls::to_json(profile)));
      print_profile(profile);
    } else if (*plan) {
      if (global.format != "json") throw sls::ArgumentError("plan output is JSON only");
      const auto profile = sls::profile_from_json(sls::read_json_file(profile_path));
      const auto result = sls::plan_prune(profile, alpha, sls::parse_prune_strategy(strategy));
      sls::write_text_file(output_or(global, "plan.json"), sls::dump(sls::to_json(result)));
      print_plan(result);
    } else if (*report) {
      if (global.format != "json") throw sls::ArgumentError("report output is JSON only");
      const auto spec = sls::model_spec_from_json(sls::read_json_file(model_spec_path));
      if (plan_paths.size() != spec.n_datasets()) {
        throw sls::ValidationError("model spec lists " + std::to_string(spec.n_datasets()) + " datasets but " +
                                   std::to_string(plan_paths.size()) + " plans were given");
      }
      std::vector<std::size_t> indices;
      for (const auto& path : plan_paths) {
        const auto p = sls::plan_from_json(sls::read_json_file(path));
        if (p.n_layers != spec.n_layers()) {
          throw sls::ValidationError(path + ": plan has " + std::to_string(p.n_layers) + " layers, model spec has " +
                                     std::to_string(spec.n_layers()));
        }
        indices.push_back(p.keep_layers);
      }
      const auto result = sls::storage_report(spec, indices);
      sls::write_text_file(output_or(global, "report.json"), sls::dump(sls::to_json(result)));
      std::printf("stored_total %llu  petl_baseline %llu  naive_copies %llu\n",
                  static_cast<unsigned long long>(result.stored_total),
                  static_cast<unsigned long long>(result.petl_baseline),
                  static_cast<unsigned long long>(result.naive_copies));
    } else if (*bench) {
      bench_tsne.config.seed = global.seed;
      const auto trace = bench_trace.empty() ? make_synthetic(bench_synth, global.seed)
                                             : load_for_evaluation(bench_trace, bench_tsne, global.seed);
      sls::BenchmarkConfig config;
      config.alphas = alphas;
      config.tsne = bench_tsne.config;
      config.n_runs = bench_tsne.n_runs;
      config.schedule = schedule;
      config.strategy = sls::parse_prune_strategy(bench_strategy);
      config.retrain = sls::parse_retrain_strategy(retrain);
      config.holdout_fraction = holdout;
      config.probe_seed = global.seed;
      const auto result = sls::run_benchmark(trace, config);
      const auto prefix = output_or(global, "bench");
      const auto json = sls::dump(sls::to_json(result));
      const auto csv = sls::to_csv(result);
      sls::write_text_file(prefix + ".json", json);
      sls::write_text_file(prefix + ".csv", csv);
      std::cout << (global.format == "csv" ? csv : json);
    } else if (*synth) {
      const auto trace = make_synthetic(synth_flags, global.seed);
      const auto out = output_or(global, "synthetic.slsf");
      sls::write_trace_file(trace, out);
      std::printf("wrote %s (%u layers, %u samples, dim %u, %u classes)\n", out.c_str(), trace.n_layers,
                  trace.n_samples, trace.dim, trace.n_classes);
    }
  } catch (const sls::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const sls::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
