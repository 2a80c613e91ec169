#include "sls/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sls/errors.hpp"
#include "sls/silhouette.hpp"

namespace sls {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Matrix permuted_rows(const Matrix& m, std::span<const std::size_t> order) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto src = m.row(order[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

// Rows sorted by (features, label). Running t-SNE in this order makes the
// floating-point work independent of the order samples arrive in.
std::vector<std::size_t> canonical_order(const Matrix& x, std::span<const int> labels) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    const auto [ia, ib] = std::mismatch(ra.begin(), ra.end(), rb.begin());
    if (ia != ra.end()) return *ia < *ib;
    return labels[a] < labels[b];
  });
  return order;
}

}  // namespace

std::string_view to_string(PruneStrategy s) { return s == PruneStrategy::one_shot ? "one_shot" : "iterative"; }

PruneStrategy parse_prune_strategy(std::string_view text) {
  if (text == "one_shot" || text == "one-shot") return PruneStrategy::one_shot;
  if (text == "iterative") return PruneStrategy::iterative;
  throw ArgumentError("unknown pruning strategy '" + std::string(text) + "'");
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t layer, std::size_t run) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(layer));
  return splitmix64(h ^ (static_cast<std::uint64_t>(run) << 32));
}

std::vector<double> evaluate_layer_runs(const Matrix& features, std::span<const int> labels, const TsneConfig& config,
                                        std::size_t n_runs, std::size_t layer_index,
                                        std::span<const std::size_t> init_order) {
  if (n_runs == 0) throw ArgumentError("n_runs must be positive");
  if (labels.size() != features.rows()) throw ArgumentError("labels and features disagree on sample count");
  if (!init_order.empty() && init_order.size() != features.rows()) {
    throw ArgumentError("init_order must have one entry per sample");
  }

  const auto order = canonical_order(features, labels);
  std::vector<int> sorted_labels(labels.size());
  for (std::size_t k = 0; k < order.size(); ++k) sorted_labels[k] = labels[order[k]];

  // Affinities do not depend on the seed; compute them once for all runs.
  const AffinityModel p = joint_probs(permuted_rows(features, order), config);
  std::vector<double> out;
  out.reserve(n_runs);
  for (std::size_t run = 0; run < n_runs; ++run) {
    TsneConfig run_config = config;
    run_config.seed = derive_seed(config.seed, layer_index, run);
    Matrix init = initial_embedding(features.rows(), config.n_components, run_config.seed);
    if (!init_order.empty()) init = permuted_rows(init, init_order);
    const Embedding emb = optimize_embedding(p, run_config, permuted_rows(init, order));
    out.push_back(silhouette_score(emb.y, sorted_labels));
  }
  return out;
}

double evaluate_layer(const Matrix& features, std::span<const int> labels, const TsneConfig& config,
                      std::size_t n_runs, std::size_t layer_index, std::span<const std::size_t> init_order) {
  const auto runs = evaluate_layer_runs(features, labels, config, n_runs, layer_index, init_order);
  double total = 0.0;
  for (double v : runs) total += v;
  return total / static_cast<double>(runs.size());
}

ScProfile evaluate_all_layers(const FeatureTrace& trace, const TsneConfig& config, std::size_t n_runs,
                              std::span<const std::size_t> init_order) {
  validate_trace(trace);
  const std::vector<int> labels(trace.labels.begin(), trace.labels.end());

  ScProfile profile;
  profile.dataset = trace.dataset_name;
  profile.seed = config.seed;
  profile.tsne = config;
  profile.n_runs = n_runs;
  profile.values.reserve(trace.n_layers);
  for (std::size_t l = 0; l < trace.n_layers; ++l) {
    std::vector<double> runs;
    try {
      runs = evaluate_layer_runs(trace.layer_matrix(l), labels, config, n_runs, l, init_order);
    } catch (const DegenerateRowError& e) {
      throw DegenerateRowError(e.row(), std::string("layer ") + std::to_string(l + 1) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("layer " + std::to_string(l + 1) + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw ArgumentError("layer " + std::to_string(l + 1) + ": " + e.what());
    }
    double total = 0.0;
    for (double v : runs) total += v;
    profile.values.push_back(total / static_cast<double>(runs.size()));
    if (n_runs > 1) profile.per_run_values.push_back(std::move(runs));
  }
  return profile;
}

PruningPlan plan_prune(std::span<const double> values, double alpha, PruneStrategy strategy) {
  const std::size_t n = values.size();
  if (n < 2) throw ArgumentError("plan_prune needs a profile with at least 2 layers");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be a nonnegative finite number");
  for (double v : values) {
    if (!std::isfinite(v)) throw ArgumentError("profile values must be finite");
  }

  PruningPlan plan;
  plan.n_layers = n;
  plan.alpha = alpha;
  plan.strategy = strategy;
  plan.threshold = alpha * values[n - 1];
  if (plan.threshold < 0.0) {
    plan.warnings.push_back("top-layer SC index is negative; threshold " + std::to_string(plan.threshold) +
                            " is unlikely to trigger");
  }

  std::size_t stop = 0;
  for (std::size_t i = n - 1; i >= 1; --i) {
    if (values[i - 1] < plan.threshold) {
      stop = i;
      break;
    }
  }
  plan.stop_index = stop;
  plan.keep_layers = stop + 1;
  plan.first_pruned_layer = stop + 2;
  if (plan.first_pruned_layer <= n) plan.pruned_range = std::make_pair(plan.first_pruned_layer, n);
  return plan;
}

PruningPlan plan_prune(const ScProfile& profile, double alpha, PruneStrategy strategy) {
  PruningPlan plan = plan_prune(std::span<const double>(profile.values), alpha, strategy);
  plan.dataset = profile.dataset;
  return plan;
}

void ModelStorageSpec::validate() const {
  const std::size_t n = n_layers();
  const std::size_t k = n_datasets();
  if (n == 0) throw ValidationError("model spec has no layers");
  if (k == 0) throw ValidationError("model spec has no datasets");
  if (adapter_per_layer.size() != k) {
    throw ValidationError("adapter_per_layer has " + std::to_string(adapter_per_layer.size()) + " rows, expected " +
                          std::to_string(k));
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (adapter_per_layer[j].size() != n) {
      throw ValidationError("adapter_per_layer row " + std::to_string(j) + " has " +
                            std::to_string(adapter_per_layer[j].size()) + " entries, expected " + std::to_string(n));
    }
  }
  if (!dataset_names.empty() && dataset_names.size() != k) {
    throw ValidationError("dataset_names length does not match head_per_dataset");
  }
}

StorageReport storage_report(const ModelStorageSpec& spec, std::span<const std::size_t> indices) {
  spec.validate();
  const std::size_t n = spec.n_layers();
  const std::size_t k = spec.n_datasets();
  if (indices.size() != k) {
    throw ArgumentError("expected " + std::to_string(k) + " indices, got " + std::to_string(indices.size()));
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (indices[j] < 1 || indices[j] > n) {
      throw ArgumentError("index " + std::to_string(indices[j]) + " for dataset " + std::to_string(j) +
                          " is outside [1, " + std::to_string(n) + "]");
    }
  }

  std::uint64_t backbone = 0;
  for (auto w : spec.pretrained_per_layer) backbone += w;

  StorageReport r;
  r.dataset_names = spec.dataset_names;
  r.per_dataset_index.assign(indices.begin(), indices.end());
  r.stored_total = backbone;
  r.petl_baseline = backbone;
  for (std::size_t j = 0; j < k; ++j) {
    const auto& adapters = spec.adapter_per_layer[j];
    const std::uint64_t head = spec.head_per_dataset[j];
    for (std::size_t i = 0; i < n; ++i) {
      r.petl_baseline += adapters[i];
      r.naive_unpruned += spec.pretrained_per_layer[i] + adapters[i];
      if (i < indices[j]) {
        r.stored_total += adapters[i];
        r.naive_copies += spec.pretrained_per_layer[i] + adapters[i];
      }
    }
    r.stored_total += head;
    r.petl_baseline += head;
    r.naive_copies += head;
    r.naive_unpruned += head;
  }
  return r;
}

}  // namespace sls
