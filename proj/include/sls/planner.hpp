#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sls/matrix.hpp"
#include "sls/trace_io.hpp"
#include "sls/tsne.hpp"

namespace sls {

inline constexpr double kDefaultAlpha = 0.3;
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Silhouette index of every layer's 2-D t-SNE embedding, bottom layer first.
struct ScProfile {
  std::string dataset;
  std::vector<double> values;
  std::uint64_t seed = kDefaultSeed;
  TsneConfig tsne;
  std::size_t n_runs = 1;
  /// values.size() x n_runs; filled only when n_runs > 1.
  std::vector<std::vector<double>> per_run_values;

  std::size_t n_layers() const noexcept { return values.size(); }
};

enum class PruneStrategy { one_shot, iterative };

std::string_view to_string(PruneStrategy s);
PruneStrategy parse_prune_strategy(std::string_view text);

/// Outcome of the top-down threshold traversal. Layer numbers are 1-based.
struct PruningPlan {
  std::string dataset;
  std::size_t n_layers = 0;
  double alpha = kDefaultAlpha;
  double threshold = 0.0;
  /// Layer whose index fell below the threshold; 0 when none did.
  std::size_t stop_index = 0;
  std::size_t first_pruned_layer = 0;
  std::size_t keep_layers = 0;
  /// Inclusive [lo, hi]; empty when nothing is pruned.
  std::optional<std::pair<std::size_t, std::size_t>> pruned_range;
  PruneStrategy strategy = PruneStrategy::one_shot;
  std::vector<std::string> warnings;

  std::size_t pruned_count() const noexcept {
    return pruned_range ? pruned_range->second - pruned_range->first + 1 : 0;
  }
};

/// Parameter counts of a PETL-transferred backbone shared by K datasets.
struct ModelStorageSpec {
  std::vector<std::uint64_t> pretrained_per_layer;             // N
  std::vector<std::vector<std::uint64_t>> adapter_per_layer;  // K x N
  std::vector<std::uint64_t> head_per_dataset;                // K
  std::vector<std::string> dataset_names;                     // K

  std::size_t n_layers() const noexcept { return pretrained_per_layer.size(); }
  std::size_t n_datasets() const noexcept { return head_per_dataset.size(); }
  void validate() const;
};

struct StorageReport {
  std::vector<std::string> dataset_names;
  std::vector<std::size_t> per_dataset_index;
  /// Backbone stored once, adapters up to each dataset's index, heads.
  std::uint64_t stored_total = 0;
  /// Same layout with every index at N: the unpruned PETL footprint.
  std::uint64_t petl_baseline = 0;
  /// One backbone copy per dataset, truncated at each index.
  std::uint64_t naive_copies = 0;
  /// One full backbone copy per dataset, no truncation.
  std::uint64_t naive_unpruned = 0;
};

/// Seed for one (layer, run) pair; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::size_t layer, std::size_t run);

/// Mean silhouette of `labels` on t-SNE embeddings of `features` over
/// `n_runs` seeds derived from (config.seed, layer_index, run).
///
/// A non-empty `init_order` permutes the seeded initial layout: row k of the
/// start is row init_order[k] of the canonical one.
double evaluate_layer(const Matrix& features, std::span<const int> labels, const TsneConfig& config,
                      std::size_t n_runs = 1, std::size_t layer_index = 0,
                      std::span<const std::size_t> init_order = {});

/// Per-run values of evaluate_layer, one entry per run.
std::vector<double> evaluate_layer_runs(const Matrix& features, std::span<const int> labels, const TsneConfig& config,
                                        std::size_t n_runs, std::size_t layer_index,
                                        std::span<const std::size_t> init_order = {});

ScProfile evaluate_all_layers(const FeatureTrace& trace, const TsneConfig& config, std::size_t n_runs = 1,
                              std::span<const std::size_t> init_order = {});

/// T = alpha * values[N-1]; walk i = N-1 .. 1 and stop at the first layer
/// with values[i-1] < T, keeping layers 1..i+1. If nothing triggers, keep
/// layer 1 only.
PruningPlan plan_prune(const ScProfile& profile, double alpha = kDefaultAlpha,
                       PruneStrategy strategy = PruneStrategy::one_shot);
PruningPlan plan_prune(std::span<const double> values, double alpha = kDefaultAlpha,
                       PruneStrategy strategy = PruneStrategy::one_shot);

/// `indices[j]` is the number of layers dataset j retains (1..N).
StorageReport storage_report(const ModelStorageSpec& spec, std::span<const std::size_t> indices);

}  // namespace sls
