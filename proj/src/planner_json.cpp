#include "sls/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sls/errors.hpp"

namespace sls {
namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object()) throw FormatError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const TsneConfig& c) {
  return Json{{"n_components", c.n_components},
              {"perplexity", c.perplexity},
              {"learning_rate", c.learning_rate},
              {"n_iter", c.n_iter},
              {"early_exaggeration_factor", c.early_exaggeration_factor},
              {"early_exaggeration_iters", c.early_exaggeration_iters},
              {"momentum_initial", c.momentum_initial},
              {"momentum_final", c.momentum_final},
              {"momentum_switch_iter", c.momentum_switch_iter}};
}

TsneConfig tsne_config_from_json(const Json& j) {
  TsneConfig c;
  c.n_components = field<std::size_t>(j, "n_components");
  c.perplexity = field<double>(j, "perplexity");
  c.learning_rate = field<double>(j, "learning_rate");
  c.n_iter = field<std::size_t>(j, "n_iter");
  c.early_exaggeration_factor = field<double>(j, "early_exaggeration_factor");
  c.early_exaggeration_iters = field<std::size_t>(j, "early_exaggeration_iters");
  c.momentum_initial = field<double>(j, "momentum_initial");
  c.momentum_final = field<double>(j, "momentum_final");
  c.momentum_switch_iter = field<std::size_t>(j, "momentum_switch_iter");
  return c;
}

Json to_json(const ScProfile& p) {
  Json j{{"dataset", p.dataset}, {"n_layers", p.n_layers()}, {"values", p.values},
         {"seed", p.seed},       {"n_runs", p.n_runs},       {"tsne", to_json(p.tsne)}};
  if (!p.per_run_values.empty()) j["per_run_values"] = p.per_run_values;
  return j;
}

ScProfile profile_from_json(const Json& j) {
  ScProfile p;
  p.dataset = field<std::string>(j, "dataset");
  p.values = field<std::vector<double>>(j, "values");
  p.seed = field<std::uint64_t>(j, "seed");
  p.n_runs = field<std::size_t>(j, "n_runs");
  if (j.contains("tsne")) {
    p.tsne = tsne_config_from_json(j.at("tsne"));
  }
  p.tsne.seed = p.seed;
  if (j.contains("per_run_values")) p.per_run_values = field<std::vector<std::vector<double>>>(j, "per_run_values");

  if (field<std::size_t>(j, "n_layers") != p.values.size()) {
    throw ValidationError("profile n_layers does not match the number of values");
  }
  if (p.values.empty()) throw ValidationError("profile has no values");
  if (p.n_runs == 0) throw ValidationError("profile n_runs must be positive");
  for (double v : p.values) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) throw ValidationError("profile values must lie in [-1, 1]");
  }
  if (!p.per_run_values.empty()) {
    if (p.per_run_values.size() != p.values.size()) throw ValidationError("per_run_values has the wrong layer count");
    for (const auto& runs : p.per_run_values) {
      if (runs.size() != p.n_runs) throw ValidationError("per_run_values row does not have n_runs entries");
    }
  }
  return p;
}

Json to_json(const PruningPlan& p) {
  Json range = nullptr;
  if (p.pruned_range) range = Json::array({p.pruned_range->first, p.pruned_range->second});
  return Json{{"dataset", p.dataset},
              {"n_layers", p.n_layers},
              {"alpha", p.alpha},
              {"threshold", p.threshold},
              {"stop_index", p.stop_index},
              {"first_pruned_layer", p.first_pruned_layer},
              {"keep_layers", p.keep_layers},
              {"pruned_range", range},
              {"strategy", std::string(to_string(p.strategy))},
              {"warnings", p.warnings}};
}

PruningPlan plan_from_json(const Json& j) {
  PruningPlan p;
  p.dataset = field<std::string>(j, "dataset");
  p.n_layers = field<std::size_t>(j, "n_layers");
  p.alpha = field<double>(j, "alpha");
  p.threshold = field<double>(j, "threshold");
  p.stop_index = field<std::size_t>(j, "stop_index");
  p.first_pruned_layer = field<std::size_t>(j, "first_pruned_layer");
  p.keep_layers = field<std::size_t>(j, "keep_layers");
  try {
    p.strategy = parse_prune_strategy(field<std::string>(j, "strategy"));
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  if (j.contains("warnings")) p.warnings = field<std::vector<std::string>>(j, "warnings");

  const Json& range = j.contains("pruned_range") ? j.at("pruned_range") : Json();
  if (!range.is_null()) {
    const auto bounds = field<std::vector<std::size_t>>(j, "pruned_range");
    if (bounds.size() != 2) throw FormatError("pruned_range must be [lo, hi] or null");
    p.pruned_range = std::make_pair(bounds[0], bounds[1]);
  }

  if (p.keep_layers < 1 || p.keep_layers > p.n_layers) throw ValidationError("plan keep_layers out of range");
  if (p.keep_layers + p.pruned_count() != p.n_layers) {
    throw ValidationError("plan keep_layers and pruned_range do not cover n_layers");
  }
  if (p.pruned_range && (p.pruned_range->first != p.keep_layers + 1 || p.pruned_range->second != p.n_layers)) {
    throw ValidationError("plan pruned_range must be [keep_layers + 1, n_layers]");
  }
  return p;
}

Json to_json(const ModelStorageSpec& s) {
  return Json{{"pretrained_per_layer", s.pretrained_per_layer},
              {"adapter_per_layer", s.adapter_per_layer},
              {"head_per_dataset", s.head_per_dataset},
              {"dataset_names", s.dataset_names}};
}

ModelStorageSpec model_spec_from_json(const Json& j) {
  ModelStorageSpec s;
  s.pretrained_per_layer = field<std::vector<std::uint64_t>>(j, "pretrained_per_layer");
  s.adapter_per_layer = field<std::vector<std::vector<std::uint64_t>>>(j, "adapter_per_layer");
  s.head_per_dataset = field<std::vector<std::uint64_t>>(j, "head_per_dataset");
  if (j.contains("dataset_names")) s.dataset_names = field<std::vector<std::string>>(j, "dataset_names");
  s.validate();
  return s;
}

Json to_json(const StorageReport& r) {
  return Json{{"dataset_names", r.dataset_names},
              {"per_dataset_index", r.per_dataset_index},
              {"stored_total", r.stored_total},
              {"petl_baseline", r.petl_baseline},
              {"naive_copies", r.naive_copies},
              {"naive_unpruned", r.naive_unpruned},
              {"saving_vs_petl", r.petl_baseline - r.stored_total}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing: " + path.string());
}

}  // namespace sls
