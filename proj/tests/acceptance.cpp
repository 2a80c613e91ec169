// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sls/json_io.hpp"
#include "sls/planner.hpp"
#include "sls/silhouette.hpp"
#include "sls/toy_bench.hpp"
#include "sls/tsne.hpp"

using namespace sls;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) out.require(false, "runtime over " + std::to_string(budget_s) + " s");
  std::printf("%s  %-34s %8.2f s  %s\n", out.pass ? "PASS" : "FAIL", name, secs, out.detail.c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double frob(const Matrix& m) {
  double s = 0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

bool valid_plan(const PruningPlan& plan, const std::vector<double>& v) {
  const std::size_t n = v.size();
  return plan.threshold == plan.alpha * v[n - 1] && plan.keep_layers + plan.pruned_count() == n &&
         plan.keep_layers >= 1;
}

FeatureTrace synthetic(std::vector<double> curve, std::size_t classes, std::uint64_t seed = kDefaultSeed) {
  SyntheticSpec s;
  s.n_layers = curve.size();
  s.n_samples = 500;
  s.dim = 64;
  s.n_classes = classes;
  s.separation_curve = std::move(curve);
  s.seed = seed;
  return gen_synthetic_trace(s);
}

}  // namespace

int main() {
  criterion("silhouette oracle equivalence", 10.0, [](Outcome& out) {
    const Matrix pts(4, 2, {0.0, 0.0, 0.0, 1.0, 10.0, 0.0, 10.0, 1.0});
    const double four = silhouette_score(pts, std::vector<int>{0, 0, 1, 1});
    out.require(std::abs(four - 0.90025) < 1e-5, "4-point case gave " + fmt(four));
    std::mt19937_64 rng(101);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = 4 + rng() % 197;
      const int p = 2 + static_cast<int>(rng() % 9);
      const Matrix x = oracle::random_matrix(n, 2, rng);
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = i < static_cast<std::size_t>(p) ? static_cast<int>(i) : static_cast<int>(rng() % p);
      worst = std::max(worst, std::abs(silhouette_score(x, labels) - oracle::silhouette_mean(x, labels)));
    }
    out.require(worst < 1e-12, "max deviation " + fmt(worst));
  });

  criterion("t-SNE gradient check", 30.0, [](Outcome& out) {
    std::mt19937_64 rng(102);
    double worst = 0;
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 4 + rng() % 7;
      TsneConfig cfg;
      cfg.perplexity = 2.0 + static_cast<double>(rng() % 100) / 100.0 * (static_cast<double>(n) - 3.5);
      const auto model = joint_probs(oracle::random_matrix(n, 5, rng), cfg);
      const Matrix y = oracle::random_matrix(n, 2, rng);
      const Matrix g = kl_gradient(model.p, y);
      const Matrix fd = oracle::finite_difference(
          [&](const Matrix& z) { return kl_divergence(model.p, low_dim_affinities(z)); }, y, 1e-5);
      Matrix diff = g;
      for (std::size_t k = 0; k < diff.data().size(); ++k) diff.data()[k] -= fd.data()[k];
      worst = std::max(worst, frob(diff) / std::max(frob(g), frob(fd)));
    }
    out.require(worst < 1e-4, "max relative error " + fmt(worst));
  });

  criterion("perplexity calibration", 5.0, [](Outcome& out) {
    std::mt19937_64 rng(103);
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = 60 + rng() % 441;
      const Matrix x = oracle::random_matrix(n, 1 + rng() % 50, rng, 0.1 + static_cast<double>(rng() % 1000));
      const Matrix d = squared_distances(x);
      const std::size_t self = rng() % n;
      const auto row = d.row(self);
      const double sigma = search_sigma(row, self, 30.0);
      worst = std::max(worst, std::abs(row_perplexity(row, self, sigma) - 30.0));
    }
    out.require(worst < 1e-3, "max perplexity error " + fmt(worst));
  });

  criterion("affinity normalization", 0.0, [](Outcome& out) {
    std::mt19937_64 rng(104);
    double worst_mass = 0;
    bool symmetric = true;
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t n = 10 + rng() % 111;
      TsneConfig cfg;
      cfg.perplexity = std::min(30.0, static_cast<double>(n) / 3.0);
      const auto model = joint_probs(oracle::random_matrix(n, 2 + rng() % 30, rng), cfg);
      double mass = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) mass += model.p(i, j);
          symmetric = symmetric && model.p(i, j) == model.p(j, i);
        }
      }
      worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    }
    out.require(symmetric, "P not symmetric");
    out.require(worst_mass < 1e-9, "max mass error " + fmt(worst_mass));
  });

  criterion("planner hand traces + invariants", 0.0, [](Outcome& out) {
    const auto a = plan_prune(std::vector<double>{0.05, 0.10, 0.12, 0.20, 0.35, 0.50}, 0.3);
    out.require(a.stop_index == 3 && a.keep_layers == 4 && a.pruned_range &&
                    *a.pruned_range == std::pair<std::size_t, std::size_t>{5, 6},
                "six-layer example");
    const auto b = plan_prune(std::vector<double>{0.10, 0.50}, 0.3);
    out.require(b.keep_layers == 2 && !b.pruned_range, "two-layer example");
    const auto c = plan_prune(std::vector<double>{0.40, 0.45, 0.50}, 0.3);
    out.require(c.keep_layers == 1 && c.pruned_range && *c.pruned_range == std::pair<std::size_t, std::size_t>{2, 3},
                "never-triggered example");

    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ua(0.0, 1.5);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 2 + rng() % 31;
      std::vector<double> v(n);
      for (double& x : v) x = u(rng);
      out.require(valid_plan(plan_prune(v, ua(rng)), v), "invariant broken on random profile");

      for (double& x : v) x = std::abs(x);
      std::sort(v.begin(), v.end());
      double a1 = ua(rng), a2 = ua(rng);
      if (a1 > a2) std::swap(a1, a2);
      out.require(plan_prune(v, a1).keep_layers <= plan_prune(v, a2).keep_layers, "alpha monotonicity broken");
    }
  });

  criterion("storage accounting", 0.0, [](Outcome& out) {
    ModelStorageSpec worked;
    worked.pretrained_per_layer = {10, 10};
    worked.adapter_per_layer = {{1, 1}};
    worked.head_per_dataset = {2};
    const auto w = storage_report(worked, std::vector<std::size_t>{1});
    out.require(w.stored_total == 23, "worked example gave " + std::to_string(w.stored_total));

    std::mt19937_64 rng(106);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 1 + rng() % 24;
      const std::size_t k = 1 + rng() % 8;
      ModelStorageSpec spec;
      for (std::size_t i = 0; i < n; ++i) spec.pretrained_per_layer.push_back(rng() % 10'000'000);
      spec.adapter_per_layer.assign(k, {});
      for (auto& row : spec.adapter_per_layer) {
        for (std::size_t i = 0; i < n; ++i) row.push_back(1 + rng() % 50'000);
      }
      for (std::size_t j = 0; j < k; ++j) spec.head_per_dataset.push_back(rng() % 100'000);
      std::vector<std::size_t> idx(k);
      for (auto& x : idx) x = 1 + rng() % n;
      const auto r = storage_report(spec, idx);
      out.require(r.stored_total <= r.petl_baseline, "stored_total above the PETL baseline");
      out.require(r.naive_copies <= r.naive_unpruned, "truncated copies above full copies");
      const auto full = storage_report(spec, std::vector<std::size_t>(k, n));
      out.require(full.stored_total == full.petl_baseline, "unpruned case is not an equality");
      const bool pruned = std::any_of(idx.begin(), idx.end(), [&](std::size_t x) { return x < n; });
      out.require(pruned == (r.stored_total < r.petl_baseline), "strictness does not match pruning");
    }
  });

  criterion("SC vs probe accuracy (monotone)", 300.0, [](Outcome& out) {
    const auto trace = synthetic(saturating_ramp(12, 0.5, 5.0), 10);
    const auto report = run_benchmark(trace, BenchmarkConfig{});
    out.require(report.sc_accuracy_spearman > 0.8, "Spearman " + fmt(report.sc_accuracy_spearman));
    if (out.pass) out.detail = "Spearman " + fmt(report.sc_accuracy_spearman);
  });

  criterion("profile shape (monotone, zero-sep)", 0.0, [](Outcome& out) {
    const auto rising = evaluate_all_layers(synthetic({0.5, 1.0, 2.0, 4.0, 8.0, 8.0}, 10), TsneConfig{});
    double worst_drop = 0;
    for (std::size_t l = 1; l < rising.values.size(); ++l) {
      worst_drop = std::max(worst_drop, rising.values[l - 1] - rising.values[l]);
    }
    out.require(worst_drop <= 0.05, "largest drop " + fmt(worst_drop));

    const auto flat = evaluate_all_layers(synthetic(std::vector<double>(12, 0.0), 5), TsneConfig{});
    double worst_abs = 0;
    for (double v : flat.values) worst_abs = std::max(worst_abs, std::abs(v));
    out.require(worst_abs < 0.1, "largest |SC| at zero separation " + fmt(worst_abs));
    if (out.pass) out.detail = "max drop " + fmt(worst_drop) + ", max |SC| flat " + fmt(worst_abs);
  });

  criterion("pipeline determinism", 0.0, [](Outcome& out) {
    SyntheticSpec s;
    s.n_layers = 6;
    s.n_samples = 200;
    s.dim = 32;
    s.n_classes = 5;
    s.separation_curve = saturating_ramp(6, 0.5, 5.0);
    const auto trace = gen_synthetic_trace(s);
    ModelStorageSpec spec;
    spec.pretrained_per_layer.assign(6, 7'000'000);
    spec.adapter_per_layer = {std::vector<std::uint64_t>(6, 20'000)};
    spec.head_per_dataset = {3'845};
    spec.dataset_names = {"synthetic"};
    auto once = [&] {
      TsneConfig cfg;
      cfg.seed = 42;
      const auto profile = evaluate_all_layers(trace, cfg);
      const auto plan = plan_prune(profile_from_json(Json::parse(dump(to_json(profile)))));
      const auto report = storage_report(spec, std::vector<std::size_t>{plan_from_json(to_json(plan)).keep_layers});
      return dump(to_json(profile)) + dump(to_json(plan)) + dump(to_json(report));
    };
    out.require(once() == once(), "JSON differs between runs");
  });

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
