#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sls/matrix.hpp"

namespace sls {

/// Lower bound applied to p_ij and q_ij before taking logarithms.
inline constexpr double kProbabilityFloor = 1e-12;
/// kl_history holds one entry every this many iterations.
inline constexpr std::size_t kKlHistoryStride = 50;

inline constexpr double kSigmaSearchTol = 1e-5;
inline constexpr int kSigmaSearchMaxIter = 64;
inline constexpr double kSigmaBracketLo = 1e-20;
inline constexpr double kSigmaBracketHi = 1e20;

inline constexpr double kInitStddev = 1e-4;

struct TsneConfig {
  std::size_t n_components = 2;
  double perplexity = 30.0;
  double learning_rate = 50.0;
  std::size_t n_iter = 1000;
  std::uint64_t seed = 42;
  double early_exaggeration_factor = 12.0;
  std::size_t early_exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::size_t momentum_switch_iter = 250;

  /// Throws ArgumentError unless the configuration is usable on `n_samples` points.
  void validate(std::size_t n_samples) const;
};

/// Symmetric joint probabilities of the input points plus their bandwidths.
struct AffinityModel {
  Matrix p;
  std::vector<double> sigmas;
  double target_perplexity = 0.0;
};

struct Embedding {
  Matrix y;
  double final_kl = 0.0;
  /// KL(P||Q) on the un-exaggerated P after 0, 50, 100, ... iterations.
  std::vector<double> kl_history;
};

/// Pairwise squared Euclidean distances of the rows of `x`.
Matrix squared_distances(const Matrix& x);

/// Gaussian conditional distribution p_{j|i} of one row.
///
/// `sq_dist_row[j]` is ||x_i - x_j||^2; the self entry is ignored and set to
/// zero in the output. Exponents are shifted by their maximum before exp().
std::vector<double> conditional_probs(std::span<const double> sq_dist_row, std::size_t self_index, double sigma);

/// 2^H of the conditional distribution, H in bits.
double row_perplexity(std::span<const double> sq_dist_row, std::size_t self_index, double sigma);

/// Geometric bisection for the bandwidth whose perplexity hits the target.
///
/// Perplexity is nondecreasing in sigma, so the bracket [1e-20, 1e20] is
/// halved in log space. Returns the first sigma within `tol`, otherwise the
/// best one seen after `max_iter` evaluations.
double search_sigma(std::span<const double> sq_dist_row, std::size_t self_index, double target_perplexity,
                    double tol = kSigmaSearchTol, int max_iter = kSigmaSearchMaxIter);

/// p_ij = (p_{j|i} + p_{i|j}) / 2n, floored at kProbabilityFloor and
/// renormalised to unit mass. Each unordered pair is computed once and
/// mirrored, so the result is exactly symmetric.
AffinityModel joint_probs(const Matrix& x, const TsneConfig& config);

/// Student-t affinities q_ij of the embedding (unfloored).
Matrix low_dim_affinities(const Matrix& y);

/// KL(P||Q) in nats over i != j.
double kl_divergence(const AffinityModel& p, const Matrix& q);
double kl_divergence(const Matrix& p, const Matrix& q);

/// dKL/dY = 4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + ||y_i - y_j||^2).
Matrix kl_gradient(const AffinityModel& p, const Matrix& y);
Matrix kl_gradient(const Matrix& p, const Matrix& y);

/// Seeded N(0, 1e-4^2) starting layout.
Matrix initial_embedding(std::size_t n, std::size_t n_components, std::uint64_t seed);

/// Momentum descent with per-coordinate adaptive gains from a given start.
Embedding optimize_embedding(const AffinityModel& p, const TsneConfig& config, Matrix init);

/// Exact t-SNE from the seeded initial layout.
Embedding run_tsne(const Matrix& x, const TsneConfig& config);
/// Exact t-SNE from an explicit initial layout.
Embedding run_tsne(const Matrix& x, const TsneConfig& config, Matrix init);

}  // namespace sls
