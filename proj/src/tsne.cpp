#include "sls/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sls/errors.hpp"

namespace sls {
namespace {

std::size_t finite_neighbours(std::span<const double> row, std::size_t self) {
  std::size_t count = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j != self && std::isfinite(row[j])) ++count;
  }
  return count;
}

void check_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw ArgumentError(std::string(name) + " must be square");
}

// Scales every entry above the floor so the matrix sums to one, then floors
// again; repeats until no entry crosses the floor. Operates on the upper
// triangle and mirrors it.
void floor_and_normalise(Matrix& p) {
  const std::size_t n = p.rows();
  for (int pass = 0; pass < 8; ++pass) {
    double floored_mass = 0.0;
    double free_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (p(i, j) <= kProbabilityFloor) {
          p(i, j) = kProbabilityFloor;
          floored_mass += 2.0 * kProbabilityFloor;
        } else {
          free_mass += 2.0 * p(i, j);
        }
      }
    }
    const double scale = (1.0 - floored_mass) / free_mass;
    bool crossed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (p(i, j) > kProbabilityFloor) {
          p(i, j) *= scale;
          if (p(i, j) < kProbabilityFloor) crossed = true;
        }
      }
    }
    if (!crossed) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    p(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) p(j, i) = p(i, j);
  }
}

// Unnormalised Student-t kernel and its total over i != j.
double student_kernel(const Matrix& y, Matrix& num) {
  const std::size_t n = y.rows();
  const std::size_t s = y.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    const auto yi = y.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto yj = y.row(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < s; ++k) {
        const double diff = yi[k] - yj[k];
        d2 += diff * diff;
      }
      const double w = 1.0 / (1.0 + d2);
      num(i, j) = w;
      num(j, i) = w;
      total += 2.0 * w;
    }
  }
  return total;
}

// Gradient of KL(exaggeration * P || Q) given the kernel.
void gradient_from_kernel(const Matrix& p, double exaggeration, const Matrix& y, const Matrix& num, double total,
                          Matrix& grad) {
  const std::size_t n = y.rows();
  const std::size_t s = y.cols();
  std::fill(grad.data().begin(), grad.data().end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = y.row(i);
    auto gi = grad.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto yj = y.row(j);
      auto gj = grad.row(j);
      const double w = num(i, j);
      const double coeff = 4.0 * (exaggeration * p(i, j) - w / total) * w;
      for (std::size_t k = 0; k < s; ++k) {
        const double term = coeff * (yi[k] - yj[k]);
        gi[k] += term;
        gj[k] -= term;
      }
    }
  }
}

double kl_from_kernel(const Matrix& p, const Matrix& num, double total) {
  const std::size_t n = p.rows();
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pij = p(i, j);
      if (pij <= 0.0) continue;
      const double qij = std::max(num(i, j) / total, kProbabilityFloor);
      kl += pij * std::log(std::max(pij, kProbabilityFloor) / qij);
    }
  }
  return kl;
}

}  // namespace

void TsneConfig::validate(std::size_t n_samples) const {
  if (n_components == 0 || n_components > 3) throw ArgumentError("n_components must be 1, 2 or 3");
  if (!(perplexity > 0.0)) throw ArgumentError("perplexity must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (n_iter == 0) throw ArgumentError("n_iter must be positive");
  if (!(early_exaggeration_factor > 0.0)) throw ArgumentError("early_exaggeration_factor must be positive");
  if (early_exaggeration_iters == 0 || early_exaggeration_iters > n_iter) {
    throw ArgumentError("early_exaggeration_iters must be in [1, n_iter]");
  }
  if (momentum_switch_iter == 0 || momentum_switch_iter > n_iter) {
    throw ArgumentError("momentum_switch_iter must be in [1, n_iter]");
  }
  if (!(momentum_initial >= 0.0 && momentum_initial < 1.0) || !(momentum_final >= 0.0 && momentum_final < 1.0)) {
    throw ArgumentError("momentum must be in [0, 1)");
  }
  if (n_samples < 4) throw ArgumentError("t-SNE needs at least 4 samples, got " + std::to_string(n_samples));
  if (!(perplexity < static_cast<double>(n_samples) - 1.0)) {
    throw ArgumentError("perplexity " + std::to_string(perplexity) + " must be below n_samples - 1 = " +
                        std::to_string(n_samples - 1));
  }
}

Matrix squared_distances(const Matrix& x) {
  const std::size_t n = x.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = x.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) {
        const double diff = xi[k] - xj[k];
        acc += diff * diff;
      }
      d(i, j) = acc;
      d(j, i) = acc;
    }
  }
  return d;
}

std::vector<double> conditional_probs(std::span<const double> sq_dist_row, std::size_t self_index, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("sigma must be positive");
  if (self_index >= sq_dist_row.size()) throw ArgumentError("self_index out of range");

  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sq_dist_row.size(); ++j) {
    if (j == self_index) continue;
    if (std::isnan(sq_dist_row[j]) || sq_dist_row[j] < 0.0) {
      throw ArgumentError("squared distances must be nonnegative, got entry " + std::to_string(j));
    }
    min_dist = std::min(min_dist, sq_dist_row[j]);
  }
  if (!std::isfinite(min_dist)) throw DegenerateRowError(self_index, "no finite neighbour distance");

  std::vector<double> out(sq_dist_row.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < sq_dist_row.size(); ++j) {
    if (j == self_index) continue;
    const double e = std::exp(-(sq_dist_row[j] - min_dist) * inv_two_var);
    out[j] = e;
    total += e;
  }
  for (double& v : out) v /= total;
  return out;
}

double row_perplexity(std::span<const double> sq_dist_row, std::size_t self_index, double sigma) {
  const auto probs = conditional_probs(sq_dist_row, self_index, sigma);
  double entropy_bits = 0.0;
  for (double p : probs) {
    if (p > 0.0) entropy_bits -= p * std::log2(p);
  }
  return std::exp2(entropy_bits);
}

double search_sigma(std::span<const double> sq_dist_row, std::size_t self_index, double target_perplexity, double tol,
                    int max_iter) {
  if (finite_neighbours(sq_dist_row, self_index) < 2) {
    throw DegenerateRowError(self_index, "fewer than 2 finite neighbours");
  }
  if (!(target_perplexity > 0.0)) throw ArgumentError("target perplexity must be positive");
  if (!(tol > 0.0) || max_iter <= 0) throw ArgumentError("tol and max_iter must be positive");

  double log_lo = std::log(kSigmaBracketLo);
  double log_hi = std::log(kSigmaBracketHi);
  double best_sigma = 1.0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const double log_mid = 0.5 * (log_lo + log_hi);
    const double sigma = std::exp(log_mid);
    const double perp = row_perplexity(sq_dist_row, self_index, sigma);
    const double err = std::abs(perp - target_perplexity);
    if (err < best_err) {
      best_err = err;
      best_sigma = sigma;
    }
    if (err <= tol) break;
    if (perp > target_perplexity) {
      log_hi = log_mid;
    } else {
      log_lo = log_mid;
    }
  }
  return best_sigma;
}

AffinityModel joint_probs(const Matrix& x, const TsneConfig& config) {
  const std::size_t n = x.rows();
  config.validate(n);
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ArgumentError("input features must be finite");
  }

  const Matrix d = squared_distances(x);
  AffinityModel model;
  model.target_perplexity = config.perplexity;
  model.sigmas.resize(n);
  Matrix cond(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = d.row(i);
    // Perplexity never drops below the number of nearest neighbours tied at
    // the minimum distance, so such rows cannot be calibrated.
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) min_dist = std::min(min_dist, row[j]);
    }
    std::size_t ties = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && row[j] == min_dist) ++ties;
    }
    if (static_cast<double>(ties) > config.perplexity) {
      throw DegenerateRowError(i, std::to_string(ties) + " neighbours tied at the minimum distance exceed perplexity " +
                                      std::to_string(config.perplexity));
    }
    const double sigma = search_sigma(row, i, config.perplexity);
    model.sigmas[i] = sigma;
    const auto probs = conditional_probs(row, i, sigma);
    std::copy(probs.begin(), probs.end(), cond.row(i).begin());
  }

  model.p = Matrix(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) model.p(i, j) = (cond(i, j) + cond(j, i)) / denom;
  }
  floor_and_normalise(model.p);
  return model;
}

Matrix low_dim_affinities(const Matrix& y) {
  const std::size_t n = y.rows();
  if (n < 2) throw ArgumentError("need at least 2 points");
  Matrix num(n, n);
  const double total = student_kernel(y, num);
  for (double& v : num.data()) v /= total;
  return num;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  check_square(p, "P");
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ArgumentError("P and Q shapes differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      kl += p(i, j) * std::log(std::max(p(i, j), kProbabilityFloor) / std::max(q(i, j), kProbabilityFloor));
    }
  }
  return kl;
}

double kl_divergence(const AffinityModel& p, const Matrix& q) { return kl_divergence(p.p, q); }

Matrix kl_gradient(const Matrix& p, const Matrix& y) {
  check_square(p, "P");
  if (p.rows() != y.rows()) throw ArgumentError("P and Y disagree on the number of points");
  Matrix num(y.rows(), y.rows());
  const double total = student_kernel(y, num);
  Matrix grad(y.rows(), y.cols());
  gradient_from_kernel(p, 1.0, y, num, total, grad);
  return grad;
}

Matrix kl_gradient(const AffinityModel& p, const Matrix& y) { return kl_gradient(p.p, y); }

Matrix initial_embedding(std::size_t n, std::size_t n_components, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, kInitStddev);
  Matrix y(n, n_components);
  for (double& v : y.data()) v = normal(rng);
  return y;
}

Embedding optimize_embedding(const AffinityModel& p, const TsneConfig& config, Matrix init) {
  const std::size_t n = p.p.rows();
  config.validate(n);
  if (init.rows() != n || init.cols() != config.n_components) {
    throw ArgumentError("initial embedding must be n_samples x n_components");
  }

  constexpr double kGainIncrement = 0.2;
  constexpr double kGainDecay = 0.8;
  constexpr double kMinGain = 0.01;

  Embedding out;
  Matrix y = std::move(init);
  Matrix num(n, n);
  Matrix grad(n, config.n_components);
  std::vector<double> update(y.data().size(), 0.0);
  std::vector<double> gains(y.data().size(), 1.0);

  for (std::size_t it = 0; it < config.n_iter; ++it) {
    const double total = student_kernel(y, num);
    if (it % kKlHistoryStride == 0) out.kl_history.push_back(kl_from_kernel(p.p, num, total));

    const double exaggeration = it < config.early_exaggeration_iters ? config.early_exaggeration_factor : 1.0;
    const double momentum = it < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    gradient_from_kernel(p.p, exaggeration, y, num, total, grad);

    auto& g = grad.data();
    auto& yv = y.data();
    for (std::size_t k = 0; k < yv.size(); ++k) {
      if (update[k] * g[k] < 0.0) {
        gains[k] += kGainIncrement;
      } else {
        gains[k] *= kGainDecay;
      }
      gains[k] = std::max(gains[k], kMinGain);
      update[k] = momentum * update[k] - config.learning_rate * gains[k] * g[k];
      yv[k] += update[k];
    }
  }

  for (double v : y.data()) {
    if (!std::isfinite(v)) throw NumericalError("t-SNE diverged to a non-finite embedding");
  }
  const double total = student_kernel(y, num);
  // Floor-induced error can leave the value a hair below zero.
  out.final_kl = std::max(0.0, kl_from_kernel(p.p, num, total));
  if (config.n_iter % kKlHistoryStride == 0) out.kl_history.push_back(out.final_kl);
  out.y = std::move(y);
  return out;
}

Embedding run_tsne(const Matrix& x, const TsneConfig& config, Matrix init) {
  const AffinityModel p = joint_probs(x, config);
  return optimize_embedding(p, config, std::move(init));
}

Embedding run_tsne(const Matrix& x, const TsneConfig& config) {
  config.validate(x.rows());
  return run_tsne(x, config, initial_embedding(x.rows(), config.n_components, config.seed));
}

}  // namespace sls
