#pragma once

#include <span>
#include <vector>

#include "sls/matrix.hpp"

namespace sls {

enum class Metric { euclidean };

struct SilhouetteDetail {
  std::vector<double> a;  // mean distance to the rest of the point's own cluster
  std::vector<double> b;  // mean distance to the nearest other cluster
  std::vector<double> s;
  double mean_s = 0.0;
};

/// Silhouette coefficients of a labelled point set.
///
/// Points in singleton clusters get a = 0 and s = 0. When a = b = 0 the
/// coefficient is 0. Labels are arbitrary integers; at least two distinct
/// values must be present.
SilhouetteDetail silhouette(const Matrix& points, std::span<const int> labels, Metric metric = Metric::euclidean);

/// Mean silhouette only.
double silhouette_score(const Matrix& points, std::span<const int> labels, Metric metric = Metric::euclidean);

}  // namespace sls
