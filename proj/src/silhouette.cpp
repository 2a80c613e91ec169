#include "sls/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sls/errors.hpp"

namespace sls {

SilhouetteDetail silhouette(const Matrix& points, std::span<const int> labels, Metric /*metric*/) {
  const std::size_t n = points.rows();
  if (labels.size() != n) throw ArgumentError("labels and points disagree in length");
  if (n < 2) throw ArgumentError("silhouette needs at least 2 points");

  // Compact cluster ids in order of first label value.
  std::map<int, std::size_t> ids;
  for (int l : labels) ids.emplace(l, 0);
  if (ids.size() < 2) throw ArgumentError("silhouette undefined for p < 2");
  std::size_t next = 0;
  for (auto& [label, id] : ids) id = next++;
  const std::size_t p = ids.size();

  std::vector<std::size_t> cluster(n);
  std::vector<std::size_t> sizes(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = ids.at(labels[i]);
    ++sizes[cluster[i]];
  }

  SilhouetteDetail out;
  out.a.assign(n, 0.0);
  out.b.assign(n, 0.0);
  out.s.assign(n, 0.0);
  std::vector<double> sums(p);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    const auto xi = points.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = points.row(j);
      double d2 = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) {
        const double diff = xi[k] - xj[k];
        d2 += diff * diff;
      }
      sums[cluster[j]] += std::sqrt(d2);
    }

    const std::size_t own = cluster[i];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < p; ++c) {
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    out.b[i] = b;
    if (sizes[own] == 1) continue;  // singleton: a = 0, s = 0

    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    out.a[i] = a;
    const double denom = std::max(a, b);
    out.s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }

  double total = 0.0;
  for (double v : out.s) total += v;
  out.mean_s = total / static_cast<double>(n);
  return out;
}

double silhouette_score(const Matrix& points, std::span<const int> labels, Metric metric) {
  return silhouette(points, labels, metric).mean_s;
}

}  // namespace sls
