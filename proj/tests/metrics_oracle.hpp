#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "codesft/metrics.hpp"

namespace oracle {

using codesft::LabeledPoints;


// Straight from the definitions, one point and one cluster at a time.
inline double naive_silhouette(const LabeledPoints& p) {
  const auto n = p.points.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < p.points[i].size(); ++d) s += std::pow(p.points[i][d] - p.points[j][d], 2);
    return std::sqrt(s);
  };
  std::set<int> labels(p.labels.begin(), p.labels.end());
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0;
    int same = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && p.labels[j] == p.labels[i]) {
        a += dist(i, j);
        ++same;
      }
    if (same == 0) continue;
    a /= same;
    double b = std::numeric_limits<double>::infinity();
    for (int l : labels) {
      if (l == p.labels[i]) continue;
      double s = 0;
      int c = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (p.labels[j] == l) {
          s += dist(i, j);
          ++c;
        }
      b = std::min(b, s / c);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

inline double naive_ch(const LabeledPoints& p) {
  const auto n = p.points.size(), dim = p.points[0].size();
  std::set<int> labels(p.labels.begin(), p.labels.end());
  const auto k = labels.size();
  auto centroid = [&](std::optional<int> label) {
    std::vector<double> c(dim, 0);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!label || p.labels[i] == *label) {
        for (std::size_t d = 0; d < dim; ++d) c[d] += p.points[i][d];
        ++m;
      }
    for (auto& x : c) x /= m;
    return std::pair{c, m};
  };
  auto sq = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };
  const auto [mean, all] = centroid(std::nullopt);
  double ssb = 0, ssw = 0;
  for (int l : labels) {
    const auto [c, m] = centroid(l);
    ssb += m * sq(c, mean);
    for (std::size_t i = 0; i < n; ++i)
      if (p.labels[i] == l) ssw += sq(p.points[i], c);
  }
  return (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(n - k));
}

inline LabeledPoints random_points(unsigned seed, std::size_t n = 100, std::size_t dim = 3, int k = 4) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0, 1);
  LabeledPoints p;
  for (std::size_t i = 0; i < n; ++i) {
    const int l = static_cast<int>(i % static_cast<std::size_t>(k));
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = g(rng) + 3.0 * l * (d == 0);
    p.points.push_back(std::move(x));
    p.labels.push_back(l * 10 - 7);
  }
  return p;
}

inline LabeledPoints transform(const LabeledPoints& p, double angle, std::vector<double> shift) {
  auto q = p;
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& x : q.points) {
    const double a = x[0], b = x[1];
    x[0] = c * a - s * b + shift[0];
    x[1] = s * a + c * b + shift[1];
    for (std::size_t d = 2; d < x.size(); ++d) x[d] += shift[d];
  }
  return q;
}

}  // namespace oracle
