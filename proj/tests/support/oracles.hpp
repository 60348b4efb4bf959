#pragma once

// Brute-force reference implementations. They deliberately share no code
// with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

inline double cflips(int origin, const std::vector<int>& members) {
  int flips = 0;
  for (int m : members) {
    if (m != origin) flips++;
  }
  return double(flips) / double(members.size());
}

// P(pred = 1 | group = s [, label = y])
inline std::optional<double> rate(const std::vector<int>& pred, const std::vector<int>& labels,
                                  const std::vector<int>& groups, int s, std::optional<int> y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < pred.size(); i++) {
    bool in = groups[i] == s;
    if (y) in = in && labels[i] == *y;
    if (in) {
      den += 1;
      if (pred[i] == 1) num += 1;
    }
  }
  if (den == 0) return std::nullopt;
  return num / den;
}

// Pairwise concordance.
inline std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double concordant = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); i++) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); j++) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) concordant += 1;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  return concordant / pairs;
}

// Textbook single-pass formula in extended precision.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = x.size(), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); i++) {
    sx += x[i];
    sy += y[i];
    sxx += (long double)x[i] * x[i];
    syy += (long double)y[i] * y[i];
    sxy += (long double)x[i] * y[i];
  }
  long double vx = n * sxx - sx * sx, vy = n * syy - sy * sy;
  bool cx = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
  bool cy = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (cx || cy) return std::nullopt;
  return double((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace oracle
