#include "cfaudit/fairmetrics/group_metrics.hpp"

#include <cmath>
#include <string>

#include "cfaudit/common/error.hpp"

namespace cfaudit::fairmetrics {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("fairness metric inputs differ in length");
}

// P(y^=1 | S=s, Y=y); y < 0 ignores the label.
Statistic positive_rate(std::span<const int> pred, std::span<const int> labels, std::span<const int> groups, int s,
                        int y) {
  std::size_t n = 0, pos = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (groups[i] != s || (y >= 0 && labels[i] != y)) continue;
    ++n;
    pos += pred[i] == 1 ? 1 : 0;
  }
  if (n == 0) {
    std::string cell = "S=" + std::to_string(s);
    if (y >= 0) cell += ", Y=" + std::to_string(y);
    return Statistic::undefined("empty cell " + cell);
  }
  return Statistic::of(static_cast<double>(pos) / static_cast<double>(n));
}

Statistic rate_gap(std::span<const int> pred, std::span<const int> labels, std::span<const int> groups, int y) {
  const auto priv = positive_rate(pred, labels, groups, 1, y);
  if (!priv.defined()) return priv;
  const auto unpriv = positive_rate(pred, labels, groups, 0, y);
  if (!unpriv.defined()) return unpriv;
  return Statistic::of(std::abs(*priv - *unpriv));
}

}  // namespace

Statistic dsp(std::span<const int> predictions, std::span<const int> groups) {
  check_sizes(predictions.size(), groups.size());
  return rate_gap(predictions, {}, groups, -1);
}

Statistic deo(std::span<const int> predictions, std::span<const int> labels, std::span<const int> groups) {
  check_sizes(predictions.size(), groups.size());
  check_sizes(predictions.size(), labels.size());
  return rate_gap(predictions, labels, groups, 1);
}

Statistic dao(std::span<const int> predictions, std::span<const int> labels, std::span<const int> groups) {
  check_sizes(predictions.size(), groups.size());
  check_sizes(predictions.size(), labels.size());
  const auto fpr = rate_gap(predictions, labels, groups, 0);
  if (!fpr.defined()) return fpr;
  const auto tpr = rate_gap(predictions, labels, groups, 1);
  if (!tpr.defined()) return tpr;
  return Statistic::of((*fpr + *tpr) / 2.0);
}

}  // namespace cfaudit::fairmetrics
