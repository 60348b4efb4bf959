#include "cfaudit/model/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "cfaudit/common/error.hpp"

namespace cfaudit::model {

Confusion confusion_counts(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ValidationError("prediction and label counts differ");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1, y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double accuracy(const Confusion& c) { return ratio(c.tp + c.tn, c.total()); }
double precision(const Confusion& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const Confusion& c) { return ratio(c.tp, c.tp + c.fn); }
double f1_score(const Confusion& c) { return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn); }

Statistic roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return Statistic::undefined("AUC needs both classes");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return Statistic::of((rank_sum - np * (np + 1.0) / 2.0) / (np * nn));
}

EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const double> scores,
                                std::span<const int> labels) {
  if (labels.empty()) throw ValidationError("evaluate: empty test set");
  EvalReport r;
  r.confusion = confusion_counts(predictions, labels);
  r.acc = accuracy(r.confusion);
  r.precision = precision(r.confusion);
  r.recall = recall(r.confusion);
  r.f1 = f1_score(r.confusion);
  r.auc = roc_auc(scores, labels);
  return r;
}

EvalReport evaluate(const ClassifierHandle& handle, const EncodedMatrix& test, std::span<const int> labels) {
  if (test.rows() == 0) throw ValidationError("evaluate: empty test set");
  const auto p = handle.predict(test);
  return evaluate_predictions(p.labels, p.probas, labels);
}

}  // namespace cfaudit::model
