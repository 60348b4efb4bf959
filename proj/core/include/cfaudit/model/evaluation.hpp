#pragma once

#include <cstddef>
#include <span>

#include "cfaudit/common/statistic.hpp"
#include "cfaudit/model/classifier.hpp"

namespace cfaudit::model {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Confusion-matrix metrics use 0 for a 0/0 ratio. AUC is undefined when the
/// labels hold a single class.
struct EvalReport {
  double acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Statistic auc;
  Confusion confusion;
};

Confusion confusion_counts(std::span<const int> predictions, std::span<const int> labels);
double accuracy(const Confusion& c);
double precision(const Confusion& c);
double recall(const Confusion& c);
double f1_score(const Confusion& c);

/// Area under the ROC curve by rank statistics (Mann-Whitney U); tied
/// scores contribute one half.
Statistic roc_auc(std::span<const double> scores, std::span<const int> labels);

EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const double> scores,
                                std::span<const int> labels);
EvalReport evaluate(const ClassifierHandle& handle, const EncodedMatrix& test, std::span<const int> labels);

}  // namespace cfaudit::model
