#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfaudit/common/matrix.hpp"
#include "cfaudit/data/schema.hpp"

namespace cfaudit::cfgen {

/// Gower-style mixed distance: numeric and ordinal features contribute
/// |a - b| / MAD of the training column (range when MAD is 0, nothing when
/// the range is 0 too); categorical features contribute a 0/1 mismatch.
/// The total is the mean over features.
class FeatureDistance {
 public:
  FeatureDistance(const data::FeatureSchema& schema, const Matrix& train_features);

  double operator()(std::span<const double> a, std::span<const double> b) const;

  std::size_t feature_count() const { return kinds_.size(); }
  bool is_categorical(std::size_t j) const { return kinds_[j] == data::FeatureKind::categorical; }
  /// Divisor of feature j; 0 means the feature never contributes.
  double scale(std::size_t j) const { return scale_[j]; }

 private:
  std::vector<data::FeatureKind> kinds_;
  std::vector<double> scale_;
};

double median(std::vector<double> values);
/// Median absolute deviation from the median.
double median_absolute_deviation(std::span<const double> values);

}  // namespace cfaudit::cfgen
