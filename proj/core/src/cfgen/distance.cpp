#include "cfaudit/cfgen/distance.hpp"

#include <algorithm>
#include <cmath>

#include "cfaudit/common/error.hpp"

namespace cfaudit::cfgen {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

double median_absolute_deviation(std::span<const double> values) {
  const double m = median({values.begin(), values.end()});
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(std::move(dev));
}

FeatureDistance::FeatureDistance(const data::FeatureSchema& schema, const Matrix& train_features) {
  const std::size_t d = schema.feature_count();
  if (train_features.cols() != d && !train_features.empty()) {
    throw ValidationError("distance: training matrix width does not match the schema");
  }
  kinds_.reserve(d);
  scale_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    kinds_.push_back(schema.features[j].kind);
    if (kinds_[j] == data::FeatureKind::categorical) {
      scale_[j] = 1.0;
      continue;
    }
    if (train_features.empty()) continue;
    const auto col = train_features.column(j);
    const double mad = median_absolute_deviation(col);
    if (mad > 0.0) {
      scale_[j] = mad;
    } else {
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      scale_[j] = *hi - *lo;
    }
  }
}

double FeatureDistance::operator()(std::span<const double> a, std::span<const double> b) const {
  const std::size_t d = kinds_.size();
  if (d == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (kinds_[j] == data::FeatureKind::categorical) {
      if (a[j] != b[j]) sum += 1.0;
    } else if (scale_[j] > 0.0) {
      sum += std::abs(a[j] - b[j]) / scale_[j];
    }
  }
  return sum / static_cast<double>(d);
}

}  // namespace cfaudit::cfgen
