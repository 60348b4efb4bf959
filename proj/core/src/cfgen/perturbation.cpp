#include "cfaudit/cfgen/perturbation.hpp"

#include "cfaudit/common/error.hpp"

namespace cfaudit::cfgen {

std::vector<double> perturbation(const data::Encoder& encoder, std::span<const double> x,
                                 std::span<const double> c) {
  const auto offsets = encoder.offsets();
  if (x.size() != offsets.size() || c.size() != offsets.size()) {
    throw ValidationError("perturbation: row width does not match the schema");
  }
  const auto& columns = encoder.column_map();
  std::vector<double> eps(encoder.width(), 0.0);
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    const std::size_t off = offsets[j];
    if (columns[off].kind != data::FeatureKind::categorical) {
      eps[off] = c[j] - x[j];
    } else if (x[j] != c[j]) {
      eps[off + static_cast<std::size_t>(x[j])] = -1.0;
      eps[off + static_cast<std::size_t>(c[j])] = 1.0;
    }
  }
  return eps;
}

}  // namespace cfaudit::cfgen
