#pragma once

#include <optional>
#include <string>
#include <utility>

namespace cfaudit {

/// A real-valued result that may be undefined (empty conditioning cell,
/// zero variance, ...). Undefined values carry the reason and are never
/// silently turned into zero.
struct Statistic {
  std::optional<double> value;
  std::string undefined_reason;

  static Statistic of(double v) { return Statistic{v, {}}; }
  static Statistic undefined(std::string reason) {
    return Statistic{std::nullopt, std::move(reason)};
  }

  bool defined() const { return value.has_value(); }
  double operator*() const { return *value; }
};

}  // namespace cfaudit
