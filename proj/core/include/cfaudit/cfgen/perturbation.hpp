#pragma once

#include <span>
#include <vector>

#include "cfaudit/data/encoding.hpp"

namespace cfaudit::cfgen {

/// Perturbation from origin x to counterfactual c over the encoded columns:
/// numeric and ordinal columns hold c - x; each categorical feature holds
/// -1 on the vacated level and +1 on the entered level (all zero when the
/// level is unchanged).
std::vector<double> perturbation(const data::Encoder& encoder, std::span<const double> x,
                                 std::span<const double> c);

}  // namespace cfaudit::cfgen
