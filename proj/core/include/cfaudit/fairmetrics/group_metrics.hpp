#pragma once

#include <span>

#include "cfaudit/common/statistic.hpp"

namespace cfaudit::fairmetrics {

/// Group fairness of thresholded predictions. `groups` holds 1 for the
/// privileged group and 0 otherwise. A metric whose conditioning cell is
/// empty is undefined and names the cell.

/// |P(y^=1 | S=1) - P(y^=1 | S=0)|
Statistic dsp(std::span<const int> predictions, std::span<const int> groups);

/// |P(y^=1 | S=1, Y=1) - P(y^=1 | S=0, Y=1)|
Statistic deo(std::span<const int> predictions, std::span<const int> labels, std::span<const int> groups);

/// (|FPR gap| + |TPR gap|) / 2
Statistic dao(std::span<const int> predictions, std::span<const int> labels, std::span<const int> groups);

}  // namespace cfaudit::fairmetrics
