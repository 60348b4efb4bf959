#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfaudit/data/dataset.hpp"

namespace cfaudit::data {

/// Ex-ante statistical parity on ground-truth labels:
/// P(y=1 | s+) - P(y=1 | s-). Throws UndefinedStatisticError for an empty group.
double ex_ante_sp(const Dataset& dataset, const GroupSpec& group);

/// (P(s+), P(s-)).
std::pair<double, double> group_distribution(const Dataset& dataset, const GroupSpec& group);

/// Pearson and Spearman correlation of one encoded feature column with the
/// privileged indicator of one sensitive column.
struct SensitiveCorrelation {
  std::string feature;  ///< encoded column label
  std::string sensitive;
  double pearson = 0.0;
  double spearman = 0.0;
  bool defined = false;
};

std::vector<SensitiveCorrelation> sensitive_correlations(const Dataset& dataset);

/// Sample Pearson correlation; nullopt when either input is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
/// Average ranks (ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace cfaudit::data
