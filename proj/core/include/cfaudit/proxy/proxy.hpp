#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/common/statistic.hpp"
#include "cfaudit/data/encoding.hpp"
#include "cfaudit/fairmetrics/flips.hpp"

namespace cfaudit::proxy {

/// delta = P(f_s = privileged | c) - P(f_s = privileged | x)
inline double delta_shift(double origin_proba, double counterfactual_proba) {
  return counterfactual_proba - origin_proba;
}
double delta_shift(std::span<const double> x, std::span<const double> c, const cfgen::DecisionProbe& fs);

/// Correlation of one encoded perturbation column with delta.
struct ProxyEntry {
  std::size_t column = 0;  ///< encoded column index (declaration order)
  std::string feature;
  std::optional<std::string> level;
  Statistic rho;
  std::size_t n_pairs = 0;

  std::string label() const { return level ? feature + "=" + *level : feature; }
};

/// Per original feature: the level entry with the largest |rho|.
struct FeatureAggregate {
  std::string feature;
  std::optional<std::string> level;
  Statistic rho;  ///< signed rho of the strongest level
};

struct ProxyReport {
  std::vector<ProxyEntry> entries;
  std::vector<FeatureAggregate> features;
  std::size_t n_pairs = 0;
  bool flipped_only = false;
};

/// Core computation over a prepared perturbation matrix (one row per pair,
/// one column per encoded column) and delta vector. Throws
/// ValidationError with fewer than 3 pairs.
ProxyReport proxy_correlations(const Matrix& eps, std::span<const double> delta, const data::ColumnMap& columns);

/// Pools every (x, c) pair of the included records. `sets[i]` must belong
/// to `records[i]`, whose member probabilities supply delta. With
/// `flipped_only`, only members whose f_s label differs from the origin's
/// are used.
ProxyReport proxy_correlations(const data::Encoder& encoder, std::span<const cfgen::CounterfactualSet> sets,
                               std::span<const fairmetrics::FlipRecord> records, bool flipped_only = false);

/// The k entries with the largest |rho|; undefined entries are skipped and
/// ties keep declaration order. `warning` is set when nothing is defined.
std::vector<ProxyEntry> top_k(const ProxyReport& report, std::size_t k, std::string* warning = nullptr);

/// feature,level,rho,n_pairs (rho empty when undefined).
void write_proxy_csv(std::ostream& out, const ProxyReport& report);

}  // namespace cfaudit::proxy
