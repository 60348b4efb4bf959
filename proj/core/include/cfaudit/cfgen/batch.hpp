#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"

namespace cfaudit::cfgen {

/// Shortfall bookkeeping over a batch.
struct ShortfallStats {
  std::size_t samples = 0;
  std::size_t with_shortfall = 0;
  std::size_t empty = 0;
  std::size_t total_members = 0;
  double median_size = 0.0;
};

struct BatchResult {
  std::vector<CounterfactualSet> sets;  ///< same order as the input samples
  ShortfallStats stats;
};

ShortfallStats shortfall_stats(std::span<const CounterfactualSet> sets);

/// Generates k counterfactuals (desired outcome 1) for every row of
/// `samples`, all of which must be predicted 0 by `f`. Sample i uses seed
/// derive_seed(base_seed, sample_ids[i]), so output does not depend on the
/// worker count.
BatchResult batch_generate(const CounterfactualGenerator& generator, const DecisionProbe& f,
                           const Matrix& samples, std::span<const std::size_t> sample_ids, std::size_t k,
                           std::uint64_t base_seed, unsigned workers = 1);

}  // namespace cfaudit::cfgen
