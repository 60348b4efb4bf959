#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfaudit/common/error.hpp"
#include "cfaudit/data/dataset.hpp"

namespace cfaudit::data {

enum class StratifyBy { target_and_sensitive, target };

/// A stratum with a single row cannot be split.
class SingletonStratumError : public Error {
 public:
  using Error::Error;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  ///< indices into the source, ascending
  std::vector<std::size_t> test_rows;
  StratifyBy stratified_by = StratifyBy::target_and_sensitive;
  std::vector<std::string> warnings;
};

/// Stratified hold-out split. The test set has ceil(test_fraction * n) rows,
/// allocated to strata by largest remainder; rows within a stratum are
/// shuffled with a generator seeded by `seed`.
SplitResult stratified_split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                             StratifyBy by = StratifyBy::target_and_sensitive);

/// Target x sensitive stratification, falling back to target-only
/// stratification (with a warning) when a stratum holds a single row.
SplitResult split_with_fallback(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// Stratum id of every row (dense, in order of first appearance).
std::vector<std::size_t> strata(const Dataset& dataset, StratifyBy by);

}  // namespace cfaudit::data
