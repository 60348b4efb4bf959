#include "cfaudit/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cfaudit/common/random.hpp"

namespace cfaudit::data {

std::vector<std::size_t> strata(const Dataset& dataset, StratifyBy by) {
  std::map<std::vector<int>, std::size_t> ids;
  std::vector<std::size_t> out(dataset.size());
  const std::size_t n_sens = by == StratifyBy::target ? 0 : dataset.schema().sensitive.size();
  std::vector<int> key(1 + n_sens);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    key[0] = dataset.target()[i];
    for (std::size_t j = 0; j < n_sens; ++j) key[1 + j] = dataset.sensitive(j)[i];
    auto [it, inserted] = ids.emplace(key, ids.size());
    out[i] = it->second;
  }
  return out;
}

SplitResult stratified_split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                             StratifyBy by) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  const auto stratum = strata(dataset, by);
  const std::size_t n_strata = n == 0 ? 0 : *std::max_element(stratum.begin(), stratum.end()) + 1;

  std::vector<std::vector<std::size_t>> members(n_strata);
  for (std::size_t i = 0; i < n; ++i) members[stratum[i]].push_back(i);
  for (std::size_t s = 0; s < n_strata; ++s) {
    if (members[s].size() < 2) {
      throw SingletonStratumError("stratum " + std::to_string(s) + " holds a single row (row " +
                                  std::to_string(members[s].front()) + ")");
    }
  }

  const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> alloc(n_strata);
  std::vector<double> remainder(n_strata);
  std::size_t allocated = 0;
  for (std::size_t s = 0; s < n_strata; ++s) {
    const double exact = static_cast<double>(members[s].size()) * static_cast<double>(n_test) /
                         static_cast<double>(n);
    alloc[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - static_cast<double>(alloc[s]);
    allocated += alloc[s];
  }
  std::vector<std::size_t> order(n_strata);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; allocated < n_test && r < n_strata; ++r) {
    auto s = order[r];
    if (alloc[s] < members[s].size()) {
      ++alloc[s];
      ++allocated;
    }
  }

  SplitResult result;
  result.stratified_by = by;
  Rng rng(seed);
  for (std::size_t s = 0; s < n_strata; ++s) {
    auto rows = members[s];
    std::shuffle(rows.begin(), rows.end(), rng);
    result.test_rows.insert(result.test_rows.end(), rows.begin(), rows.begin() + alloc[s]);
    result.train_rows.insert(result.train_rows.end(), rows.begin() + alloc[s], rows.end());
  }
  std::sort(result.train_rows.begin(), result.train_rows.end());
  std::sort(result.test_rows.begin(), result.test_rows.end());
  result.train = dataset.subset(result.train_rows);
  result.test = dataset.subset(result.test_rows);
  return result;
}

SplitResult split_with_fallback(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  try {
    return stratified_split(dataset, test_fraction, seed, StratifyBy::target_and_sensitive);
  } catch (const SingletonStratumError& e) {
    auto result = stratified_split(dataset, test_fraction, seed, StratifyBy::target);
    result.warnings.push_back(std::string("fell back to target-only stratification: ") + e.what());
    return result;
  }
}

}  // namespace cfaudit::data
