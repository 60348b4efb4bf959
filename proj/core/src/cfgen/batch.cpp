#include "cfaudit/cfgen/batch.hpp"

#include <algorithm>

#include "cfaudit/common/error.hpp"
#include "cfaudit/common/parallel.hpp"
#include "cfaudit/common/random.hpp"

namespace cfaudit::cfgen {

ShortfallStats shortfall_stats(std::span<const CounterfactualSet> sets) {
  ShortfallStats s;
  s.samples = sets.size();
  std::vector<double> sizes;
  sizes.reserve(sets.size());
  for (const auto& set : sets) {
    if (set.shortfall()) ++s.with_shortfall;
    if (set.members.empty()) ++s.empty;
    s.total_members += set.members.size();
    sizes.push_back(static_cast<double>(set.members.size()));
  }
  if (!sizes.empty()) {
    std::sort(sizes.begin(), sizes.end());
    const std::size_t mid = sizes.size() / 2;
    s.median_size = sizes.size() % 2 ? sizes[mid] : (sizes[mid - 1] + sizes[mid]) / 2.0;
  }
  return s;
}

BatchResult batch_generate(const CounterfactualGenerator& generator, const DecisionProbe& f,
                           const Matrix& samples, std::span<const std::size_t> sample_ids, std::size_t k,
                           std::uint64_t base_seed, unsigned workers) {
  if (sample_ids.size() != samples.rows()) throw ValidationError("one sample id per sample is required");
  if (k == 0) throw ValidationError("k must be at least 1");
  if (!samples.empty()) {
    const auto pred = f.evaluate(samples);
    for (std::size_t i = 0; i < samples.rows(); ++i) {
      if (pred.labels[i] != 0) {
        throw ValidationError("sample " + std::to_string(sample_ids[i]) + " is not predicted 0");
      }
    }
  }
  BatchResult result;
  result.sets.resize(samples.rows());
  parallel_for(samples.rows(), workers, [&](std::size_t i) {
    auto set = generator.generate(samples.row(i), 1, k, sample_ids[i], derive_seed(base_seed, sample_ids[i]));
    revalidate(set, f);
    result.sets[i] = std::move(set);
  });
  result.stats = shortfall_stats(result.sets);
  return result;
}

}  // namespace cfaudit::cfgen
