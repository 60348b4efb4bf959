#include "cfaudit/data/group_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfaudit/common/error.hpp"
#include "cfaudit/data/encoding.hpp"

namespace cfaudit::data {

double ex_ante_sp(const Dataset& dataset, const GroupSpec& group) {
  const auto in_group = dataset.group_indicator(group);
  std::size_t n[2] = {0, 0};
  std::size_t pos[2] = {0, 0};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    ++n[in_group[i]];
    pos[in_group[i]] += static_cast<std::size_t>(dataset.target()[i]);
  }
  if (n[1] == 0) throw UndefinedStatisticError("no rows with " + group.column + "=" + group.privileged);
  if (n[0] == 0) throw UndefinedStatisticError("no rows with " + group.column + "=" + group.unprivileged);
  return static_cast<double>(pos[1]) / static_cast<double>(n[1]) -
         static_cast<double>(pos[0]) / static_cast<double>(n[0]);
}

std::pair<double, double> group_distribution(const Dataset& dataset, const GroupSpec& group) {
  const auto in_group = dataset.group_indicator(group);
  if (in_group.empty()) throw UndefinedStatisticError("empty dataset");
  const auto privileged = static_cast<double>(std::count(in_group.begin(), in_group.end(), 1));
  const auto total = static_cast<double>(in_group.size());
  return {privileged / total, (total - privileged) / total};
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) return std::nullopt;
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<SensitiveCorrelation> sensitive_correlations(const Dataset& dataset) {
  std::vector<SensitiveCorrelation> out;
  if (dataset.empty()) return out;
  const auto encoded = encode(dataset);
  const auto& schema = dataset.schema();
  for (std::size_t s = 0; s < schema.sensitive.size(); ++s) {
    const auto indicator = dataset.group_indicator(schema.default_group(schema.sensitive[s].column));
    std::vector<double> sv(indicator.begin(), indicator.end());
    const auto s_ranks = average_ranks(sv);
    for (std::size_t c = 0; c < encoded.cols(); ++c) {
      const auto column = encoded.values.column(c);
      SensitiveCorrelation entry;
      entry.feature = (*encoded.columns)[c].label();
      entry.sensitive = schema.sensitive[s].column;
      auto p = pearson(column, sv);
      auto r = pearson(average_ranks(column), s_ranks);
      entry.defined = p.has_value() && r.has_value();
      entry.pearson = p.value_or(0.0);
      entry.spearman = r.value_or(0.0);
      out.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace cfaudit::data
