#include "cfaudit/proxy/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfaudit/cfgen/perturbation.hpp"
#include "cfaudit/common/error.hpp"
#include "cfaudit/common/format.hpp"
#include "cfaudit/data/group_stats.hpp"

namespace cfaudit::proxy {

double delta_shift(std::span<const double> x, std::span<const double> c, const cfgen::DecisionProbe& fs) {
  Matrix rows;
  rows.append_row(x);
  rows.append_row(c);
  const auto pred = fs.evaluate(rows);
  return delta_shift(pred.probas[0], pred.probas[1]);
}

ProxyReport proxy_correlations(const Matrix& eps, std::span<const double> delta, const data::ColumnMap& columns) {
  if (eps.rows() != delta.size()) throw ValidationError("perturbation rows and delta differ in length");
  if (eps.rows() < 3) {
    throw ValidationError("proxy analysis needs at least 3 pairs, got " + std::to_string(eps.rows()));
  }
  if (eps.cols() != columns.size()) throw ValidationError("perturbation width does not match the column map");
  ProxyReport report;
  report.n_pairs = eps.rows();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    ProxyEntry e;
    e.column = c;
    e.feature = columns[c].name;
    e.level = columns[c].level;
    e.n_pairs = eps.rows();
    const auto col = eps.column(c);
    const auto r = data::pearson(col, delta);
    e.rho = r ? Statistic::of(*r) : Statistic::undefined("zero variance");
    report.entries.push_back(std::move(e));
  }
  for (const auto& e : report.entries) {
    if (report.features.empty() || report.features.back().feature != e.feature) {
      report.features.push_back({e.feature, e.level, e.rho});
      continue;
    }
    auto& agg = report.features.back();
    if (e.rho.defined() && (!agg.rho.defined() || std::abs(*e.rho) > std::abs(*agg.rho))) {
      agg.level = e.level;
      agg.rho = e.rho;
    }
  }
  return report;
}

ProxyReport proxy_correlations(const data::Encoder& encoder, std::span<const cfgen::CounterfactualSet> sets,
                               std::span<const fairmetrics::FlipRecord> records, bool flipped_only) {
  if (sets.size() != records.size()) throw ValidationError("one flip record per counterfactual set is required");
  Matrix eps;
  std::vector<double> delta;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& set = sets[i];
    const auto& rec = records[i];
    if (set.sample_id != rec.sample_id) throw ValidationError("counterfactual sets and flip records are misaligned");
    if (!rec.included) continue;
    if (rec.member_probas.size() != set.members.size()) {
      throw ValidationError("flip record lacks member probabilities");
    }
    for (std::size_t m = 0; m < set.members.size(); ++m) {
      if (flipped_only && rec.member_labels[m] == rec.origin_label) continue;
      eps.append_row(cfgen::perturbation(encoder, set.origin, set.members[m].values));
      delta.push_back(delta_shift(rec.origin_proba, rec.member_probas[m]));
    }
  }
  if (eps.empty()) eps = Matrix(0, encoder.width());
  auto report = proxy_correlations(eps, delta, encoder.column_map());
  report.flipped_only = flipped_only;
  return report;
}

std::vector<ProxyEntry> top_k(const ProxyReport& report, std::size_t k, std::string* warning) {
  std::vector<ProxyEntry> defined;
  for (const auto& e : report.entries) {
    if (e.rho.defined()) defined.push_back(e);
  }
  if (defined.empty() && warning) *warning = "no defined correlation to rank";
  std::stable_sort(defined.begin(), defined.end(),
                   [](const ProxyEntry& a, const ProxyEntry& b) { return std::abs(*a.rho) > std::abs(*b.rho); });
  if (defined.size() > k) defined.resize(k);
  return defined;
}

void write_proxy_csv(std::ostream& out, const ProxyReport& report) {
  out << "feature,level,rho,n_pairs\n";
  for (const auto& e : report.entries) {
    out << csv_field(e.feature) << ',' << (e.level ? csv_field(*e.level) : "") << ','
        << (e.rho.defined() ? format_double(*e.rho) : "") << ',' << e.n_pairs << '\n';
  }
}

}  // namespace cfaudit::proxy
