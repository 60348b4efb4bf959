#include "cfaudit/cfgen/kdtree.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "cfaudit/common/error.hpp"

namespace cfaudit::cfgen {

KdTree::KdTree(const Matrix& points, std::vector<std::size_t> ids, const FeatureDistance& distance,
               std::size_t leaf_size)
    : points_(points), distance_(distance), ids_(std::move(ids)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  for (std::size_t j = 0; j < distance_.feature_count(); ++j) {
    if (!distance_.is_categorical(j) && distance_.scale(j) > 0.0) numeric_dims_.push_back(j);
  }
  if (!ids_.empty()) build(0, ids_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end, -1, -1, {}, {}});
  const std::size_t m = numeric_dims_.size();
  std::vector<double> lo(m, 0.0), hi(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t j = numeric_dims_[a];
    lo[a] = hi[a] = points_(ids_[begin], j);
    for (std::size_t p = begin + 1; p < end; ++p) {
      const double v = points_(ids_[p], j);
      lo[a] = std::min(lo[a], v);
      hi[a] = std::max(hi[a], v);
    }
  }
  // Split on the dimension with the widest scaled spread.
  std::size_t axis = m;
  double widest = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double spread = (hi[a] - lo[a]) / distance_.scale(numeric_dims_[a]);
    if (spread > widest) {
      widest = spread;
      axis = a;
    }
  }
  nodes_[static_cast<std::size_t>(id)].lo = std::move(lo);
  nodes_[static_cast<std::size_t>(id)].hi = std::move(hi);
  if (end - begin <= leaf_size_ || axis == m) return id;

  const std::size_t j = numeric_dims_[axis];
  const std::size_t mid = begin + (end - begin) / 2;
  auto first = ids_.begin() + static_cast<std::ptrdiff_t>(begin);
  std::nth_element(first, ids_.begin() + static_cast<std::ptrdiff_t>(mid), ids_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = points_(a, j), vb = points_(b, j);
                     return va < vb || (va == vb && a < b);
                   });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree::lower_bound(const Node& node, std::span<const double> q) const {
  double sum = 0.0;
  for (std::size_t a = 0; a < numeric_dims_.size(); ++a) {
    const std::size_t j = numeric_dims_[a];
    double gap = 0.0;
    if (q[j] < node.lo[a]) {
      gap = node.lo[a] - q[j];
    } else if (q[j] > node.hi[a]) {
      gap = q[j] - node.hi[a];
    }
    sum += gap / distance_.scale(j);
  }
  return sum / static_cast<double>(distance_.feature_count());
}

KdTreeGenerator::KdTreeGenerator(const data::Dataset& pool, DecisionProbe f, FeatureDistance distance)
    : pool_(pool.features()), f_(std::move(f)), distance_(std::move(distance)) {
  const auto& schema = pool.schema();
  if (distance_.feature_count() != schema.feature_count()) {
    throw ValidationError("kd-tree: distance does not match the pool schema");
  }
  for (std::size_t j = 0; j < schema.feature_count(); ++j) {
    if (schema.features[j].immutable) immutable_.push_back(j);
  }
  const auto pred = f_.evaluate(pool_);
  std::map<std::vector<double>, std::size_t> seen;
  for (std::size_t i = 0; i < pool_.rows(); ++i) {
    auto row = pool_.row(i);
    if (!seen.emplace(std::vector<double>(row.begin(), row.end()), i).second) continue;
    candidates_[static_cast<std::size_t>(pred.labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < 2; ++c) trees_[c] = std::make_unique<KdTree>(pool_, candidates_[c], distance_);
}

std::vector<Neighbor> KdTreeGenerator::nearest(std::span<const double> x, int desired, std::size_t k) const {
  if (desired != 0 && desired != 1) throw ValidationError("desired outcome must be 0 or 1");
  if (x.size() != pool_.cols()) throw ValidationError("kd-tree: query width does not match the pool");
  return trees_[static_cast<std::size_t>(desired)]->nearest(x, k, [&](std::size_t row) {
    for (auto j : immutable_) {
      if (pool_(row, j) != x[j]) return false;
    }
    return true;
  });
}

CounterfactualSet KdTreeGenerator::generate(std::span<const double> x, int desired, std::size_t k,
                                            std::size_t sample_id, std::uint64_t seed) const {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (f_.label(x) == desired) throw ValidationError("sample is already predicted with the desired outcome");
  CounterfactualSet set;
  set.sample_id = sample_id;
  set.origin.assign(x.begin(), x.end());
  set.desired = desired;
  set.strategy = Strategy::kdtree;
  set.seed = seed;
  set.requested = k;
  for (const auto& n : nearest(x, desired, k)) {
    auto row = pool_.row(n.row);
    set.members.push_back({std::vector<double>(row.begin(), row.end()), n.distance, true});
  }
  return set;
}

}  // namespace cfaudit::cfgen
