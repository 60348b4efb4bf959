#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "cfaudit/cfgen/counterfactual.hpp"
#include "cfaudit/cfgen/distance.hpp"
#include "cfaudit/data/dataset.hpp"

namespace cfaudit::cfgen {

struct Neighbor {
  std::size_t row = 0;  ///< index into the pool
  double distance = 0.0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.row < b.row);
  }
};

/// KD-tree over the scaled numeric coordinates of a point set. The numeric
/// part of FeatureDistance bounds the full distance from below, so pruning
/// on box bounds is exact for mixed schemas.
class KdTree {
 public:
  KdTree(const Matrix& points, std::vector<std::size_t> ids, const FeatureDistance& distance,
         std::size_t leaf_size = 16);

  /// k nearest ids under `distance`, ordered by (distance, id). Only ids
  /// accepted by `admit` are considered.
  template <typename Admit>
  std::vector<Neighbor> nearest(std::span<const double> query, std::size_t k, Admit&& admit) const;

  std::size_t size() const { return ids_.size(); }

 private:
  struct Node {
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
    std::vector<double> lo, hi;  ///< bounds over numeric dims
  };

  int build(std::size_t begin, std::size_t end);
  double lower_bound(const Node& node, std::span<const double> q) const;

  const Matrix& points_;
  const FeatureDistance& distance_;
  std::vector<std::size_t> numeric_dims_;
  std::vector<std::size_t> ids_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// Counterfactuals drawn from a pool of real rows: the k nearest distinct
/// rows the decision maker assigns to the desired class. Rows must agree
/// with the origin on immutable features.
class KdTreeGenerator final : public CounterfactualGenerator {
 public:
  KdTreeGenerator(const data::Dataset& pool, DecisionProbe f, FeatureDistance distance);
  KdTreeGenerator(const KdTreeGenerator&) = delete;
  KdTreeGenerator& operator=(const KdTreeGenerator&) = delete;

  Strategy strategy() const override { return Strategy::kdtree; }
  CounterfactualSet generate(std::span<const double> x, int desired, std::size_t k, std::size_t sample_id,
                             std::uint64_t seed) const override;

  std::vector<Neighbor> nearest(std::span<const double> x, int desired, std::size_t k) const;
  /// Pool rows predicted `desired`, one per distinct feature vector.
  const std::vector<std::size_t>& candidates(int desired) const { return candidates_[desired]; }
  const Matrix& pool() const { return pool_; }
  const FeatureDistance& distance() const { return distance_; }

 private:
  Matrix pool_;
  DecisionProbe f_;
  FeatureDistance distance_;
  std::vector<std::size_t> immutable_;
  std::array<std::vector<std::size_t>, 2> candidates_;
  std::array<std::unique_ptr<KdTree>, 2> trees_;
};

// ---------------------------------------------------------------------------

template <typename Admit>
std::vector<Neighbor> KdTree::nearest(std::span<const double> query, std::size_t k, Admit&& admit) const {
  std::vector<Neighbor> heap;  // max-heap on (distance, id)
  if (k == 0 || nodes_.empty()) return heap;
  heap.reserve(k + 1);
  auto worst = [&] { return heap.front(); };

  // Depth-first, nearer child first.
  std::vector<std::pair<double, int>> stack{{0.0, 0}};
  while (!stack.empty()) {
    auto [bound, id] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound * (1.0 - 1e-9) > worst().distance) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t p = node.begin; p < node.end; ++p) {
        const std::size_t row = ids_[p];
        if (!admit(row)) continue;
        Neighbor cand{row, distance_(query, points_.row(row))};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < worst()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      continue;
    }
    const auto& l = nodes_[static_cast<std::size_t>(node.left)];
    const auto& r = nodes_[static_cast<std::size_t>(node.right)];
    const double bl = lower_bound(l, query), br = lower_bound(r, query);
    if (bl <= br) {
      stack.emplace_back(br, node.right);
      stack.emplace_back(bl, node.left);
    } else {
      stack.emplace_back(bl, node.left);
      stack.emplace_back(br, node.right);
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

}  // namespace cfaudit::cfgen
