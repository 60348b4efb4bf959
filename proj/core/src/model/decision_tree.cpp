#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/learners.hpp"

namespace cfaudit::model {

TreeParams TreeParams::from_json(const nlohmann::ordered_json& j) {
  TreeParams p;
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  if (p.max_depth < 0 || p.min_samples_split < 2 || p.min_samples_leaf < 1) {
    throw ValidationError("invalid decision tree parameters");
  }
  return p;
}

nlohmann::ordered_json TreeParams::to_json() const {
  return {{"max_depth", max_depth},
          {"min_samples_split", min_samples_split},
          {"min_samples_leaf", min_samples_leaf}};
}

DecisionTree::DecisionTree(TreeParams params, std::vector<TreeNode> nodes)
    : params_(params), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ValidationError("decision tree without nodes");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.feature >= 0 && (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)) {
      throw ValidationError("decision tree node has invalid children");
    }
  }
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const TreeParams& params, const Matrix& x, std::span<const int> y)
      : params_(params), x_(x), y_(y), goes_left_(x.rows(), 0) {}

  std::vector<TreeNode> build() {
    const std::size_t n = x_.rows(), d = x_.cols();
    // Per-feature row order sorted by value (stable on row index).
    std::vector<std::vector<std::size_t>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) {
      auto& order = sorted[f];
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
    }
    grow(std::move(sorted), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // sum over children of (positives^2 + negatives^2) / size
  };

  int grow(std::vector<std::vector<std::size_t>> sorted, int depth) {
    const auto& rows = sorted[0];
    const std::size_t n = rows.size();
    std::size_t pos = 0;
    for (auto r : rows) pos += static_cast<std::size_t>(y_[r]);

    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, n ? static_cast<double>(pos) / static_cast<double>(n) : 0.0, n});

    if (depth >= params_.max_depth || n < static_cast<std::size_t>(params_.min_samples_split) ||
        pos == 0 || pos == n) {
      return id;
    }
    const auto split = best_split(sorted, n, pos);
    if (split.feature < 0) return id;

    const auto f = static_cast<std::size_t>(split.feature);
    for (auto r : sorted[f]) goes_left_[r] = x_(r, f) <= split.threshold ? 1 : 0;
    std::vector<std::vector<std::size_t>> left(sorted.size()), right(sorted.size());
    for (std::size_t g = 0; g < sorted.size(); ++g) {
      for (auto r : sorted[g]) (goes_left_[r] ? left[g] : right[g]).push_back(r);
    }
    sorted.clear();
    sorted.shrink_to_fit();

    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const int l = grow(std::move(left), depth + 1);
    nodes_[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    nodes_[id].right = r;
    return id;
  }

  Split best_split(const std::vector<std::vector<std::size_t>>& sorted, std::size_t n,
                   std::size_t pos) const {
    // Zero-gain splits are allowed (an impure node always splits when a valid
    // split exists), which lets the tree separate XOR-like patterns.
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    Split best;
    best.score = -1.0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++left_n;
        left_pos += static_cast<std::size_t>(y_[order[i]]);
        const double v = x_(order[i], f);
        const double next = x_(order[i + 1], f);
        if (v == next) continue;
        const std::size_t right_n = n - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const std::size_t right_pos = pos - left_pos;
        const double ln = static_cast<double>(left_n), rn = static_cast<double>(right_n);
        const double lp = static_cast<double>(left_pos), rp = static_cast<double>(right_pos);
        const double score = (lp * lp + (ln - lp) * (ln - lp)) / ln + (rp * rp + (rn - rp) * (rn - rp)) / rn;
        if (score > best.score) {
          best.feature = static_cast<int>(f);
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best.threshold = mid;
          best.score = score;
        }
      }
    }
    return best;
  }

  const TreeParams& params_;
  const Matrix& x_;
  std::span<const int> y_;
  std::vector<char> goes_left_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::shared_ptr<const DecisionTree> DecisionTree::train(const TreeParams& params, const Matrix& x,
                                                        std::span<const int> labels) {
  if (x.cols() == 0) {
    // No features: a single leaf.
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y);
    return std::make_shared<DecisionTree>(
        params, std::vector<TreeNode>{TreeNode{-1, 0.0, -1, -1,
                                               static_cast<double>(pos) / static_cast<double>(labels.size()),
                                               labels.size()}});
  }
  TreeBuilder builder(params, x, labels);
  return std::make_shared<DecisionTree>(params, builder.build());
}

double DecisionTree::predict_row(std::span<const double> row) const {
  int node = 0;
  while (nodes_[node].feature >= 0) {
    const auto& nd = nodes_[node];
    node = row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes_[node].proba;
}

void DecisionTree::predict_proba(const Matrix& rows, std::span<double> out) const {
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_row(rows.row(i));
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, depth[i]);
    if (nodes_[i].feature >= 0) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

nlohmann::ordered_json DecisionTree::parameters() const {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"proba", n.proba},
                     {"samples", n.samples}});
  }
  return {{"nodes", std::move(nodes)}};
}

std::shared_ptr<const DecisionTree> DecisionTree::from_json(const nlohmann::ordered_json& hyper,
                                                            const nlohmann::ordered_json& params) {
  std::vector<TreeNode> nodes;
  for (const auto& n : params.at("nodes")) {
    nodes.push_back(TreeNode{n.at("feature").get<int>(), n.at("threshold").get<double>(),
                             n.at("left").get<int>(), n.at("right").get<int>(),
                             n.at("proba").get<double>(), n.value("samples", std::size_t{0})});
  }
  return std::make_shared<DecisionTree>(TreeParams::from_json(hyper), std::move(nodes));
}

}  // namespace cfaudit::model
