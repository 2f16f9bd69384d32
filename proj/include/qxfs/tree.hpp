#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qxfs/dataset.hpp"

namespace qxfs {

struct TreeParams {
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_split = 2;

  void validate() const {
    if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // majority class of the node's training rows

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Binary classification tree. Rows go left when value <= threshold.
class DecisionTree {
 public:
  static DecisionTree from_nodes(std::vector<TreeNode> nodes, std::size_t n_features, int n_classes) {
    DecisionTree tree;
    tree.nodes_ = std::move(nodes);
    tree.n_features_ = n_features;
    tree.n_classes_ = n_classes;
    tree.check();
    return tree;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  int n_classes() const noexcept { return n_classes_; }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [id, d] = stack.back();
      stack.pop_back();
      const auto& node = nodes_[static_cast<std::size_t>(id)];
      if (node.is_leaf()) {
        best = std::max(best, d);
      } else {
        stack.emplace_back(node.left, d + 1);
        stack.emplace_back(node.right, d + 1);
      }
    }
    return best;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                  [](const TreeNode& n) { return n.is_leaf(); }));
  }

  int predict_row(const Dataset& d, std::size_t row) const {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf()) {
      const auto& node = nodes_[id];
      id = static_cast<std::size_t>(
          d.value(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left
                                                                                 : node.right);
    }
    return nodes_[id].label;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  friend class TreeBuilder;

  void check() const {
    if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
    const int count = static_cast<int>(nodes_.size());
    for (int i = 0; i < count; ++i) {
      const auto& node = nodes_[static_cast<std::size_t>(i)];
      if (node.label < 0 || node.label >= n_classes_) throw std::invalid_argument("leaf class out of range");
      if (node.is_leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= n_features_) {
        throw std::invalid_argument("split feature out of range");
      }
      // Children always follow their parent, so every path terminates.
      if (node.left <= i || node.right <= i || node.left >= count || node.right >= count) {
        throw std::invalid_argument("invalid child index");
      }
    }
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
  int n_classes_ = 1;
};

// Greedy top-down gini induction. Candidate thresholds are midpoints of
// consecutive distinct sorted values; ties in split quality go to the lowest
// feature index and then the lowest threshold, so fitting is deterministic.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& train, const TreeParams& params) : data_(train), params_(params) {}

  DecisionTree build() {
    params_.validate();
    const std::size_t n = data_.rows();
    rows_.resize(n);
    std::iota(rows_.begin(), rows_.end(), std::size_t{0});
    scratch_.reserve(n);
    counts_.assign(static_cast<std::size_t>(data_.n_classes()), 0);
    left_counts_.assign(counts_.size(), 0);

    tree_.n_features_ = data_.features();
    tree_.n_classes_ = data_.n_classes();
    tree_.nodes_.push_back(TreeNode{});
    struct Work {
      int node;
      std::size_t begin, end, depth;
    };
    std::vector<Work> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      auto& node = tree_.nodes_[static_cast<std::size_t>(w.node)];
      node.label = class_counts(w.begin, w.end);
      if (!splittable(w.begin, w.end, w.depth)) continue;
      auto best = find_split(w.begin, w.end);
      if (!best) continue;

      const auto mid = partition(w.begin, w.end, best->feature, best->threshold);
      const int left = static_cast<int>(tree_.nodes_.size());
      tree_.nodes_.push_back(TreeNode{});
      tree_.nodes_.push_back(TreeNode{});
      auto& parent = tree_.nodes_[static_cast<std::size_t>(w.node)];
      parent.feature = static_cast<int>(best->feature);
      parent.threshold = best->threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({left + 1, mid, w.end, w.depth + 1});
      stack.push_back({left, w.begin, mid, w.depth + 1});
    }
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
  };

  // Fills counts_ for rows [begin, end) and returns the majority class
  // (lowest id on ties).
  int class_counts(std::size_t begin, std::size_t end) {
    std::fill(counts_.begin(), counts_.end(), std::size_t{0});
    for (std::size_t i = begin; i < end; ++i) ++counts_[static_cast<std::size_t>(data_.label(rows_[i]))];
    return static_cast<int>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
  }

  bool splittable(std::size_t begin, std::size_t end, std::size_t depth) const {
    const std::size_t m = end - begin;
    if (m < params_.min_samples_split) return false;
    if (params_.max_depth && depth >= *params_.max_depth) return false;
    const auto nonzero = std::count_if(counts_.begin(), counts_.end(), [](std::size_t c) { return c > 0; });
    return nonzero > 1;
  }

  // Maximizes sum_c(nL_c^2)/nL + sum_c(nR_c^2)/nR, which is equivalent to
  // minimizing the weighted gini impurity of the children.
  std::optional<Split> find_split(std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    std::optional<Split> best;
    double best_score = -1.0;
    for (std::size_t f = 0; f < data_.features(); ++f) {
      const auto column = data_.column(f);
      scratch_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        scratch_.emplace_back(column[rows_[i]], data_.label(rows_[i]));
      }
      std::sort(scratch_.begin(), scratch_.end());
      if (scratch_.front().first == scratch_.back().first) continue;

      std::fill(left_counts_.begin(), left_counts_.end(), std::size_t{0});
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (auto c : counts_) right_sq += static_cast<double>(c) * static_cast<double>(c);
      for (std::size_t i = 0; i + 1 < m; ++i) {
        const auto y = static_cast<std::size_t>(scratch_[i].second);
        const double l = static_cast<double>(left_counts_[y]);
        const double r = static_cast<double>(counts_[y] - left_counts_[y]);
        left_sq += 2.0 * l + 1.0;
        right_sq -= 2.0 * r - 1.0;
        ++left_counts_[y];
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(m - i - 1);
        const double score = left_sq / nl + right_sq / nr;
        if (score > best_score + 1e-12 * std::max(1.0, best_score)) {
          best_score = score;
          const double lo = scratch_[i].first;
          const double hi = scratch_[i + 1].first;
          double threshold = lo + (hi - lo) / 2.0;
          if (threshold >= hi) threshold = lo;
          best = Split{f, threshold};
        }
      }
    }
    return best;
  }

  std::size_t partition(std::size_t begin, std::size_t end, std::size_t feature, double threshold) {
    const auto column = data_.column(feature);
    auto it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                    rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                    [&](std::size_t r) { return column[r] <= threshold; });
    return static_cast<std::size_t>(it - rows_.begin());
  }

  const Dataset& data_;
  TreeParams params_;
  DecisionTree tree_;
  std::vector<std::size_t> rows_;
  std::vector<std::pair<double, int>> scratch_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> left_counts_;
};

inline DecisionTree fit(const Dataset& train, const TreeParams& params = {}) {
  return TreeBuilder(train, params).build();
}

inline std::vector<int> predict(const DecisionTree& tree, const Dataset& d) {
  if (d.features() != tree.n_features()) {
    throw std::invalid_argument("predict: feature count differs from the fitted tree");
  }
  std::vector<int> out(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) out[i] = tree.predict_row(d, i);
  return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

// Convenience: fit on `train`, score on `eval`.
inline double fit_and_score(const Dataset& train, const Dataset& eval, const TreeParams& params = {}) {
  const auto tree = fit(train, params);
  const auto predicted = predict(tree, eval);
  return accuracy(predicted, eval.labels());
}

}  // namespace qxfs
