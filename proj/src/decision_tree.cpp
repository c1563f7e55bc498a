#include "gsmsim/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

double entropy_bits(std::span<const std::int64_t> class_counts) {
  std::int64_t total = 0;
  for (std::int64_t c : class_counts) {
    if (c < 0) throw std::domain_error("entropy: negative count");
    total += c;
  }
  if (total == 0) throw std::domain_error("entropy: all counts zero");
  double h = 0.0;
  for (std::int64_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double information_gain(std::span<const std::int64_t> parent_counts,
                        const std::vector<std::vector<std::int64_t>>& child_counts) {
  std::vector<std::int64_t> recombined(parent_counts.size(), 0);
  for (const auto& child : child_counts) {
    if (child.size() != parent_counts.size())
      throw std::logic_error("information_gain: class count size mismatch");
    for (std::size_t k = 0; k < child.size(); ++k) recombined[k] += child[k];
  }
  for (std::size_t k = 0; k < parent_counts.size(); ++k)
    if (recombined[k] != parent_counts[k])
      throw std::logic_error("information_gain: children do not partition the parent");

  std::int64_t total = 0;
  for (std::int64_t c : parent_counts) total += c;
  double gain = entropy_bits(parent_counts);
  for (const auto& child : child_counts) {
    std::int64_t child_total = 0;
    for (std::int64_t c : child) child_total += c;
    if (child_total == 0) continue;
    gain -= (static_cast<double>(child_total) / static_cast<double>(total)) *
            entropy_bits(child);
  }
  return std::max(0.0, gain);  // exact partitions cannot lose information
}

namespace {

double counts_entropy(const std::vector<std::int64_t>& counts, std::int64_t total) {
  double h = 0.0;
  for (std::int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

int majority_class(const std::vector<std::int64_t>& counts) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(counts.size()); ++k)
    if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(best)]) best = k;
  return best;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

}  // namespace

DecisionTree DecisionTree::train(const Eigen::MatrixXd& features,
                                 const std::vector<int>& labels, int n_classes,
                                 int max_depth) {
  const int n = static_cast<int>(features.rows());
  const int q = static_cast<int>(features.cols());
  if (n == 0) throw ConfigError("dt_train: empty dataset");
  if (static_cast<int>(labels.size()) != n)
    throw ConfigError("dt_train: feature/label row mismatch");
  if (n_classes < 1) throw ConfigError("dt_train: n_classes must be >= 1");
  if (max_depth < 1) throw ConfigError("dt_train: max_depth must be >= 1");
  for (int label : labels)
    if (label < 0 || label >= n_classes) throw ConfigError("dt_train: label out of range");

  DecisionTree tree;
  tree.n_features_ = q;
  tree.n_classes_ = n_classes;
  tree.max_depth_ = max_depth;

  struct Work {
    std::vector<int> rows;
    int depth;
    int node_index;
  };

  std::vector<int> all_rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;

  std::vector<Work> stack;
  tree.nodes_.emplace_back();
  stack.push_back({std::move(all_rows), 0, 0});

  std::vector<std::pair<double, int>> sorted;  // (value, label) per feature scan

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = tree.nodes_[static_cast<std::size_t>(work.node_index)];

    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int row : work.rows) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(row)])];
    node.histogram = counts;
    node.label = majority_class(counts);

    const std::int64_t total = static_cast<std::int64_t>(work.rows.size());
    const bool pure =
        counts[static_cast<std::size_t>(node.label)] == total;
    if (pure || work.depth >= max_depth || total < 2) continue;

    const double parent_entropy = counts_entropy(counts, total);

    SplitChoice best;
    std::vector<std::int64_t> left_counts(static_cast<std::size_t>(n_classes));
    for (int f = 0; f < q; ++f) {
      sorted.clear();
      sorted.reserve(work.rows.size());
      for (int row : work.rows)
        sorted.emplace_back(features(row, f), labels[static_cast<std::size_t>(row)]);
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant feature

      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::int64_t left_total = 0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left_counts[static_cast<std::size_t>(sorted[i].second)];
        ++left_total;
        if (sorted[i].first == sorted[i + 1].first) continue;  // not a value boundary
        const std::int64_t right_total = total - left_total;
        double left_h = 0.0, right_h = 0.0;
        for (int k = 0; k < n_classes; ++k) {
          const std::int64_t lc = left_counts[static_cast<std::size_t>(k)];
          const std::int64_t rc = counts[static_cast<std::size_t>(k)] - lc;
          if (lc > 0) {
            const double p = static_cast<double>(lc) / static_cast<double>(left_total);
            left_h -= p * std::log2(p);
          }
          if (rc > 0) {
            const double p = static_cast<double>(rc) / static_cast<double>(right_total);
            right_h -= p * std::log2(p);
          }
        }
        const double gain =
            parent_entropy -
            (static_cast<double>(left_total) / static_cast<double>(total)) * left_h -
            (static_cast<double>(right_total) / static_cast<double>(total)) * right_h;
        if (!best.found || gain > best.gain) {
          best.found = true;
          best.feature = f;
          best.threshold = sorted[i].first + 0.5 * (sorted[i + 1].first - sorted[i].first);
          best.gain = gain;
        }
      }
    }
    if (!best.found) continue;  // no value boundary on any feature

    std::vector<int> left_rows, right_rows;
    for (int row : work.rows) {
      if (features(row, best.feature) <= best.threshold)
        left_rows.push_back(row);
      else
        right_rows.push_back(row);
    }

    const int left_index = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    const int right_index = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();

    TreeNode& refreshed = tree.nodes_[static_cast<std::size_t>(work.node_index)];
    refreshed.feature = best.feature;
    refreshed.threshold = best.threshold;
    refreshed.gain = std::max(0.0, best.gain);
    refreshed.left = left_index;
    refreshed.right = right_index;

    stack.push_back({std::move(right_rows), work.depth + 1, right_index});
    stack.push_back({std::move(left_rows), work.depth + 1, left_index});
  }
  return tree;
}

int DecisionTree::predict(Eigen::Ref<const Eigen::VectorXd> features) const {
  if (static_cast<int>(features.size()) != n_features_)
    throw ConfigError("dt_predict: feature vector length " +
                      std::to_string(features.size()) + " != " + std::to_string(n_features_));
  int index = 0;
  while (!nodes_[static_cast<std::size_t>(index)].is_leaf()) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(index)];
    index = features(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(index)].label;
}

int DecisionTree::depth() const {
  // breadth-first walk from the root
  std::vector<std::pair<int, int>> queue{{0, 0}};
  int deepest = 0;
  for (std::size_t at = 0; at < queue.size(); ++at) {
    const auto [index, depth] = queue[at];
    deepest = std::max(deepest, depth);
    const TreeNode& node = nodes_[static_cast<std::size_t>(index)];
    if (!node.is_leaf()) {
      queue.emplace_back(node.left, depth + 1);
      queue.emplace_back(node.right, depth + 1);
    }
  }
  return deepest;
}

void DecisionTree::write(std::ostream& out) const {
  out << "tree n_features=" << n_features_ << " n_classes=" << n_classes_
      << " max_depth=" << max_depth_ << " nodes=" << nodes_.size() << '\n';
  for (const auto& node : nodes_) {
    out << node.feature << ' ' << fmt_double(node.threshold) << ' ' << fmt_double(node.gain)
        << ' ' << node.left << ' ' << node.right << ' ' << node.label;
    for (std::int64_t c : node.histogram) out << ' ' << c;
    out << '\n';
  }
}

DecisionTree DecisionTree::read(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "tree") throw ConfigError("model file: expected 'tree' section");
  DecisionTree tree;
  std::size_t node_count = 0;
  for (int i = 0; i < 4; ++i) {
    std::string field;
    in >> field;
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("model file: malformed tree header");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "n_features") tree.n_features_ = static_cast<int>(parse_int(value, key));
    else if (key == "n_classes") tree.n_classes_ = static_cast<int>(parse_int(value, key));
    else if (key == "max_depth") tree.max_depth_ = static_cast<int>(parse_int(value, key));
    else if (key == "nodes") node_count = static_cast<std::size_t>(parse_int(value, key));
    else throw ConfigError("model file: unknown tree header field " + key);
  }
  tree.nodes_.resize(node_count);
  for (auto& node : tree.nodes_) {
    in >> node.feature >> node.threshold >> node.gain >> node.left >> node.right >> node.label;
    node.histogram.assign(static_cast<std::size_t>(tree.n_classes_), 0);
    for (auto& c : node.histogram) in >> c;
    if (!in) throw ConfigError("model file: truncated tree node table");
  }
  return tree;
}

}  // namespace gsmsim
