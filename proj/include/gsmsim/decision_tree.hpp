#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gsmsim {

/// Shannon entropy in bits of a class-count vector. 0 log 0 counts as 0.
/// Throws std::domain_error when all counts are zero.
double entropy_bits(std::span<const std::int64_t> class_counts);

/// Eq.-style information gain: parent entropy minus the count-weighted mean
/// child entropy. The children must partition the parent counts exactly
/// (std::logic_error otherwise). Never negative.
double information_gain(std::span<const std::int64_t> parent_counts,
                        const std::vector<std::vector<std::int64_t>>& child_counts);

struct TreeNode {
  int feature = -1;       ///< split feature; -1 marks a leaf
  double threshold = 0.0;  ///< go left when value <= threshold
  double gain = 0.0;       ///< information gain of the chosen split
  int left = -1;
  int right = -1;
  int label = -1;  ///< majority class at this node (prediction for leaves)
  std::vector<std::int64_t> histogram;  ///< training class counts at this node

  bool is_leaf() const { return feature < 0; }
};

/// Greedy binary classification tree. Split candidates are midpoints between
/// consecutive sorted distinct feature values; the (feature, threshold) pair
/// with maximal information gain wins, ties broken toward the lowest feature
/// index then the lowest threshold. Nodes stop splitting when pure, at
/// max_depth, smaller than 2 rows, or without any candidate split.
class DecisionTree {
 public:
  static DecisionTree train(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            int n_classes, int max_depth = 17);

  int predict(Eigen::Ref<const Eigen::VectorXd> features) const;

  int depth() const;
  int n_classes() const { return n_classes_; }
  int n_features() const { return n_features_; }
  int max_depth() const { return max_depth_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  void write(std::ostream& out) const;
  static DecisionTree read(std::istream& in);

 private:
  std::vector<TreeNode> nodes_;
  int n_features_ = 0;
  int n_classes_ = 0;
  int max_depth_ = 0;
};

}  // namespace gsmsim
