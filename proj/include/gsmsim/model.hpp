#pragma once

#include <string>
#include <variant>

#include "gsmsim/decision_tree.hpp"
#include "gsmsim/features.hpp"
#include "gsmsim/mlp.hpp"

namespace gsmsim {

/// A fitted classifier plus the feature scaling it was trained under.
/// predict() takes raw (unscaled) feature vectors.
class TrainedModel {
 public:
  enum class Kind { decision_tree, mlp };

  TrainedModel(DecisionTree tree, Standardizer scaling)
      : model_(std::move(tree)), scaling_(std::move(scaling)) {}
  TrainedModel(Mlp mlp, Standardizer scaling)
      : model_(std::move(mlp)), scaling_(std::move(scaling)) {}

  Kind kind() const {
    return std::holds_alternative<DecisionTree>(model_) ? Kind::decision_tree : Kind::mlp;
  }

  int predict(Eigen::Ref<const Eigen::VectorXd> raw_features) const;

  const Standardizer& scaling() const { return scaling_; }
  const DecisionTree& tree() const { return std::get<DecisionTree>(model_); }
  const Mlp& mlp() const { return std::get<Mlp>(model_); }

  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);

 private:
  std::variant<DecisionTree, Mlp> model_;
  Standardizer scaling_;
};

std::string to_string(TrainedModel::Kind kind);

}  // namespace gsmsim
