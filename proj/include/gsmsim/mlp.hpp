#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gsmsim/rng.hpp"

namespace gsmsim {

struct MlpTrainConfig {
  std::vector<int> hidden_sizes = std::vector<int>(15, 10);
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 200;
  std::uint64_t seed = 1;
};

struct MlpTrainRecord {
  std::vector<double> epoch_loss;  ///< mean batch loss per epoch
  double final_loss = 0.0;
  int epochs = 0;
};

/// Mean cross-entropy over a batch of probability rows (N x K) against
/// integer labels, natural logarithm, probabilities clamped at 1e-12.
double cross_entropy_loss(const Eigen::MatrixXd& probabilities, const std::vector<int>& labels);

/// Fully-connected rectified-linear classifier with a softmax head.
class Mlp {
 public:
  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  /// Fan-in-scaled uniform initialization, deterministic per stream.
  static Mlp init(int input_dim, std::span<const int> hidden_sizes, int n_classes, Rng& rng);

  /// Class probabilities for one input. Throws NumericError (naming the
  /// offending layer) if an activation goes non-finite.
  Eigen::VectorXd forward(Eigen::Ref<const Eigen::VectorXd> input) const;

  int predict(Eigen::Ref<const Eigen::VectorXd> input) const;

  /// Batch probabilities, one row per input row.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  /// Mean loss and parameter gradients for one batch (inputs as rows).
  double loss_and_gradients(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                            Gradients& grads) const;

  /// Mini-batch ADAM on the cross-entropy cost; epoch-shuffled batches,
  /// deterministic per config.seed. Inputs are expected standardized.
  static Mlp train(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                   int n_classes, const MlpTrainConfig& config,
                   MlpTrainRecord* record = nullptr);

  int input_dim() const { return layer_sizes_.front(); }
  int n_classes() const { return layer_sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  /// Smallest |pre-activation| seen anywhere on a forward pass; used to keep
  /// finite-difference checks away from the rectifier kink.
  double min_abs_preactivation(Eigen::Ref<const Eigen::VectorXd> input) const;

  void write(std::ostream& out) const;
  static Mlp read(std::istream& in);

 private:
  std::vector<int> layer_sizes_;           // [input, hidden..., classes]
  std::vector<Eigen::MatrixXd> weights_;   // layer l: (out x in)
  std::vector<Eigen::VectorXd> biases_;
};

/// Worst relative error between analytic and central finite-difference
/// gradients of the single-sample loss (step 1e-5).
double gradient_check(Mlp& model, Eigen::Ref<const Eigen::VectorXd> input, int label);

}  // namespace gsmsim
