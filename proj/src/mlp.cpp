#include "gsmsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

namespace {

constexpr double kProbFloor = 1e-12;

// column-wise softmax with max subtraction
void softmax_inplace(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    Eigen::VectorXd col = z.col(c);
    const double peak = col.maxCoeff();
    col = (col.array() - peak).exp();
    z.col(c) = col / col.sum();
  }
}

}  // namespace

double cross_entropy_loss(const Eigen::MatrixXd& probabilities,
                          const std::vector<int>& labels) {
  const int n = static_cast<int>(probabilities.rows());
  if (n == 0 || static_cast<int>(labels.size()) != n)
    throw ConfigError("cross_entropy_loss: batch size mismatch");
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= probabilities.cols())
      throw ConfigError("cross_entropy_loss: label out of range");
    loss -= std::log(std::max(probabilities(i, label), kProbFloor));
  }
  return loss / n;
}

Mlp Mlp::init(int input_dim, std::span<const int> hidden_sizes, int n_classes, Rng& rng) {
  if (input_dim < 1 || n_classes < 1) throw ConfigError("mlp: invalid layer sizes");
  Mlp m;
  m.layer_sizes_.push_back(input_dim);
  for (int h : hidden_sizes) {
    if (h < 1) throw ConfigError("mlp: hidden size must be >= 1");
    m.layer_sizes_.push_back(h);
  }
  m.layer_sizes_.push_back(n_classes);

  for (std::size_t l = 0; l + 1 < m.layer_sizes_.size(); ++l) {
    const int fan_in = m.layer_sizes_[l];
    const int fan_out = m.layer_sizes_[l + 1];
    const double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    m.weights_.push_back(std::move(w));
    m.biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return m;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != input_dim())
    throw ConfigError("mlp forward: input width " + std::to_string(inputs.cols()) +
                      " != " + std::to_string(input_dim()));
  Eigen::MatrixXd a = inputs.transpose();  // features x batch
  const std::size_t n_layers = weights_.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (!z.allFinite())
      throw NumericError("mlp forward: non-finite activation at layer " + std::to_string(l));
    if (l + 1 < n_layers)
      a = z.cwiseMax(0.0);
    else {
      softmax_inplace(z);
      a = std::move(z);
    }
  }
  return a.transpose();
}

Eigen::VectorXd Mlp::forward(Eigen::Ref<const Eigen::VectorXd> input) const {
  Eigen::MatrixXd row(1, input.size());
  row.row(0) = input.transpose();
  return forward_batch(row).row(0).transpose();
}

int Mlp::predict(Eigen::Ref<const Eigen::VectorXd> input) const {
  const Eigen::VectorXd probs = forward(input);
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

double Mlp::min_abs_preactivation(Eigen::Ref<const Eigen::VectorXd> input) const {
  Eigen::VectorXd a = input;
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    smallest = std::min(smallest, z.cwiseAbs().minCoeff());
    a = (l + 1 < weights_.size()) ? z.cwiseMax(0.0).eval() : z;
  }
  return smallest;
}

double Mlp::loss_and_gradients(const Eigen::MatrixXd& inputs, const std::vector<int>& labels,
                               Gradients& grads) const {
  const int batch = static_cast<int>(inputs.rows());
  if (batch == 0 || static_cast<int>(labels.size()) != batch)
    throw ConfigError("mlp gradients: batch size mismatch");

  const std::size_t n_layers = weights_.size();
  std::vector<Eigen::MatrixXd> activations(n_layers + 1);  // features x batch
  activations[0] = inputs.transpose();
  std::vector<Eigen::MatrixXd> preacts(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    preacts[l] = weights_[l] * activations[l];
    preacts[l].colwise() += biases_[l];
    if (!preacts[l].allFinite())
      throw NumericError("mlp forward: non-finite activation at layer " + std::to_string(l));
    activations[l + 1] =
        (l + 1 < n_layers) ? preacts[l].cwiseMax(0.0).eval() : preacts[l];
  }
  Eigen::MatrixXd probs = activations[n_layers];
  softmax_inplace(probs);

  double loss = 0.0;
  for (int i = 0; i < batch; ++i)
    loss -= std::log(std::max(probs(labels[static_cast<std::size_t>(i)], i), kProbFloor));
  loss /= batch;

  // output delta: (softmax - one_hot) / batch
  Eigen::MatrixXd delta = probs;
  for (int i = 0; i < batch; ++i) delta(labels[static_cast<std::size_t>(i)], i) -= 1.0;
  delta /= static_cast<double>(batch);

  if (grads.weights.size() != n_layers) {
    grads.weights.resize(n_layers);
    grads.biases.resize(n_layers);
  }
  for (std::size_t li = n_layers; li-- > 0;) {
    grads.weights[li] = delta * activations[li].transpose();
    grads.biases[li] = delta.rowwise().sum();
    if (li > 0) {
      Eigen::MatrixXd back = weights_[li].transpose() * delta;
      delta = back.cwiseProduct((preacts[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

Mlp Mlp::train(const Eigen::MatrixXd& inputs, const std::vector<int>& labels, int n_classes,
               const MlpTrainConfig& config, MlpTrainRecord* record) {
  const int n = static_cast<int>(inputs.rows());
  if (n == 0) throw ConfigError("mlp_train: empty dataset");
  if (static_cast<int>(labels.size()) != n)
    throw ConfigError("mlp_train: feature/label row mismatch");

  Rng rng(config.seed);
  Mlp model = Mlp::init(static_cast<int>(inputs.cols()), config.hidden_sizes, n_classes, rng);

  Gradients grads;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  for (std::size_t l = 0; l < model.weights_.size(); ++l) {
    m_w.push_back(Eigen::MatrixXd::Zero(model.weights_[l].rows(), model.weights_[l].cols()));
    v_w.push_back(Eigen::MatrixXd::Zero(model.weights_[l].rows(), model.weights_[l].cols()));
    m_b.push_back(Eigen::VectorXd::Zero(model.biases_[l].size()));
    v_b.push_back(Eigen::VectorXd::Zero(model.biases_[l].size()));
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  long long step = 0;
  if (record) record->epoch_loss.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates shuffle on the shared stream
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int size = std::min(config.batch_size, n - start);
      Eigen::MatrixXd batch(size, inputs.cols());
      std::vector<int> batch_labels(static_cast<std::size_t>(size));
      for (int i = 0; i < size; ++i) {
        const int row = order[static_cast<std::size_t>(start + i)];
        batch.row(i) = inputs.row(row);
        batch_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(row)];
      }
      const double loss = model.loss_and_gradients(batch, batch_labels, grads);
      if (!std::isfinite(loss))
        throw NumericError("mlp_train: loss diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches));
      epoch_loss += loss;
      ++batches;

      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.weights_.size(); ++l) {
        m_w[l] = config.beta1 * m_w[l] + (1.0 - config.beta1) * grads.weights[l];
        v_w[l] = config.beta2 * v_w[l] +
                 (1.0 - config.beta2) * grads.weights[l].cwiseProduct(grads.weights[l]);
        model.weights_[l].array() -=
            config.learning_rate * (m_w[l].array() / bc1) /
            ((v_w[l].array() / bc2).sqrt() + config.epsilon);

        m_b[l] = config.beta1 * m_b[l] + (1.0 - config.beta1) * grads.biases[l];
        v_b[l] = config.beta2 * v_b[l] +
                 (1.0 - config.beta2) * grads.biases[l].cwiseProduct(grads.biases[l]);
        model.biases_[l].array() -= config.learning_rate * (m_b[l].array() / bc1) /
                                    ((v_b[l].array() / bc2).sqrt() + config.epsilon);
      }
    }
    if (record) record->epoch_loss.push_back(epoch_loss / std::max(1, batches));
  }
  if (record) {
    record->epochs = config.epochs;
    record->final_loss = record->epoch_loss.empty() ? 0.0 : record->epoch_loss.back();
  }
  return model;
}

double gradient_check(Mlp& model, Eigen::Ref<const Eigen::VectorXd> input, int label) {
  constexpr double step = 1e-5;
  Eigen::MatrixXd batch(1, input.size());
  batch.row(0) = input.transpose();
  const std::vector<int> labels{label};

  Mlp::Gradients analytic;
  model.loss_and_gradients(batch, labels, analytic);

  auto loss_at = [&]() {
    Mlp::Gradients scratch;
    return model.loss_and_gradients(batch, labels, scratch);
  };

  double worst = 0.0;
  auto compare = [&](double analytic_grad, double* param) {
    const double saved = *param;
    *param = saved + step;
    const double up = loss_at();
    *param = saved - step;
    const double down = loss_at();
    *param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = std::abs(analytic_grad - numeric) /
                       std::max({std::abs(analytic_grad), std::abs(numeric), 1.0});
    worst = std::max(worst, rel);
  };

  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    Eigen::MatrixXd& w = model.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i)
      compare(analytic.weights[l](i), w.data() + i);
    Eigen::VectorXd& b = model.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i)
      compare(analytic.biases[l](i), b.data() + i);
  }
  return worst;
}

void Mlp::write(std::ostream& out) const {
  out << "mlp layers=" << layer_sizes_.size();
  for (int s : layer_sizes_) out << ' ' << s;
  out << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out << "layer " << l << '\n';
    const Eigen::MatrixXd& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        out << (c ? " " : "") << fmt_double(w(r, c));
      out << '\n';
    }
    const Eigen::VectorXd& b = biases_[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) out << (i ? " " : "") << fmt_double(b(i));
    out << '\n';
  }
}

Mlp Mlp::read(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "mlp") throw ConfigError("model file: expected 'mlp' section");
  std::string layers_field;
  in >> layers_field;
  const auto eq = layers_field.find('=');
  if (eq == std::string::npos || layers_field.substr(0, eq) != "layers")
    throw ConfigError("model file: malformed mlp header");
  const int n_layers = static_cast<int>(parse_int(layers_field.substr(eq + 1), "layers"));
  Mlp m;
  m.layer_sizes_.resize(static_cast<std::size_t>(n_layers));
  for (auto& s : m.layer_sizes_) in >> s;
  for (int l = 0; l + 1 < n_layers; ++l) {
    std::string layer_tag;
    int layer_index = -1;
    in >> layer_tag >> layer_index;
    if (layer_tag != "layer" || layer_index != l)
      throw ConfigError("model file: malformed mlp layer block");
    const int rows = m.layer_sizes_[static_cast<std::size_t>(l + 1)];
    const int cols = m.layer_sizes_[static_cast<std::size_t>(l)];
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) in >> w(r, c);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) in >> b(i);
    if (!in) throw ConfigError("model file: truncated mlp parameters");
    m.weights_.push_back(std::move(w));
    m.biases_.push_back(std::move(b));
  }
  return m;
}

}  // namespace gsmsim
