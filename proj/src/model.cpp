#include "gsmsim/model.hpp"

#include <fstream>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

std::string to_string(TrainedModel::Kind kind) {
  return kind == TrainedModel::Kind::decision_tree ? "decision_tree" : "mlp";
}

int TrainedModel::predict(Eigen::Ref<const Eigen::VectorXd> raw_features) const {
  const Eigen::VectorXd scaled = scaling_.apply(raw_features);
  if (std::holds_alternative<DecisionTree>(model_))
    return std::get<DecisionTree>(model_).predict(scaled);
  return std::get<Mlp>(model_).predict(scaled);
}

void TrainedModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "gsmsim-model v1\n";
  out << "kind = " << to_string(kind()) << '\n';
  std::vector<double> mean(scaling_.mean.data(), scaling_.mean.data() + scaling_.mean.size());
  std::vector<double> stddev(scaling_.stddev.data(),
                             scaling_.stddev.data() + scaling_.stddev.size());
  out << "scale_mean = " << join_doubles(mean, ',') << '\n';
  out << "scale_stddev = " << join_doubles(stddev, ',') << '\n';
  if (std::holds_alternative<DecisionTree>(model_))
    std::get<DecisionTree>(model_).write(out);
  else
    std::get<Mlp>(model_).write(out);
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

TrainedModel TrainedModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "gsmsim-model v1")
    throw ConfigError(path + ": missing 'gsmsim-model v1' header");

  std::string kind;
  std::vector<double> mean, stddev;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, line)) throw ConfigError(path + ": truncated model header");
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ": malformed header line");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "kind") kind = value;
    else if (key == "scale_mean") mean = parse_double_list(value, key);
    else if (key == "scale_stddev") stddev = parse_double_list(value, key);
    else throw ConfigError(path + ": unexpected header key " + key);
  }
  if (mean.size() != stddev.size() || mean.empty())
    throw ConfigError(path + ": bad standardization parameters");
  Standardizer scaling;
  scaling.mean =
      Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  scaling.stddev = Eigen::Map<const Eigen::VectorXd>(
      stddev.data(), static_cast<Eigen::Index>(stddev.size()));

  if (kind == "decision_tree") return TrainedModel(DecisionTree::read(in), std::move(scaling));
  if (kind == "mlp") return TrainedModel(Mlp::read(in), std::move(scaling));
  throw ConfigError(path + ": unknown model kind '" + kind + "'");
}

}  // namespace gsmsim
