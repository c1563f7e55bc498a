#include "gsmsim/features.hpp"

#include <cmath>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& row) const {
  return (row - mean).cwiseQuotient(stddev);
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& rows) const {
  return (rows.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Eigen::VectorXd Standardizer::invert(const Eigen::VectorXd& row) const {
  return row.cwiseProduct(stddev) + mean;
}

std::vector<double> gain_features(const ChannelMatrix& h_est, const SubsetPartition& partition) {
  Eigen::VectorXd column_power = h_est.colwise().squaredNorm().real();
  std::vector<double> gains(static_cast<std::size_t>(partition.subset_count()), 0.0);
  for (int k = 0; k < partition.subset_count(); ++k) {
    double sum = 0.0;
    for (const auto& combo : partition.subsets[static_cast<std::size_t>(k)])
      for (int t : combo.active) sum += column_power(t);
    gains[static_cast<std::size_t>(k)] = sum;
  }
  return gains;
}

namespace {

// Single detection implementation shared by ml_detect-style scans over
// precomputed combined columns.
GsmSymbol detect_over_columns(const Eigen::VectorXcd& y,
                              const std::vector<Eigen::VectorXcd>& columns,
                              std::span<const std::complex<double>> constellation,
                              double tx_scale) {
  GsmSymbol best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (int ci = 0; ci < static_cast<int>(columns.size()); ++ci) {
    const Eigen::VectorXcd& u = columns[static_cast<std::size_t>(ci)];
    for (int qi = 0; qi < static_cast<int>(constellation.size()); ++qi) {
      const std::complex<double> s = tx_scale * constellation[static_cast<std::size_t>(qi)];
      double metric = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) metric += std::norm(y(i) - s * u(i));
      if (metric < best_metric) {
        best_metric = metric;
        best = {ci, qi};
      }
    }
  }
  return best;
}

}  // namespace

std::vector<double> evm_features(const ChannelMatrix& h_true, const ChannelMatrix& h_est,
                                 const SubsetPartition& partition,
                                 std::span<const std::complex<double>> constellation,
                                 int pilot_count, double snr_db, double tx_scale, Rng& rng) {
  if (pilot_count < 1) throw ConfigError("evm_features: pilot_count must be >= 1");
  const int n_combos = partition.combos_per_subset();
  const int m = static_cast<int>(constellation.size());
  const bool noise_free = std::isinf(snr_db) && snr_db > 0.0;
  const double sigma = noise_free ? 0.0 : std::sqrt(noise_variance(snr_db, 1.0));

  std::vector<double> evm(static_cast<std::size_t>(partition.subset_count()), 0.0);
  std::vector<Eigen::VectorXcd> u_true(static_cast<std::size_t>(n_combos));
  std::vector<Eigen::VectorXcd> u_est(static_cast<std::size_t>(n_combos));
  Eigen::VectorXcd y(h_true.rows());

  for (int k = 0; k < partition.subset_count(); ++k) {
    const auto& subset = partition.subsets[static_cast<std::size_t>(k)];
    for (int ci = 0; ci < n_combos; ++ci) {
      u_true[static_cast<std::size_t>(ci)] =
          combined_column(h_true, subset[static_cast<std::size_t>(ci)]);
      u_est[static_cast<std::size_t>(ci)] =
          combined_column(h_est, subset[static_cast<std::size_t>(ci)]);
    }
    double error_power = 0.0;
    for (int p = 0; p < pilot_count; ++p) {
      const int ci = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_combos)));
      const int qi = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m)));
      const std::complex<double> s = tx_scale * constellation[static_cast<std::size_t>(qi)];
      y = s * u_true[static_cast<std::size_t>(ci)];
      if (!noise_free)
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sigma * rng.complex_gaussian();
      const GsmSymbol det = detect_over_columns(y, u_est, constellation, tx_scale);
      const std::complex<double> s_det =
          tx_scale * constellation[static_cast<std::size_t>(det.qam_index)];
      error_power +=
          (y - s_det * u_est[static_cast<std::size_t>(det.combo_index)]).squaredNorm();
    }
    // percent of unit average symbol power
    evm[static_cast<std::size_t>(k)] = 100.0 * (error_power / pilot_count);
  }
  return evm;
}

std::vector<double> diff_features(const ChannelMatrix& h_now, const ChannelMatrix& h_past) {
  if (h_now.rows() != h_past.rows() || h_now.cols() != h_past.cols())
    throw ConfigError("diff_features: dimension mismatch");
  const ChannelMatrix d = h_now - h_past;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * d.size()));
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c) out.push_back(d(r, c).real());
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c) out.push_back(d(r, c).imag());
  return out;
}

Eigen::VectorXd extract_features(const ChannelMatrix& h_true, const ChannelMatrix& h_est,
                                 const ChannelMatrix& h_est_lagged,
                                 const SubsetPartition& partition,
                                 std::span<const std::complex<double>> constellation,
                                 const SystemConfig& config, double snr_db, Rng& rng) {
  const std::vector<double> gains = gain_features(h_est, partition);
  const std::vector<double> evm =
      evm_features(h_true, h_est, partition, constellation, config.pilot_count, snr_db,
                   config.tx_scale(), rng);
  const std::vector<double> diffs = diff_features(h_est, h_est_lagged);

  Eigen::VectorXd f(static_cast<Eigen::Index>(gains.size() + evm.size() + diffs.size()));
  Eigen::Index at = 0;
  for (double v : gains) f(at++) = v;
  for (double v : evm) f(at++) = v;
  for (double v : diffs) f(at++) = v;
  if (!f.allFinite()) throw NumericError("extract_features: non-finite feature value");
  return f;
}

namespace {

constexpr std::uint64_t kDatasetStream = 0xD5;
constexpr int kShardSize = 1024;

struct ChannelScene {
  ChannelMatrix truth;            // current channel the link actually sees
  ChannelMatrix estimate;         // what the transmitter knows now
  ChannelMatrix estimate_lagged;  // what it knew delta steps ago
};

// One stationary sample of the block process: base drawn fresh, evolved
// forward delta+iota steps, with the two estimates formed along the way.
ChannelScene draw_scene(const SystemConfig& config, Rng& rng) {
  const auto& imp = config.impairments;
  const int delta = config.effective_delta();
  ChannelScene scene;
  if (config.channel_mode == ChannelMode::iid) {
    scene.truth = gen_channel(config.n_rx, config.n_tx, imp.rician_k, rng);
    scene.estimate = estimate_with_error(scene.truth, imp.beta, rng);
    if (delta > 0) {
      const ChannelMatrix other = gen_channel(config.n_rx, config.n_tx, imp.rician_k, rng);
      scene.estimate_lagged = estimate_with_error(other, imp.beta, rng);
    } else {
      scene.estimate_lagged = scene.estimate;
    }
    return scene;
  }

  ChannelMatrix base = gen_channel(config.n_rx, config.n_tx, imp.rician_k, rng);
  if (delta > 0) scene.estimate_lagged = imperfect_correlated_estimate(base, imp, rng);
  for (int j = 0; j < delta; ++j) base = evolve_correlated(base, imp.alpha, rng);
  scene.estimate = imperfect_correlated_estimate(base, imp, rng);
  if (delta == 0) scene.estimate_lagged = scene.estimate;
  for (int j = 0; j < imp.iota; ++j) base = evolve_correlated(base, imp.alpha, rng);
  scene.truth = std::move(base);
  return scene;
}

}  // namespace

Dataset generate_dataset(const SystemConfig& config, int n_instances, int workers) {
  config.validate();
  if (n_instances < 1) throw ConfigError("generate_dataset: n_instances must be >= 1");
  if (workers < 1) workers = 1;

  const auto cluster = enumerate_combinations(config.n_tx, config.n_active);
  const SubsetPartition partition = partition_subsets(cluster, config.spatial_bits);
  const auto constellation = qam_constellation(config.mod_order);
  const int k = partition.subset_count();
  const int q = config.feature_count();

  Dataset data;
  data.config = config;
  data.features.resize(n_instances, q);
  data.labels.assign(static_cast<std::size_t>(n_instances), 0);

  const int n_shards = (n_instances + kShardSize - 1) / kShardSize;
  std::atomic<int> next_shard{0};
  auto worker_fn = [&]() {
    while (true) {
      const int shard = next_shard.fetch_add(1);
      if (shard >= n_shards) break;
      const int begin = shard * kShardSize;
      const int end = std::min(begin + kShardSize, n_instances);
      Rng rng(Rng::derive(config.seed, kDatasetStream, static_cast<std::uint64_t>(shard)));
      for (int i = begin; i < end; ++i) {
        double snr = config.train_snr_db;
        if (config.train_snr_from_grid)
          snr = config.snr_grid_db[rng.uniform_int(config.snr_grid_db.size())];
        const ChannelScene scene = draw_scene(config, rng);
        data.labels[static_cast<std::size_t>(i)] =
            edas_select(scene.truth, partition, constellation, config.edas_metric);
        data.features.row(i) =
            extract_features(scene.truth, scene.estimate, scene.estimate_lagged, partition,
                             constellation, config, snr, rng)
                .transpose();
      }
    }
  };

  if (workers == 1 || n_shards == 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min(workers, n_shards);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }

  data.class_histogram.assign(static_cast<std::size_t>(k), 0);
  for (int label : data.labels) ++data.class_histogram[static_cast<std::size_t>(label)];
  return data;
}

Standardizer fit_standardizer(const Dataset& data) {
  if (data.n() < 2) throw ConfigError("fit_standardizer: need at least 2 instances");
  Standardizer s;
  s.mean = data.features.colwise().mean();
  Eigen::MatrixXd centered = data.features.rowwise() - s.mean.transpose();
  s.stddev = (centered.array().square().colwise().sum() / data.n()).sqrt();
  for (Eigen::Index j = 0; j < s.stddev.size(); ++j)
    if (s.stddev(j) <= 0.0) s.stddev(j) = 1.0;  // constant column -> zeros
  return s;
}

void standardize(Dataset& data, const Standardizer& scaling) {
  data.features = scaling.apply_rows(data.features);
  data.standardized = true;
  data.scaling = scaling;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "# gsmsim-dataset v1\n";
  for (const auto& line : split(serialize_config(data.config), '\n'))
    if (!line.empty()) out << "# " << line << '\n';
  out << "# n = " << data.n() << '\n';
  out << "# q = " << data.q() << '\n';
  out << "# k = " << data.config.subset_count() << '\n';
  out << "# class_histogram = ";
  for (std::size_t i = 0; i < data.class_histogram.size(); ++i)
    out << (i ? "," : "") << data.class_histogram[i];
  out << '\n';
  out << "# standardized = " << (data.standardized ? "true" : "false") << '\n';
  if (data.scaling) {
    std::vector<double> mean(data.scaling->mean.data(),
                             data.scaling->mean.data() + data.scaling->mean.size());
    std::vector<double> stddev(data.scaling->stddev.data(),
                               data.scaling->stddev.data() + data.scaling->stddev.size());
    out << "# scale_mean = " << join_doubles(mean, ',') << '\n';
    out << "# scale_stddev = " << join_doubles(stddev, ',') << '\n';
  }
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.q(); ++j) out << fmt_double(data.features(i, j)) << ',';
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");

  Dataset data;
  std::string line;
  int line_no = 0;
  int declared_n = -1, declared_q = -1, declared_k = -1;
  std::vector<double> scale_mean, scale_stddev;
  std::vector<std::string> rows;
  bool saw_header = false;

  auto fail = [&](const std::string& msg) {
    throw ConfigError(path + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with("#")) {
      std::string body = trim(line.substr(1));
      if (body == "gsmsim-dataset v1") {
        saw_header = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      try {
        if (key == "n") declared_n = static_cast<int>(parse_int(value, key));
        else if (key == "q") declared_q = static_cast<int>(parse_int(value, key));
        else if (key == "k") declared_k = static_cast<int>(parse_int(value, key));
        else if (key == "class_histogram") continue;  // recomputed below
        else if (key == "standardized") data.standardized = (value == "true");
        else if (key == "scale_mean") scale_mean = parse_double_list(value, key);
        else if (key == "scale_stddev") scale_stddev = parse_double_list(value, key);
        else apply_key_value(data.config, key, value);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      continue;
    }
    if (!trim(line).empty()) rows.push_back(line);
  }
  if (line_no == 0) throw ConfigError(path + ": empty file");
  if (!saw_header) throw ConfigError(path + ": missing 'gsmsim-dataset v1' header");
  if (declared_n < 0 || declared_q < 0) throw ConfigError(path + ": missing n/q metadata");
  if (declared_q != data.config.feature_count())
    throw ConfigError(path + ": declared q=" + std::to_string(declared_q) +
                      " does not match config feature count " +
                      std::to_string(data.config.feature_count()));
  if (declared_k >= 0 && declared_k != data.config.subset_count())
    throw ConfigError(path + ": declared k does not match config");
  if (static_cast<int>(rows.size()) != declared_n)
    throw ConfigError(path + ": declared n=" + std::to_string(declared_n) + " but found " +
                      std::to_string(rows.size()) + " rows");

  const int k = data.config.subset_count();
  data.features.resize(declared_n, declared_q);
  data.labels.assign(static_cast<std::size_t>(declared_n), 0);
  for (int i = 0; i < declared_n; ++i) {
    const auto fields = split(rows[static_cast<std::size_t>(i)], ',');
    if (static_cast<int>(fields.size()) != declared_q + 1)
      throw ConfigError(path + ": row " + std::to_string(i + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(declared_q + 1));
    for (int j = 0; j < declared_q; ++j)
      data.features(i, j) = parse_double(fields[static_cast<std::size_t>(j)],
                                         "row " + std::to_string(i + 1));
    const int label = static_cast<int>(
        parse_int(fields[static_cast<std::size_t>(declared_q)], "row label"));
    if (label < 0 || label >= k)
      throw ConfigError(path + ": row " + std::to_string(i + 1) + " label out of range");
    data.labels[static_cast<std::size_t>(i)] = label;
  }
  if (!scale_mean.empty()) {
    if (static_cast<int>(scale_mean.size()) != declared_q ||
        scale_mean.size() != scale_stddev.size())
      throw ConfigError(path + ": standardization parameter length mismatch");
    Standardizer s;
    s.mean = Eigen::Map<const Eigen::VectorXd>(scale_mean.data(),
                                               static_cast<Eigen::Index>(scale_mean.size()));
    s.stddev = Eigen::Map<const Eigen::VectorXd>(
        scale_stddev.data(), static_cast<Eigen::Index>(scale_stddev.size()));
    data.scaling = s;
  }
  data.class_histogram.assign(static_cast<std::size_t>(k), 0);
  for (int label : data.labels) ++data.class_histogram[static_cast<std::size_t>(label)];
  return data;
}

}  // namespace gsmsim
