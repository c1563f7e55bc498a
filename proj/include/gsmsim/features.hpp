#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gsmsim/antenna_selection.hpp"
#include "gsmsim/config.hpp"

namespace gsmsim {

/// Per-column affine rescaling to zero mean, unit variance. Constant columns
/// map to zero and record a stddev of 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::VectorXd apply(const Eigen::VectorXd& row) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& row) const;
};

/// Labeled feature matrix plus the full generation metadata.
struct Dataset {
  Eigen::MatrixXd features;  // N x Q
  std::vector<int> labels;   // N entries in [0, K)
  SystemConfig config;
  std::vector<std::int64_t> class_histogram;
  bool standardized = false;
  std::optional<Standardizer> scaling;  ///< set once fitted

  int n() const { return static_cast<int>(features.rows()); }
  int q() const { return static_cast<int>(features.cols()); }
};

/// One K-vector: per subset, the summed squared channel magnitudes over its
/// member combinations' (receive antenna, active transmit antenna) pairs.
std::vector<double> gain_features(const ChannelMatrix& h_est, const SubsetPartition& partition);

/// One K-vector of error-vector magnitudes in percent: per subset, pilot
/// symbols restricted to that subset cross the true channel with noise, are
/// detected against h_est, and the mean residual power is referenced to unit
/// symbol power.
std::vector<double> evm_features(const ChannelMatrix& h_true, const ChannelMatrix& h_est,
                                 const SubsetPartition& partition,
                                 std::span<const std::complex<double>> constellation,
                                 int pilot_count, double snr_db, double tx_scale, Rng& rng);

/// Entry-wise difference flattened row-major, real parts then imaginary parts.
std::vector<double> diff_features(const ChannelMatrix& h_now, const ChannelMatrix& h_past);

/// Full Q-vector in the order [gain | evm | diff].
Eigen::VectorXd extract_features(const ChannelMatrix& h_true, const ChannelMatrix& h_est,
                                 const ChannelMatrix& h_est_lagged,
                                 const SubsetPartition& partition,
                                 std::span<const std::complex<double>> constellation,
                                 const SystemConfig& config, double snr_db, Rng& rng);

/// Builds a labeled dataset of independent channel scenes. Each instance
/// draws a fresh stale base, evolves it forward, forms the transmitter
/// estimate, extracts features from the estimate, and labels with the
/// selector applied to the perfect current channel. Sharded into fixed-size
/// blocks with derived seeds, so the result depends only on config.seed, not
/// on the worker count.
Dataset generate_dataset(const SystemConfig& config, int n_instances, int workers = 1);

/// Fits per-column parameters on the dataset.
Standardizer fit_standardizer(const Dataset& data);

/// Rescales in place and stores the parameters in the dataset.
void standardize(Dataset& data, const Standardizer& scaling);

void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace gsmsim
