#pragma once

#include <Eigen/Dense>

#include "gsmsim/rng.hpp"

namespace gsmsim {

/// Complex baseband channel gains, n_rx x n_tx. Holds the true channel H as
/// well as any estimate of it.
using ChannelMatrix = Eigen::MatrixXcd;

/// Impairment knobs of the channel estimate chain.
struct ImpairmentParams {
  double alpha = 1.0;     ///< time-correlation coefficient, in [0,1]
  double beta = 0.0;      ///< estimation-error weight, in [0,1]
  int iota = 1;           ///< CSI staleness in channel-update steps (one step per block)
  double rician_k = 0.0;  ///< LOS-to-scatter power ratio, >= 0

  void validate() const;  ///< throws ConfigError on out-of-range values
};

/// Draws a fresh fading channel. Each entry carries unit mean power:
/// sqrt(K/(K+1)) deterministic LOS term plus sqrt(1/(K+1)) CN(0,1) scatter.
/// rician_k == 0 is the i.i.d. Rayleigh case; values at or above
/// kPureLosRicianK collapse to the pure LOS limit (|h| = 1 exactly).
ChannelMatrix gen_channel(int n_rx, int n_tx, double rician_k, Rng& rng);

inline constexpr double kPureLosRicianK = 1e12;

/// Imperfect estimate: sqrt(1-beta) H + sqrt(beta) e, e ~ CN(0,1) i.i.d.
ChannelMatrix estimate_with_error(const ChannelMatrix& h, double beta, Rng& rng);

/// Gauss-Markov step: sqrt(alpha) H_prev + sqrt(1-alpha) z, z ~ CN(0,1).
ChannelMatrix evolve_correlated(const ChannelMatrix& h_prev, double alpha, Rng& rng);

/// Stale and noisy estimate built on the channel iota steps ago:
/// sqrt((1-beta) alpha) H_prev + sqrt((1-alpha)(1-beta)) z + sqrt(beta) e.
/// Draw order is z then e, matching the composition of evolve_correlated
/// followed by estimate_with_error on a shared stream.
ChannelMatrix imperfect_correlated_estimate(const ChannelMatrix& h_prev,
                                            const ImpairmentParams& params, Rng& rng);

/// Per-entry complex noise variance at the given SNR for the given signal power.
double noise_variance(double snr_db, double signal_power);

/// Adds circularly-symmetric complex Gaussian noise with per-entry variance
/// signal_power / 10^(snr_db/10). snr_db = +infinity is the noise-free flag
/// and returns the input unchanged without consuming the stream.
Eigen::VectorXcd awgn(const Eigen::VectorXcd& signal, double snr_db,
                      double signal_power, Rng& rng);

/// Fills an n_rx x n_tx matrix with i.i.d. CN(0,1) entries (column-major order).
ChannelMatrix complex_gaussian_matrix(int n_rx, int n_tx, Rng& rng);

}  // namespace gsmsim
