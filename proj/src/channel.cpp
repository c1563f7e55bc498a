#include "gsmsim/channel.hpp"

#include <cmath>
#include <string>

#include "gsmsim/errors.hpp"

namespace gsmsim {

void ImpairmentParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in [0,1], got " + std::to_string(alpha));
  if (!(beta >= 0.0 && beta <= 1.0))
    throw ConfigError("beta must lie in [0,1], got " + std::to_string(beta));
  if (iota < 0) throw ConfigError("iota must be non-negative");
  if (!(rician_k >= 0.0)) throw ConfigError("rician_k must be non-negative");
}

ChannelMatrix complex_gaussian_matrix(int n_rx, int n_tx, Rng& rng) {
  ChannelMatrix m(n_rx, n_tx);
  for (int c = 0; c < n_tx; ++c)
    for (int r = 0; r < n_rx; ++r) m(r, c) = rng.complex_gaussian();
  return m;
}

ChannelMatrix gen_channel(int n_rx, int n_tx, double rician_k, Rng& rng) {
  if (n_rx < 1 || n_tx < 1) throw ConfigError("channel dimensions must be >= 1");
  if (!(rician_k >= 0.0)) throw ConfigError("rician_k must be non-negative");

  const std::complex<double> los{1.0, 0.0};  // unit-modulus deterministic term
  if (rician_k >= kPureLosRicianK) return ChannelMatrix::Constant(n_rx, n_tx, los);

  const double los_gain = std::sqrt(rician_k / (rician_k + 1.0));
  const double scatter_gain = std::sqrt(1.0 / (rician_k + 1.0));
  ChannelMatrix m(n_rx, n_tx);
  for (int c = 0; c < n_tx; ++c)
    for (int r = 0; r < n_rx; ++r)
      m(r, c) = los_gain * los + scatter_gain * rng.complex_gaussian();
  return m;
}

ChannelMatrix estimate_with_error(const ChannelMatrix& h, double beta, Rng& rng) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
  const double signal_gain = std::sqrt(1.0 - beta);
  const double error_gain = std::sqrt(beta);
  ChannelMatrix est(h.rows(), h.cols());
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    for (Eigen::Index r = 0; r < h.rows(); ++r)
      est(r, c) = signal_gain * h(r, c) + error_gain * rng.complex_gaussian();
  return est;
}

ChannelMatrix evolve_correlated(const ChannelMatrix& h_prev, double alpha, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  const double keep_gain = std::sqrt(alpha);
  const double innovation_gain = std::sqrt(1.0 - alpha);
  ChannelMatrix next(h_prev.rows(), h_prev.cols());
  for (Eigen::Index c = 0; c < h_prev.cols(); ++c)
    for (Eigen::Index r = 0; r < h_prev.rows(); ++r)
      next(r, c) = keep_gain * h_prev(r, c) + innovation_gain * rng.complex_gaussian();
  return next;
}

ChannelMatrix imperfect_correlated_estimate(const ChannelMatrix& h_prev,
                                            const ImpairmentParams& params, Rng& rng) {
  params.validate();
  const double stale_gain = std::sqrt((1.0 - params.beta) * params.alpha);
  const double innovation_gain = std::sqrt((1.0 - params.alpha) * (1.0 - params.beta));
  const double error_gain = std::sqrt(params.beta);

  // z before e, entry order matching the two-step composition.
  ChannelMatrix est(h_prev.rows(), h_prev.cols());
  for (Eigen::Index c = 0; c < h_prev.cols(); ++c)
    for (Eigen::Index r = 0; r < h_prev.rows(); ++r)
      est(r, c) = stale_gain * h_prev(r, c) + innovation_gain * rng.complex_gaussian();
  for (Eigen::Index c = 0; c < h_prev.cols(); ++c)
    for (Eigen::Index r = 0; r < h_prev.rows(); ++r)
      est(r, c) += error_gain * rng.complex_gaussian();
  return est;
}

double noise_variance(double snr_db, double signal_power) {
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

Eigen::VectorXcd awgn(const Eigen::VectorXcd& signal, double snr_db,
                      double signal_power, Rng& rng) {
  if (signal.size() == 0) throw ConfigError("awgn: empty signal");
  if (!(signal_power > 0.0) || !std::isfinite(signal_power))
    throw ConfigError("awgn: signal_power must be positive and finite");
  if (std::isnan(snr_db)) throw NumericError("awgn: snr_db is NaN");
  if (!signal.allFinite()) throw NumericError("awgn: non-finite signal entries");

  if (std::isinf(snr_db) && snr_db > 0.0) return signal;  // noise-free flag

  const double sigma = std::sqrt(noise_variance(snr_db, signal_power));
  Eigen::VectorXcd out(signal.size());
  for (Eigen::Index i = 0; i < signal.size(); ++i)
    out(i) = signal(i) + sigma * rng.complex_gaussian();
  return out;
}

}  // namespace gsmsim
