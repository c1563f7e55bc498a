#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "gsmsim/channel.hpp"

namespace gsmsim {

/// One active-antenna pattern: a 0/1 mask over the n_tx antennas with exactly
/// n_active ones. Active indices are kept alongside for fast column sums.
struct AntennaCombination {
  std::vector<std::uint8_t> mask;  // length n_tx
  std::vector<int> active;         // ascending indices of the ones

  static AntennaCombination from_active(int n_tx, std::vector<int> active_indices);
  bool operator==(const AntennaCombination&) const = default;
};

/// binom(n, k) with overflow detection.
std::uint64_t binomial(int n, int k);

/// All binom(n_tx, n_active) combinations in lexicographic order of the
/// active-index tuples, i.e. (4,2) starts at mask [1,1,0,0] and ends at
/// [0,0,1,1].
std::vector<AntennaCombination> enumerate_combinations(int n_tx, int n_active);

/// Gray-mapped square QAM with unit average symbol energy. Supported orders:
/// 4, 16, 64. Point index = (Gray label of the I axis << b/2) | Gray label of
/// the Q axis, so spatially adjacent points differ in exactly one label bit.
std::vector<std::complex<double>> qam_constellation(int mod_order);

/// Bits carried per GSM block: spatial_bits + log2(mod_order).
int bits_per_block(int spatial_bits, int mod_order);

struct BpcuPair {
  int maximum;         ///< floor(log2 M + log2 C), no antenna selection
  int with_selection;  ///< log2 M + spatial_bits
};

/// Spectral efficiency of a (n_tx, n_active, mod_order, spatial_bits) system.
BpcuPair bpcu(int n_tx, int n_active, int mod_order, int spatial_bits);

/// Index pair identifying one GSM symbol within a selected subset.
struct GsmSymbol {
  int combo_index = 0;  ///< position within the subset's 2^spatial_bits combinations
  int qam_index = 0;    ///< constellation point index
  bool operator==(const GsmSymbol&) const = default;
};

/// Maps a block of spatial_bits + log2(mod_order) bits to a GSM symbol.
/// The leading spatial bits (big-endian) select the combination, the rest the
/// constellation point. Throws ConfigError on a wrong block length.
GsmSymbol map_bits(std::span<const std::uint8_t> bits, int spatial_bits, int mod_order);

/// Exact inverse of map_bits.
std::vector<std::uint8_t> demap(const GsmSymbol& sym, int spatial_bits, int mod_order);

/// Transmit vector x = tx_scale * s * mask over n_tx antennas. With
/// tx_scale = 1/sqrt(n_active) the expected transmit power is 1 for a
/// unit-energy constellation.
Eigen::VectorXcd modulate(const GsmSymbol& sym, std::span<const AntennaCombination> subset,
                          std::span<const std::complex<double>> constellation,
                          int n_tx, double tx_scale);

/// y = H x + w, with noise drawn at snr_db relative to unit transmit power.
Eigen::VectorXcd transmit(const ChannelMatrix& h, const Eigen::VectorXcd& x,
                          double snr_db, Rng& rng);

/// Exhaustive maximum-likelihood detection over subset x constellation:
/// argmin of sum_i |y_i - tx_scale * s * (row_i . mask)|^2. Ties break toward
/// the lowest (combo_index, qam_index) pair.
GsmSymbol ml_detect(const Eigen::VectorXcd& y, const ChannelMatrix& h_est,
                    std::span<const AntennaCombination> subset,
                    std::span<const std::complex<double>> constellation,
                    double tx_scale);

/// Sum of the channel columns a combination activates (length n_rx).
Eigen::VectorXcd combined_column(const ChannelMatrix& h, const AntennaCombination& combo);

/// count random bits from the stream.
std::vector<std::uint8_t> random_bits(int count, Rng& rng);

}  // namespace gsmsim
