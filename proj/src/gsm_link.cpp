#include "gsmsim/gsm_link.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "gsmsim/errors.hpp"

namespace gsmsim {

namespace {

bool is_supported_qam(int m) { return m == 4 || m == 16 || m == 64; }

int int_log2(int v) { return std::bit_width(static_cast<unsigned>(v)) - 1; }

// Gray code position decoding: label -> grid position.
unsigned gray_decode(unsigned g) {
  unsigned b = g;
  while (g >>= 1) b ^= g;
  return b;
}

}  // namespace

AntennaCombination AntennaCombination::from_active(int n_tx, std::vector<int> active_indices) {
  AntennaCombination c;
  c.mask.assign(static_cast<std::size_t>(n_tx), 0);
  for (int idx : active_indices) {
    if (idx < 0 || idx >= n_tx) throw ConfigError("active antenna index out of range");
    c.mask[static_cast<std::size_t>(idx)] = 1;
  }
  c.active = std::move(active_indices);
  return c;
}

std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw ConfigError("binomial: invalid arguments");
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (result > std::numeric_limits<std::uint64_t>::max() / num)
      throw ConfigError("binomial: overflow");
    result = result * num / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::vector<AntennaCombination> enumerate_combinations(int n_tx, int n_active) {
  if (n_tx < 1 || n_active < 1 || n_active > n_tx)
    throw ConfigError("enumerate_combinations: need 1 <= n_active <= n_tx");
  const std::uint64_t count = binomial(n_tx, n_active);
  if (count > (1ull << 26)) throw ConfigError("enumerate_combinations: too many combinations");

  std::vector<AntennaCombination> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<int> idx(static_cast<std::size_t>(n_active));
  for (int i = 0; i < n_active; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    out.push_back(AntennaCombination::from_active(n_tx, idx));
    // advance to the next lexicographic index tuple
    int pos = n_active - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n_tx - n_active + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < n_active; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

std::vector<std::complex<double>> qam_constellation(int mod_order) {
  if (!is_supported_qam(mod_order))
    throw ConfigError("qam_constellation: unsupported order " + std::to_string(mod_order));
  const int side = static_cast<int>(std::lround(std::sqrt(double(mod_order))));
  const int half_bits = int_log2(side);
  const double mean_energy = 2.0 * (mod_order - 1) / 3.0;
  const double scale = 1.0 / std::sqrt(mean_energy);

  std::vector<std::complex<double>> points(static_cast<std::size_t>(mod_order));
  for (int zeta = 0; zeta < mod_order; ++zeta) {
    const unsigned i_label = static_cast<unsigned>(zeta) >> half_bits;
    const unsigned q_label = static_cast<unsigned>(zeta) & static_cast<unsigned>(side - 1);
    const int i_pos = static_cast<int>(gray_decode(i_label));
    const int q_pos = static_cast<int>(gray_decode(q_label));
    points[static_cast<std::size_t>(zeta)] = {scale * (2 * i_pos - (side - 1)),
                                              scale * (2 * q_pos - (side - 1))};
  }
  return points;
}

int bits_per_block(int spatial_bits, int mod_order) {
  return spatial_bits + int_log2(mod_order);
}

BpcuPair bpcu(int n_tx, int n_active, int mod_order, int spatial_bits) {
  const std::uint64_t combos = binomial(n_tx, n_active);
  // floor(log2(M) + log2(C)) == floor(log2(M*C)), exact in integer arithmetic
  const std::uint64_t product = static_cast<std::uint64_t>(mod_order) * combos;
  BpcuPair pair{};
  pair.maximum = static_cast<int>(std::bit_width(product)) - 1;
  pair.with_selection = int_log2(mod_order) + spatial_bits;
  return pair;
}

GsmSymbol map_bits(std::span<const std::uint8_t> bits, int spatial_bits, int mod_order) {
  const int qam_bits = int_log2(mod_order);
  if (static_cast<int>(bits.size()) != spatial_bits + qam_bits)
    throw ConfigError("map_bits: block length " + std::to_string(bits.size()) +
                      " != " + std::to_string(spatial_bits + qam_bits));
  GsmSymbol sym;
  for (int i = 0; i < spatial_bits; ++i)
    sym.combo_index = (sym.combo_index << 1) | (bits[static_cast<std::size_t>(i)] & 1);
  for (int i = 0; i < qam_bits; ++i)
    sym.qam_index = (sym.qam_index << 1) | (bits[static_cast<std::size_t>(spatial_bits + i)] & 1);
  return sym;
}

std::vector<std::uint8_t> demap(const GsmSymbol& sym, int spatial_bits, int mod_order) {
  const int qam_bits = int_log2(mod_order);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(spatial_bits + qam_bits));
  for (int i = 0; i < spatial_bits; ++i)
    bits[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>((sym.combo_index >> (spatial_bits - 1 - i)) & 1);
  for (int i = 0; i < qam_bits; ++i)
    bits[static_cast<std::size_t>(spatial_bits + i)] =
        static_cast<std::uint8_t>((sym.qam_index >> (qam_bits - 1 - i)) & 1);
  return bits;
}

Eigen::VectorXcd modulate(const GsmSymbol& sym, std::span<const AntennaCombination> subset,
                          std::span<const std::complex<double>> constellation,
                          int n_tx, double tx_scale) {
  if (sym.combo_index < 0 || sym.combo_index >= static_cast<int>(subset.size()))
    throw ConfigError("modulate: combo_index out of range");
  if (sym.qam_index < 0 || sym.qam_index >= static_cast<int>(constellation.size()))
    throw ConfigError("modulate: qam_index out of range");
  const auto& combo = subset[static_cast<std::size_t>(sym.combo_index)];
  const std::complex<double> s =
      tx_scale * constellation[static_cast<std::size_t>(sym.qam_index)];
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n_tx);
  for (int t : combo.active) x(t) = s;
  return x;
}

Eigen::VectorXcd transmit(const ChannelMatrix& h, const Eigen::VectorXcd& x,
                          double snr_db, Rng& rng) {
  if (h.cols() != x.size()) throw ConfigError("transmit: dimension mismatch");
  Eigen::VectorXcd y = h * x;
  return awgn(y, snr_db, 1.0, rng);
}

Eigen::VectorXcd combined_column(const ChannelMatrix& h, const AntennaCombination& combo) {
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(h.rows());
  for (int t : combo.active) u += h.col(t);
  return u;
}

GsmSymbol ml_detect(const Eigen::VectorXcd& y, const ChannelMatrix& h_est,
                    std::span<const AntennaCombination> subset,
                    std::span<const std::complex<double>> constellation,
                    double tx_scale) {
  if (subset.empty()) throw ConfigError("ml_detect: empty subset");
  GsmSymbol best;
  double best_metric = std::numeric_limits<double>::infinity();
  const Eigen::Index n_rx = y.size();
  for (int ci = 0; ci < static_cast<int>(subset.size()); ++ci) {
    const Eigen::VectorXcd u = combined_column(h_est, subset[static_cast<std::size_t>(ci)]);
    for (int qi = 0; qi < static_cast<int>(constellation.size()); ++qi) {
      const std::complex<double> s =
          tx_scale * constellation[static_cast<std::size_t>(qi)];
      double metric = 0.0;
      for (Eigen::Index i = 0; i < n_rx; ++i) metric += std::norm(y(i) - s * u(i));
      if (metric < best_metric) {
        best_metric = metric;
        best = {ci, qi};
      }
    }
  }
  return best;
}

std::vector<std::uint8_t> random_bits(int count, Rng& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(count));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.bit());
  return bits;
}

}  // namespace gsmsim
