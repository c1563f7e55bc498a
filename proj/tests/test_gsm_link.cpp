#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "gsmsim/antenna_selection.hpp"
#include "gsmsim/errors.hpp"
#include "gsmsim/gsm_link.hpp"

using namespace gsmsim;

namespace {

// Independent re-evaluation of the detection metric, written directly from
// the mask without shared helpers. Oracle for ml_detect.
GsmSymbol brute_force_detect(const Eigen::VectorXcd& y, const ChannelMatrix& h,
                             const std::vector<AntennaCombination>& subset,
                             const std::vector<std::complex<double>>& constellation,
                             double tx_scale) {
  GsmSymbol best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < subset.size(); ++ci) {
    for (std::size_t qi = 0; qi < constellation.size(); ++qi) {
      double metric = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        std::complex<double> mixed{0.0, 0.0};
        for (Eigen::Index t = 0; t < h.cols(); ++t)
          if (subset[ci].mask[static_cast<std::size_t>(t)]) mixed += h(i, t);
        metric += std::norm(y(i) - tx_scale * constellation[qi] * mixed);
      }
      if (metric < best_metric) {
        best_metric = metric;
        best = {static_cast<int>(ci), static_cast<int>(qi)};
      }
    }
  }
  return best;
}

int popcount_diff(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] ^ b[i];
  return count;
}

}  // namespace

TEST_CASE("combination enumeration order and counts") {
  const auto combos = enumerate_combinations(4, 2);
  REQUIRE(combos.size() == 6);
  CHECK(combos.front().mask == std::vector<std::uint8_t>{1, 1, 0, 0});
  CHECK(combos.back().mask == std::vector<std::uint8_t>{0, 0, 1, 1});
  for (const auto& c : combos) CHECK(c.active.size() == 2);

  CHECK(enumerate_combinations(16, 2).size() == 120);
  CHECK(enumerate_combinations(12, 2).size() == 66);
  CHECK(binomial(12, 2) == 66);
  // testbed sizing: 66 combinations, 3 spatial bits -> 8 subsets
  CHECK(static_cast<int>(enumerate_combinations(12, 2).size()) / (1 << 3) == 8);

  CHECK_THROWS_AS(enumerate_combinations(4, 5), ConfigError);
  CHECK_THROWS_AS(enumerate_combinations(0, 0), ConfigError);
}

TEST_CASE("bits per channel use") {
  const BpcuPair small = bpcu(4, 2, 4, 1);
  CHECK(small.maximum == 4);  // floor(2 + log2 6)

  const BpcuPair testbed = bpcu(12, 2, 4, 3);
  CHECK(testbed.maximum == 8);
  CHECK(testbed.with_selection == 5);

  const BpcuPair boundary = bpcu(2, 1, 4, 1);
  CHECK(boundary.maximum == 3);
  CHECK(boundary.with_selection == 3);
}

TEST_CASE("qpsk constellation points and energy") {
  const auto points = qam_constellation(4);
  REQUIRE(points.size() == 4);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::set<std::pair<double, double>> expected{{inv_sqrt2, inv_sqrt2},
                                               {inv_sqrt2, -inv_sqrt2},
                                               {-inv_sqrt2, inv_sqrt2},
                                               {-inv_sqrt2, -inv_sqrt2}};
  for (const auto& p : points) {
    bool found = false;
    for (const auto& e : expected)
      if (std::abs(p.real() - e.first) < 1e-12 && std::abs(p.imag() - e.second) < 1e-12)
        found = true;
    CHECK(found);
  }
  double energy = 0.0;
  for (const auto& p : points) energy += std::norm(p);
  CHECK(energy / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("16-QAM energy and minimum distance") {
  const auto points = qam_constellation(16);
  REQUIRE(points.size() == 16);
  double energy = 0.0;
  for (const auto& p : points) energy += std::norm(p);
  CHECK(energy / 16.0 == doctest::Approx(1.0).epsilon(1e-12));

  double min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      min_distance = std::min(min_distance, std::abs(points[a] - points[b]));
  CHECK(min_distance == doctest::Approx(2.0 / std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("gray labels differ in one bit between grid neighbours") {
  for (int m : {4, 16, 64}) {
    const auto points = qam_constellation(m);
    const double spacing = 2.0 / std::sqrt(2.0 * (m - 1) / 3.0);
    for (std::size_t a = 0; a < points.size(); ++a) {
      for (std::size_t b = a + 1; b < points.size(); ++b) {
        const double dist = std::abs(points[a] - points[b]);
        if (std::abs(dist - spacing) < 1e-9) {  // horizontal or vertical neighbour
          const unsigned x = static_cast<unsigned>(a) ^ static_cast<unsigned>(b);
          CHECK(std::popcount(x) == 1);
        }
      }
    }
  }
  CHECK_THROWS_AS(qam_constellation(8), ConfigError);
  CHECK_THROWS_AS(qam_constellation(2), ConfigError);
}

TEST_CASE("bit mapping is positional and bijective") {
  const std::vector<std::uint8_t> zeros{0, 0, 0, 0};
  const GsmSymbol zero_sym = map_bits(zeros, 2, 4);
  CHECK(zero_sym == GsmSymbol{0, 0});

  const std::vector<std::uint8_t> pattern{1, 1, 0, 1};
  const GsmSymbol sym = map_bits(pattern, 2, 4);
  CHECK(sym == GsmSymbol{3, 1});
  CHECK(demap(sym, 2, 4) == pattern);

  // exhaustive round trip over every block for two shapes
  for (const auto& [rho, m] : std::vector<std::pair<int, int>>{{2, 4}, {3, 16}}) {
    const int n_bits = bits_per_block(rho, m);
    for (int value = 0; value < (1 << n_bits); ++value) {
      std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_bits));
      for (int i = 0; i < n_bits; ++i)
        bits[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>((value >> (n_bits - 1 - i)) & 1);
      CHECK(demap(map_bits(bits, rho, m), rho, m) == bits);
    }
  }

  const std::vector<std::uint8_t> wrong{0, 1, 0};
  CHECK_THROWS_AS(map_bits(wrong, 2, 4), ConfigError);

  const GsmSymbol top{3, 3};
  CHECK(demap(top, 2, 4) == std::vector<std::uint8_t>{1, 1, 1, 1});
}

TEST_CASE("modulation scales and places the symbol") {
  const auto constellation = qam_constellation(4);
  const auto single = std::vector<AntennaCombination>{
      AntennaCombination::from_active(4, {2})};
  const Eigen::VectorXcd x1 = modulate({0, 1}, single, constellation, 4, 1.0);
  CHECK(x1(2) == constellation[1]);
  CHECK(x1(0) == std::complex<double>(0, 0));

  const auto dual = std::vector<AntennaCombination>{
      AntennaCombination::from_active(4, {0, 1})};
  const double scale = 1.0 / std::sqrt(2.0);
  const Eigen::VectorXcd x2 = modulate({0, 3}, dual, constellation, 4, scale);
  // constellation[3] = (1+j)/sqrt(2); scaled entries are (1+j)/2
  CHECK(std::abs(x2(0) - std::complex<double>(0.5, 0.5)) < 1e-12);
  CHECK(std::abs(x2(1) - std::complex<double>(0.5, 0.5)) < 1e-12);
  CHECK(x2.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));

  // energy normalization holds for every symbol of a subset
  Rng rng(77);
  const ChannelMatrix ignored = gen_channel(2, 4, 0.0, rng);
  for (int qi = 0; qi < 4; ++qi) {
    const Eigen::VectorXcd x = modulate({0, qi}, dual, constellation, 4, scale);
    CHECK(x.squaredNorm() ==
          doctest::Approx(std::norm(constellation[static_cast<std::size_t>(qi)]))
              .epsilon(1e-12));
  }
}

TEST_CASE("transmit composes channel and noise") {
  Rng rng(50);
  const double inf = std::numeric_limits<double>::infinity();

  ChannelMatrix identity = ChannelMatrix::Identity(4, 4);
  Eigen::VectorXcd x(4);
  x << std::complex<double>(1, 0), std::complex<double>(0, 1), std::complex<double>(-1, 0),
      std::complex<double>(0.5, -0.5);
  CHECK((transmit(identity, x, inf, rng) - x).cwiseAbs().maxCoeff() < 1e-15);

  const Eigen::VectorXcd silent = Eigen::VectorXcd::Zero(4);
  ChannelMatrix h = gen_channel(4, 4, 0.0, rng);
  const Eigen::VectorXcd noise_only = transmit(h, silent, 0.0, rng);
  CHECK(noise_only.squaredNorm() > 0.0);

  // single receive antenna picking up two active columns
  ChannelMatrix row(1, 4);
  row << 1.0, 1.0, 0.0, 0.0;
  const auto constellation = qam_constellation(4);
  const auto subset =
      std::vector<AntennaCombination>{AntennaCombination::from_active(4, {0, 1})};
  const double scale = 1.0 / std::sqrt(2.0);
  const Eigen::VectorXcd tx = modulate({0, 2}, subset, constellation, 4, scale);
  const Eigen::VectorXcd y = transmit(row, tx, inf, rng);
  CHECK(std::abs(y(0) - 2.0 * constellation[2] / std::sqrt(2.0)) < 1e-12);

  Eigen::VectorXcd mismatched(3);
  mismatched.setZero();
  CHECK_THROWS_AS(transmit(h, mismatched, 10.0, rng), ConfigError);
}

TEST_CASE("noise-free detection recovers the transmitted symbol") {
  Rng rng(60);
  const auto constellation = qam_constellation(4);
  const auto cluster = enumerate_combinations(8, 2);
  const auto partition = partition_subsets(cluster, 2);
  const double scale = 1.0 / std::sqrt(2.0);
  const double inf = std::numeric_limits<double>::infinity();

  for (int trial = 0; trial < 2000; ++trial) {
    const ChannelMatrix h = gen_channel(4, 8, 0.0, rng);
    const auto& subset = partition.subsets[rng.uniform_int(partition.subsets.size())];
    const GsmSymbol sent{static_cast<int>(rng.uniform_int(4)),
                         static_cast<int>(rng.uniform_int(4))};
    const Eigen::VectorXcd x = modulate(sent, subset, constellation, 8, scale);
    const Eigen::VectorXcd y = transmit(h, x, inf, rng);
    const GsmSymbol detected = ml_detect(y, h, subset, constellation, scale);
    CHECK(detected == sent);
  }
}

TEST_CASE("subset of one combination reduces to QAM nearest neighbour") {
  Rng rng(61);
  const auto constellation = qam_constellation(4);
  const auto subset =
      std::vector<AntennaCombination>{AntennaCombination::from_active(4, {1})};
  const double inf = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 200; ++trial) {
    const ChannelMatrix h = gen_channel(2, 4, 0.0, rng);
    const int qi = static_cast<int>(rng.uniform_int(4));
    const Eigen::VectorXcd x = modulate({0, qi}, subset, constellation, 4, 1.0);
    const Eigen::VectorXcd y = transmit(h, x, inf, rng);
    CHECK(ml_detect(y, h, subset, constellation, 1.0) == GsmSymbol{0, qi});
  }
}

TEST_CASE("detector equals an independent brute-force metric scan") {
  Rng rng(62);
  const auto constellation = qam_constellation(4);
  const auto cluster = enumerate_combinations(4, 2);
  // hand-picked subset of 4 combinations over a 2x4 channel: 16 hypotheses
  const std::vector<AntennaCombination> subset{cluster[0], cluster[1], cluster[3], cluster[5]};
  const double scale = 1.0 / std::sqrt(2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const ChannelMatrix h = gen_channel(2, 4, 0.0, rng);
    const GsmSymbol sent{static_cast<int>(rng.uniform_int(subset.size())),
                         static_cast<int>(rng.uniform_int(4))};
    const Eigen::VectorXcd x = modulate(sent, subset, constellation, 4, scale);
    const Eigen::VectorXcd y = transmit(h, x, 8.0, rng);
    const GsmSymbol fast = ml_detect(y, h, subset, constellation, scale);
    const GsmSymbol reference = brute_force_detect(y, h, subset, constellation, scale);
    CHECK(fast == reference);
  }
}

TEST_CASE("demap inverts map over random blocks") {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bits = random_bits(bits_per_block(3, 16), rng);
    const GsmSymbol sym = map_bits(bits, 3, 16);
    CHECK(popcount_diff(demap(sym, 3, 16), bits) == 0);
  }
}
