#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "gsmsim/errors.hpp"
#include "gsmsim/features.hpp"

using namespace gsmsim;

namespace {

SystemConfig desk_config() {
  SystemConfig c;  // defaults are the desk-scale system
  c.pilot_count = 8;
  c.n_instances = 200;
  c.snr_grid_db = {10.0};
  return c;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("gain features sum squared magnitudes over the subset") {
  // all-ones 2x4 channel, one subset of two combinations with two active
  // antennas each: 2 combos * 2 rx * 2 tx * 1 = 8
  ChannelMatrix ones = ChannelMatrix::Constant(2, 4, std::complex<double>(1.0, 0.0));
  SubsetPartition p;
  p.n_tx = 4;
  p.spatial_bits = 1;
  p.subsets = {{AntennaCombination::from_active(4, {0, 1}),
                AntennaCombination::from_active(4, {2, 3})},
               {AntennaCombination::from_active(4, {0, 2}),
                AntennaCombination::from_active(4, {1, 3})}};
  const auto gains = gain_features(ones, p);
  REQUIRE(gains.size() == 2);
  CHECK(gains[0] == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(gains[1] == doctest::Approx(8.0).epsilon(1e-12));

  const auto zero_gains = gain_features(ChannelMatrix::Zero(2, 4), p);
  CHECK(zero_gains[0] == 0.0);
  CHECK(zero_gains[1] == 0.0);

  Rng rng(3);
  const ChannelMatrix h = gen_channel(2, 4, 0.0, rng);
  const auto base = gain_features(h, p);
  const auto scaled = gain_features(3.0 * h, p);
  for (std::size_t k = 0; k < base.size(); ++k)
    CHECK(scaled[k] == doctest::Approx(9.0 * base[k]).epsilon(1e-12));
}

TEST_CASE("evm features vanish under perfect knowledge without noise") {
  Rng rng(4);
  const SystemConfig config = desk_config();
  const auto cluster = enumerate_combinations(config.n_tx, config.n_active);
  const auto partition = partition_subsets(cluster, config.spatial_bits);
  const auto constellation = qam_constellation(config.mod_order);
  const ChannelMatrix h = gen_channel(config.n_rx, config.n_tx, 0.0, rng);
  const auto evm = evm_features(h, h, partition, constellation, 16,
                                std::numeric_limits<double>::infinity(),
                                config.tx_scale(), rng);
  for (double value : evm) CHECK(value == 0.0);
}

TEST_CASE("evm at 0 dB approaches 100 x receive antenna count") {
  auto mean_evm_at_0db = [](int n_rx, std::uint64_t seed) {
    SystemConfig config;
    config.n_rx = n_rx;
    const auto cluster = enumerate_combinations(config.n_tx, config.n_active);
    const auto partition = partition_subsets(cluster, config.spatial_bits);
    const auto constellation = qam_constellation(config.mod_order);
    Rng rng(seed);
    double total = 0.0;
    int samples = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const ChannelMatrix h = gen_channel(config.n_rx, config.n_tx, 0.0, rng);
      const auto evm =
          evm_features(h, h, partition, constellation, 300, 0.0, config.tx_scale(), rng);
      for (double value : evm) {
        total += value;
        ++samples;
      }
    }
    return total / samples;
  };

  // residual power tracks the noise power n_rx within 10 percent once the
  // receive dimension dominates the detector's pick-the-best-fit bias
  CHECK(mean_evm_at_0db(8, 5) == doctest::Approx(800.0).epsilon(0.10));
  // at n_rx = 4 the minimum over the 16 hypotheses sits measurably below the
  // raw noise power; frozen sample value 355 (ratio 0.889)
  CHECK(mean_evm_at_0db(4, 6) == doctest::Approx(355.0).epsilon(0.05));
}

TEST_CASE("useless estimates inflate the evm") {
  Rng rng(6);
  const SystemConfig config = desk_config();
  const auto cluster = enumerate_combinations(config.n_tx, config.n_active);
  const auto partition = partition_subsets(cluster, config.spatial_bits);
  const auto constellation = qam_constellation(config.mod_order);

  double clean = 0.0, broken = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const ChannelMatrix h = gen_channel(config.n_rx, config.n_tx, 0.0, rng);
    const ChannelMatrix junk = estimate_with_error(h, 1.0, rng);
    const auto evm_clean =
        evm_features(h, h, partition, constellation, 250, 10.0, config.tx_scale(), rng);
    const auto evm_broken =
        evm_features(h, junk, partition, constellation, 250, 10.0, config.tx_scale(), rng);
    for (double v : evm_clean) clean += v;
    for (double v : evm_broken) broken += v;
  }
  CHECK(broken > clean);
}

TEST_CASE("diff features flatten row-major, real block then imaginary block") {
  ChannelMatrix now(2, 2), past(2, 2);
  now << std::complex<double>(1, 5), std::complex<double>(2, 6),
      std::complex<double>(3, 7), std::complex<double>(4, 8);
  past.setZero();
  const auto diff = diff_features(now, past);
  REQUIRE(diff.size() == 8);
  CHECK(diff == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});

  const auto zero = diff_features(now, now);
  for (double v : zero) CHECK(v == 0.0);

  // purely real difference leaves the imaginary half zero
  ChannelMatrix real_shift = now;
  real_shift.array() += std::complex<double>(0.5, 0.0);
  const auto shifted = diff_features(real_shift, now);
  for (std::size_t i = 4; i < 8; ++i) CHECK(shifted[i] == 0.0);

  ChannelMatrix wrong(3, 2);
  wrong.setZero();
  CHECK_THROWS_AS(diff_features(now, wrong), ConfigError);
}

TEST_CASE("dataset generation is deterministic and worker-count invariant") {
  SystemConfig config = desk_config();
  config.seed = 314;
  const Dataset solo = generate_dataset(config, 130, 1);
  const Dataset pooled = generate_dataset(config, 130, 3);
  CHECK(solo.features == pooled.features);
  CHECK(solo.labels == pooled.labels);
  CHECK(solo.q() == config.feature_count());
  CHECK(solo.q() == 2 * 7 + 2 * 8 * 4);
  CHECK(solo.class_histogram.size() == 7);

  CHECK_THROWS_AS(generate_dataset(config, 0, 1), ConfigError);
}

TEST_CASE("testbed12 feature width matches the subset count formula") {
  SystemConfig config = SystemConfig::preset("testbed12");
  CHECK(config.subset_count() == 8);
  CHECK(config.feature_count() == 2 * 8 + 2 * 12 * 4);  // 112
}

TEST_CASE("static perfectly-estimated scenes zero the diff block") {
  SystemConfig config = desk_config();
  config.impairments.alpha = 1.0;
  config.impairments.beta = 0.0;
  config.delta = 1;
  config.seed = 9;
  const Dataset data = generate_dataset(config, 40, 1);
  const int k = config.subset_count();
  for (int i = 0; i < data.n(); ++i)
    for (int j = 2 * k; j < data.q(); ++j) CHECK(data.features(i, j) == 0.0);

  config.delta = 0;
  config.impairments.alpha = 0.6;
  config.impairments.beta = 0.3;
  const Dataset delayed = generate_dataset(config, 40, 1);
  for (int i = 0; i < delayed.n(); ++i)
    for (int j = 2 * k; j < delayed.q(); ++j) CHECK(delayed.features(i, j) == 0.0);
}

TEST_CASE("standardization maps constant columns to zero and round-trips") {
  SystemConfig config = desk_config();
  Dataset data = generate_dataset(config, 60, 1);
  data.features.col(3).setConstant(4.25);

  const Standardizer scaling = fit_standardizer(data);
  CHECK(scaling.stddev(3) == 1.0);

  const Eigen::MatrixXd original = data.features;
  standardize(data, scaling);
  for (int i = 0; i < data.n(); ++i) CHECK(data.features(i, 3) == 0.0);

  // stored parameters reproduce the standardized features exactly
  CHECK(scaling.apply_rows(original) == data.features);

  for (int i = 0; i < std::min(10, data.n()); ++i) {
    const Eigen::VectorXd back = scaling.invert(data.features.row(i).transpose());
    CHECK((back - original.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("dataset save/load round-trips bit-exactly") {
  SystemConfig config = desk_config();
  config.seed = 2718;
  Dataset data = generate_dataset(config, 50, 1);
  const auto path = temp_file("gsmsim_dataset_roundtrip.csv");
  save_dataset(data, path.string());
  const Dataset loaded = load_dataset(path.string());
  CHECK(loaded.features == data.features);
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.class_histogram == data.class_histogram);
  CHECK(serialize_config(loaded.config) == serialize_config(data.config));
  std::filesystem::remove(path);
}

TEST_CASE("dataset with fitted scaling persists the parameters") {
  SystemConfig config = desk_config();
  Dataset data = generate_dataset(config, 30, 1);
  standardize(data, fit_standardizer(data));
  const auto path = temp_file("gsmsim_dataset_scaled.csv");
  save_dataset(data, path.string());
  const Dataset loaded = load_dataset(path.string());
  REQUIRE(loaded.scaling.has_value());
  CHECK(loaded.scaling->mean == data.scaling->mean);
  CHECK(loaded.scaling->stddev == data.scaling->stddev);
  std::filesystem::remove(path);
}

TEST_CASE("dataset loader rejects malformed files") {
  const auto empty_path = temp_file("gsmsim_dataset_empty.csv");
  { std::ofstream out(empty_path); }
  CHECK_THROWS_AS(load_dataset(empty_path.string()), ConfigError);
  std::filesystem::remove(empty_path);

  // metadata q inconsistent with the config dimensions
  SystemConfig config = desk_config();
  Dataset data = generate_dataset(config, 10, 1);
  const auto path = temp_file("gsmsim_dataset_bad_q.csv");
  save_dataset(data, path.string());
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::string needle = "# n_rx = 4";
  text.replace(text.find(needle), needle.size(), "# n_rx = 5");
  std::ofstream out(path);
  out << text;
  out.close();
  CHECK_THROWS_AS(load_dataset(path.string()), ConfigError);
  std::filesystem::remove(path);
}
