#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "gsmsim/errors.hpp"
#include "gsmsim/harness.hpp"

using namespace gsmsim;

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.pilot_count = 8;
  c.snr_grid_db = {0.0, 10.0};
  c.impairments.alpha = 0.9;
  c.impairments.beta = 0.1;
  c.seed = 4242;
  return c;
}

bool results_equal(const BerResult& a, const BerResult& b) {
  return a.method == b.method && a.snr_db == b.snr_db && a.alpha == b.alpha &&
         a.beta == b.beta && a.blocks == b.blocks && a.bits_sent == b.bits_sent &&
         a.bit_errors == b.bit_errors && a.ber == b.ber &&
         a.subset_match_rate == b.subset_match_rate &&
         a.ci95_halfwidth == b.ci95_halfwidth && a.undersampled == b.undersampled;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("context assembles the desk-scale system") {
  const LinkContext ctx = make_context(small_config());
  CHECK(ctx.cluster.size() == 28);
  CHECK(ctx.partition.subset_count() == 7);
  CHECK(ctx.partition.leftover == 0);
  CHECK(ctx.constellation.size() == 4);
}

TEST_CASE("noise-free blocks with perfect knowledge never err") {
  const LinkContext ctx = make_context(small_config());
  const double inf = std::numeric_limits<double>::infinity();
  for (MethodId method : {MethodId::edas_perfect, MethodId::random_baseline}) {
    Rng rng(17);
    ChannelProcess process(ctx.config, ctx.config.impairments, rng);
    int total_errors = 0;
    for (int b = 0; b < 300; ++b)
      total_errors += run_block(process, method, {}, ctx, inf, rng).bit_errors;
    CHECK(total_errors == 0);
  }
}

TEST_CASE("genie selection always matches itself") {
  const LinkContext ctx = make_context(small_config());
  Rng rng(18);
  ChannelProcess process(ctx.config, ctx.config.impairments, rng);
  for (int b = 0; b < 100; ++b)
    CHECK(run_block(process, MethodId::edas_perfect, {}, ctx, 10.0, rng).subset_match);
}

TEST_CASE("ml methods require their models") {
  const LinkContext ctx = make_context(small_config());
  Rng rng(19);
  ChannelProcess process(ctx.config, ctx.config.impairments, rng);
  CHECK_THROWS_AS(run_block(process, MethodId::dt, {}, ctx, 10.0, rng), ConfigError);
  const std::vector<MethodId> methods{MethodId::mlp};
  CHECK_THROWS_AS(run_sweep(ctx, methods, 10, 1, {}), ConfigError);
}

TEST_CASE("sweeps are invariant to the worker count") {
  const LinkContext ctx = make_context(small_config());
  const std::vector<MethodId> methods{MethodId::edas_perfect, MethodId::edas_impaired,
                                      MethodId::random_baseline};
  const auto solo = run_sweep(ctx, methods, 400, 1, {});
  const auto pooled = run_sweep(ctx, methods, 400, 3, {});
  REQUIRE(solo.size() == pooled.size());
  for (std::size_t i = 0; i < solo.size(); ++i) CHECK(results_equal(solo[i], pooled[i]));

  for (const auto& r : solo)
    CHECK(r.bits_sent == r.blocks * static_cast<std::uint64_t>(ctx.config.bits_per_block()));
}

TEST_CASE("half the blocks stay within the confidence interval") {
  SystemConfig config = small_config();
  config.snr_grid_db = {0.0, 5.0, 10.0};
  config.impairments.beta = 0.2;
  const LinkContext ctx = make_context(config);
  const std::vector<MethodId> methods{MethodId::edas_perfect, MethodId::edas_impaired,
                                      MethodId::random_baseline};
  const auto base = run_sweep(ctx, methods, 3000, 1, {});
  const auto doubled = run_sweep(ctx, methods, 6000, 1, {});
  REQUIRE(base.size() == doubled.size());
  int within = 0;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (std::abs(base[i].ber - doubled[i].ber) <= base[i].ci95_halfwidth) ++within;
  CHECK(within * 10 >= static_cast<int>(base.size()) * 9);
}

TEST_CASE("receiver CSI policy") {
  SystemConfig config = small_config();
  Rng rng(20);
  const ChannelMatrix h = gen_channel(config.n_rx, config.n_tx, 0.0, rng);

  CHECK(receiver_csi(h, config, rng) == h);

  config.receiver_csi_impaired = true;
  config.receiver_beta = 0.0;
  CHECK(receiver_csi(h, config, rng) == h);

  // a fully decorrelated receiver estimate pushes the error rate toward the
  // random-guess floor even at high SNR
  config.receiver_beta = 1.0;
  const LinkContext ctx = make_context(config);
  Rng block_rng(21);
  ChannelProcess process(ctx.config, ctx.config.impairments, block_rng);
  std::uint64_t errors = 0, bits = 0;
  for (int b = 0; b < 500; ++b) {
    const BlockRecord record =
        run_block(process, MethodId::edas_perfect, {}, ctx, 20.0, block_rng);
    errors += static_cast<std::uint64_t>(record.bit_errors);
    bits += static_cast<std::uint64_t>(record.bits);
  }
  CHECK(static_cast<double>(errors) / static_cast<double>(bits) > 0.25);
}

TEST_CASE("results round-trip and figure files re-render identically") {
  SystemConfig config = small_config();
  const LinkContext ctx = make_context(config);
  const std::vector<MethodId> methods{MethodId::edas_perfect, MethodId::random_baseline};
  const auto results = run_sweep(ctx, methods, 200, 1, {});

  const auto dir = std::filesystem::temp_directory_path() / "gsmsim_results_test";
  std::filesystem::remove_all(dir);
  RunInfo info{config.seed, 1, methods, 1.25};
  emit_results(results, config, info, dir.string());

  SystemConfig parsed_config;
  const auto loaded = load_results((dir / "results.csv").string(), &parsed_config);
  REQUIRE(loaded.size() == results.size());
  for (std::size_t i = 0; i < results.size(); ++i) CHECK(results_equal(loaded[i], results[i]));
  CHECK(config_hash(parsed_config) == config_hash(config));

  // re-render figures from the loaded rows and compare bytes
  const auto figure = dir / "figure_alpha0.9_beta0.1.csv";
  REQUIRE(std::filesystem::exists(figure));
  const std::string original = read_file(figure);
  const auto rerender_dir = dir / "rerender";
  std::filesystem::create_directories(rerender_dir);
  render_figures(loaded, parsed_config, rerender_dir.string());
  CHECK(read_file(rerender_dir / "figure_alpha0.9_beta0.1.csv") == original);

  // manifest carries the config hash and wall times
  const std::string manifest = read_file(dir / "manifest.txt");
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("wall_time_total_s") != std::string::npos);

  std::filesystem::remove_all(dir);
}

TEST_CASE("config hash changes iff the config changes") {
  SystemConfig a = small_config();
  SystemConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.impairments.beta = 0.25;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("empty results still produce a parseable header-only file") {
  const auto dir = std::filesystem::temp_directory_path() / "gsmsim_empty_results";
  std::filesystem::remove_all(dir);
  SystemConfig config = small_config();
  emit_results({}, config, RunInfo{config.seed, 1, {}, 0.0}, dir.string());
  const auto loaded = load_results((dir / "results.csv").string());
  CHECK(loaded.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("training pipeline fits both learners on an easy configuration") {
  SystemConfig config = small_config();
  config.impairments.alpha = 1.0;
  config.impairments.beta = 0.0;
  config.delta = 0;
  config.n_instances = 700;
  config.pilot_count = 8;
  config.snr_grid_db = {10.0};
  config.mlp.epochs = 40;
  config.dt_max_depth = 12;

  const TrainOutput out = train_pipeline(config, 2);
  CHECK(out.train_data.n() == 560);
  CHECK(out.test_data.n() == 140);
  const double chance = 1.0 / config.subset_count();
  CHECK(out.dt_report.accuracy > chance);
  CHECK(out.dt_report.per_class.size() == 7);
  CHECK(out.mlp_report.accuracy >= chance * 0.5);
  CHECK(!format_report(out.dt_report).empty());

  SystemConfig bad = config;
  bad.train_fraction = 1.2;
  CHECK_THROWS_AS(train_pipeline(bad, 1), ConfigError);
}

TEST_CASE("sweeps with trained models stay worker-count invariant") {
  SystemConfig config = small_config();
  config.n_instances = 300;
  config.pilot_count = 4;
  config.snr_grid_db = {10.0};
  config.mlp.epochs = 15;
  config.dt_max_depth = 8;
  const TrainOutput trained = train_pipeline(config, 1);

  const LinkContext ctx = make_context(config);
  Models models;
  models.dt = &trained.dt;
  models.mlp = &trained.mlp;
  const std::vector<MethodId> methods{MethodId::dt, MethodId::mlp};
  const auto solo = run_sweep(ctx, methods, 120, 1, models);
  const auto pooled = run_sweep(ctx, methods, 120, 2, models);
  REQUIRE(solo.size() == pooled.size());
  for (std::size_t i = 0; i < solo.size(); ++i) CHECK(results_equal(solo[i], pooled[i]));
}

TEST_CASE("method names round trip") {
  for (MethodId m : all_methods()) CHECK(method_from_name(method_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("nonsense"), ConfigError);
}
