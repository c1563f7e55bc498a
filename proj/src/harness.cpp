#include "gsmsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

namespace {

constexpr std::uint64_t kSweepStream = 0x5A;
constexpr std::uint64_t kTrainStream = 0x7B;
constexpr std::uint64_t kTestStream = 0x7C;
constexpr std::uint64_t kMlpInitStream = 0x7D;

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

std::string method_name(MethodId method) {
  switch (method) {
    case MethodId::edas_perfect: return "edas_perfect";
    case MethodId::edas_impaired: return "edas_impaired";
    case MethodId::dt: return "dt";
    case MethodId::mlp: return "mlp";
    case MethodId::random_baseline: return "random_baseline";
  }
  throw ConfigError("unknown method id");
}

MethodId method_from_name(const std::string& name) {
  for (MethodId m : all_methods())
    if (method_name(m) == name) return m;
  throw ConfigError("unknown method '" + name + "'");
}

std::vector<MethodId> all_methods() {
  return {MethodId::edas_perfect, MethodId::edas_impaired, MethodId::dt, MethodId::mlp,
          MethodId::random_baseline};
}

LinkContext make_context(const SystemConfig& config) {
  config.validate();
  LinkContext ctx;
  ctx.config = config;
  ctx.cluster = enumerate_combinations(config.n_tx, config.n_active);
  ctx.partition = partition_subsets(ctx.cluster, config.spatial_bits);
  ctx.constellation = qam_constellation(config.mod_order);
  return ctx;
}

ChannelProcess::ChannelProcess(const SystemConfig& config,
                               const ImpairmentParams& impairments, Rng& rng)
    : config_(config), impairments_(impairments) {
  truth_.push_back(gen_channel(config.n_rx, config.n_tx, impairments.rician_k, rng));
  const int warmup = impairments_.iota + config_.effective_delta() + 1;
  for (int i = 0; i < warmup; ++i) step(rng);
}

void ChannelProcess::step(Rng& rng) {
  const int delta = config_.effective_delta();
  if (config_.channel_mode == ChannelMode::iid) {
    truth_.push_back(gen_channel(config_.n_rx, config_.n_tx, impairments_.rician_k, rng));
    if (truth_.size() > 1) truth_.pop_front();
    estimates_.push_back(estimate_with_error(truth_.back(), impairments_.beta, rng));
  } else {
    truth_.push_back(evolve_correlated(truth_.back(), impairments_.alpha, rng));
    while (truth_.size() > static_cast<std::size_t>(impairments_.iota) + 1) truth_.pop_front();
    // estimate built on the channel iota steps back (deque front)
    estimates_.push_back(imperfect_correlated_estimate(truth_.front(), impairments_, rng));
  }
  while (estimates_.size() > static_cast<std::size_t>(delta) + 1) estimates_.pop_front();
}

const ChannelMatrix& ChannelProcess::estimate_lagged() const { return estimates_.front(); }

ChannelMatrix receiver_csi(const ChannelMatrix& h_true, const SystemConfig& config, Rng& rng) {
  if (!config.receiver_csi_impaired) return h_true;
  return estimate_with_error(h_true, config.receiver_beta, rng);
}

BlockRecord run_block(ChannelProcess& process, MethodId method, const Models& models,
                      const LinkContext& ctx, double snr_db, Rng& rng) {
  const SystemConfig& config = ctx.config;
  process.step(rng);
  const ChannelMatrix& h_now = process.current();
  const ChannelMatrix& h_est = process.estimate();

  const int genie_subset =
      edas_select(h_now, ctx.partition, ctx.constellation, config.edas_metric);

  int selected = 0;
  switch (method) {
    case MethodId::edas_perfect:
      selected = genie_subset;
      break;
    case MethodId::edas_impaired:
      selected = edas_select(h_est, ctx.partition, ctx.constellation, config.edas_metric);
      break;
    case MethodId::dt:
    case MethodId::mlp: {
      const TrainedModel* model = method == MethodId::dt ? models.dt : models.mlp;
      if (!model)
        throw ConfigError("run_block: no trained model for method " + method_name(method));
      const Eigen::VectorXd f =
          extract_features(h_now, h_est, process.estimate_lagged(), ctx.partition,
                           ctx.constellation, config, snr_db, rng);
      selected = model->predict(f);
      break;
    }
    case MethodId::random_baseline:
      selected = random_select(ctx.partition, rng);
      break;
  }

  const auto& subset = ctx.partition.subsets[static_cast<std::size_t>(selected)];
  const int n_bits = config.bits_per_block();
  const std::vector<std::uint8_t> bits = random_bits(n_bits, rng);
  const GsmSymbol sym = map_bits(bits, config.spatial_bits, config.mod_order);
  const Eigen::VectorXcd x =
      modulate(sym, subset, ctx.constellation, config.n_tx, config.tx_scale());
  const Eigen::VectorXcd y = transmit(h_now, x, snr_db, rng);
  const ChannelMatrix h_rx = receiver_csi(h_now, config, rng);
  const GsmSymbol detected = ml_detect(y, h_rx, subset, ctx.constellation, config.tx_scale());
  const std::vector<std::uint8_t> decoded =
      demap(detected, config.spatial_bits, config.mod_order);

  BlockRecord record;
  record.bits = n_bits;
  record.subset_match = (selected == genie_subset);
  for (int i = 0; i < n_bits; ++i)
    record.bit_errors += (bits[static_cast<std::size_t>(i)] ^
                          decoded[static_cast<std::size_t>(i)]);
  return record;
}

namespace {

struct GridPoint {
  MethodId method;
  std::size_t method_idx;
  std::size_t snr_idx;
  std::size_t imp_idx;  // flattened (alpha, beta) index
  double snr_db;
  double alpha;
  double beta;
};

BerResult run_point(const LinkContext& base_ctx, const GridPoint& point,
                    std::uint64_t blocks, const Models& models) {
  LinkContext ctx = base_ctx;
  ctx.config.impairments.alpha = point.alpha;
  ctx.config.impairments.beta = point.beta;

  const double start = wall_seconds();
  Rng rng(Rng::derive(base_ctx.config.seed, kSweepStream ^ point.method_idx, point.snr_idx,
                      point.imp_idx));
  ChannelProcess process(ctx.config, ctx.config.impairments, rng);

  BerResult result;
  result.method = point.method;
  result.snr_db = point.snr_db;
  result.alpha = point.alpha;
  result.beta = point.beta;
  result.blocks = blocks;

  std::uint64_t matches = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const BlockRecord record = run_block(process, point.method, models, ctx, point.snr_db, rng);
    result.bits_sent += static_cast<std::uint64_t>(record.bits);
    result.bit_errors += static_cast<std::uint64_t>(record.bit_errors);
    matches += record.subset_match ? 1 : 0;
  }
  result.ber = static_cast<double>(result.bit_errors) / static_cast<double>(result.bits_sent);
  result.subset_match_rate = static_cast<double>(matches) / static_cast<double>(blocks);
  result.ci95_halfwidth =
      1.96 * std::sqrt(result.ber * (1.0 - result.ber) /
                       static_cast<double>(result.bits_sent));
  result.undersampled =
      result.bit_errors < 100 || result.ci95_halfwidth > 0.2 * result.ber;
  result.wall_time_s = wall_seconds() - start;
  return result;
}

}  // namespace

std::vector<BerResult> run_sweep(const LinkContext& ctx, std::span<const MethodId> methods,
                                 std::uint64_t blocks_per_point, int workers,
                                 const Models& models) {
  if (methods.empty()) throw ConfigError("run_sweep: no methods selected");
  if (blocks_per_point == 0) throw ConfigError("run_sweep: blocks_per_point must be >= 1");
  for (MethodId m : methods) {
    if (m == MethodId::dt && !models.dt)
      throw ConfigError("run_sweep: method dt requires a trained model");
    if (m == MethodId::mlp && !models.mlp)
      throw ConfigError("run_sweep: method mlp requires a trained model");
  }

  const std::vector<double> alphas = ctx.config.effective_alpha_grid();
  const std::vector<double> betas = ctx.config.effective_beta_grid();
  std::vector<GridPoint> points;
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    for (std::size_t ai = 0; ai < alphas.size(); ++ai)
      for (std::size_t bi = 0; bi < betas.size(); ++bi)
        for (std::size_t si = 0; si < ctx.config.snr_grid_db.size(); ++si)
          points.push_back({methods[mi],
                            static_cast<std::size_t>(methods[mi]),
                            si,
                            ai * betas.size() + bi,
                            ctx.config.snr_grid_db[si],
                            alphas[ai],
                            betas[bi]});

  std::vector<BerResult> results(points.size());
  std::atomic<std::size_t> next{0};
  auto worker_fn = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) break;
      results[i] = run_point(ctx, points[i], blocks_per_point, models);
    }
  };

  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(points.size())));
  if (n_threads == 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }
  return results;
}

EvalReport evaluate_model(const TrainedModel& model, const Dataset& data) {
  const int k = data.config.subset_count();
  EvalReport report;
  report.n = data.n();
  report.confusion.assign(static_cast<std::size_t>(k),
                          std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
  std::int64_t correct = 0;
  for (int i = 0; i < data.n(); ++i) {
    const int truth = data.labels[static_cast<std::size_t>(i)];
    const int predicted = model.predict(data.features.row(i).transpose());
    ++report.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
    if (truth == predicted) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(data.n());
  report.per_class.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::int64_t truth_total = 0, predicted_total = 0;
    for (int other = 0; other < k; ++other) {
      truth_total += report.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(other)];
      predicted_total +=
          report.confusion[static_cast<std::size_t>(other)][static_cast<std::size_t>(c)];
    }
    const std::int64_t hits =
        report.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    ClassStats& stats = report.per_class[static_cast<std::size_t>(c)];
    stats.support = truth_total;
    stats.recall = truth_total ? static_cast<double>(hits) / truth_total : 0.0;
    stats.precision = predicted_total ? static_cast<double>(hits) / predicted_total : 0.0;
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "instances " << report.n << ", accuracy " << fmt_double(report.accuracy) << '\n';
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& stats = report.per_class[c];
    out << "class " << c << ": support " << stats.support << ", precision "
        << fmt_double(stats.precision) << ", recall " << fmt_double(stats.recall) << '\n';
  }
  return out.str();
}

TrainOutput train_pipeline(const SystemConfig& config, int workers) {
  config.validate();
  const int n_total = config.n_instances;
  const int n_train = std::max(1, static_cast<int>(std::lround(n_total * config.train_fraction)));
  const int n_test = std::max(1, n_total - n_train);

  SystemConfig train_config = config;
  train_config.seed = Rng::derive(config.seed, kTrainStream);
  SystemConfig test_config = config;
  test_config.seed = Rng::derive(config.seed, kTestStream);

  Dataset train_data = generate_dataset(train_config, n_train, workers);
  Dataset test_data = generate_dataset(test_config, n_test, workers);
  // keep the caller-facing metadata on the parent seed
  train_data.config.seed = train_config.seed;
  test_data.config.seed = test_config.seed;

  const Standardizer scaling = fit_standardizer(train_data);
  const Eigen::MatrixXd scaled = scaling.apply_rows(train_data.features);
  const int k = config.subset_count();

  DecisionTree tree = DecisionTree::train(scaled, train_data.labels, k, config.dt_max_depth);

  MlpTrainConfig mlp_config;
  mlp_config.hidden_sizes.assign(static_cast<std::size_t>(config.mlp.hidden_layers),
                                 config.mlp.hidden_units);
  mlp_config.learning_rate = config.mlp.learning_rate;
  mlp_config.batch_size = config.mlp.batch_size;
  mlp_config.epochs = config.mlp.epochs;
  mlp_config.seed = Rng::derive(config.seed, kMlpInitStream);
  MlpTrainRecord record;
  Mlp mlp = Mlp::train(scaled, train_data.labels, k, mlp_config, &record);

  TrainOutput out{TrainedModel(std::move(tree), scaling),
                  TrainedModel(std::move(mlp), scaling),
                  {},
                  {},
                  std::move(record),
                  std::move(train_data),
                  std::move(test_data)};
  out.dt_report = evaluate_model(out.dt, out.test_data);
  out.mlp_report = evaluate_model(out.mlp, out.test_data);
  return out;
}

namespace {

std::string figure_file_name(double alpha, double beta) {
  return "figure_alpha" + fmt_double(alpha) + "_beta" + fmt_double(beta) + ".csv";
}

}  // namespace

void render_figures(std::span<const BerResult> results, const SystemConfig& config,
                    const std::string& out_dir) {
  // collect the method and impairment axes in first-seen order
  std::vector<std::pair<double, double>> impairments;
  std::vector<MethodId> methods;
  for (const auto& r : results) {
    if (std::find(impairments.begin(), impairments.end(),
                  std::make_pair(r.alpha, r.beta)) == impairments.end())
      impairments.emplace_back(r.alpha, r.beta);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
  }

  for (const auto& [alpha, beta] : impairments) {
    const std::filesystem::path path =
        std::filesystem::path(out_dir) / figure_file_name(alpha, beta);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    out << "# alpha=" << fmt_double(alpha) << " beta=" << fmt_double(beta) << '\n';
    out << "snr_db";
    for (MethodId m : methods) out << ',' << method_name(m);
    out << '\n';
    for (double snr : config.snr_grid_db) {
      out << fmt_double(snr);
      for (MethodId m : methods) {
        double ber = std::nan("");
        for (const auto& r : results)
          if (r.method == m && r.alpha == alpha && r.beta == beta && r.snr_db == snr) {
            ber = r.ber;
            break;
          }
        out << ',' << (std::isnan(ber) ? std::string("nan") : fmt_double(ber));
      }
      out << '\n';
    }
  }
}

void emit_results(std::span<const BerResult> results, const SystemConfig& config,
                  const RunInfo& info, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  {
    std::ofstream out(dir / "results.csv");
    if (!out) throw ConfigError("cannot open results.csv for writing");
    out << "# gsmsim-results v1\n";
    out << "# config_hash = 0x" << std::hex << config_hash(config) << std::dec << '\n';
    for (const auto& line : split(serialize_config(config), '\n'))
      if (!line.empty()) out << "# " << line << '\n';
    out << "method,snr_db,alpha,beta,blocks,bits_sent,bit_errors,ber,subset_match_rate,"
           "ci95_halfwidth,undersampled\n";
    for (const auto& r : results) {
      out << method_name(r.method) << ',' << fmt_double(r.snr_db) << ','
          << fmt_double(r.alpha) << ',' << fmt_double(r.beta) << ',' << r.blocks << ','
          << r.bits_sent << ',' << r.bit_errors << ',' << fmt_double(r.ber) << ','
          << fmt_double(r.subset_match_rate) << ',' << fmt_double(r.ci95_halfwidth) << ','
          << (r.undersampled ? 1 : 0) << '\n';
    }
    if (!out) throw ConfigError("write failed for results.csv");
  }

  {
    std::ofstream out(dir / "manifest.txt");
    if (!out) throw ConfigError("cannot open manifest.txt for writing");
    out << "gsmsim-manifest v1\n";
    out << "version = 0.1.0\n";
    out << "seed = " << info.seed << '\n';
    out << "config_hash = 0x" << std::hex << config_hash(config) << std::dec << '\n';
    out << "workers = " << info.workers << '\n';
    out << "methods =";
    for (MethodId m : info.methods) out << ' ' << method_name(m);
    out << '\n';
    const BpcuPair rates = bpcu(config.n_tx, config.n_active, config.mod_order,
                                config.spatial_bits);
    out << "bpcu_maximum = " << rates.maximum << '\n';
    out << "bpcu_with_selection = " << rates.with_selection << '\n';
    out << "wall_time_total_s = " << fmt_double(info.wall_time_total_s) << '\n';
    for (const auto& r : results)
      out << "point method=" << method_name(r.method) << " alpha=" << fmt_double(r.alpha)
          << " beta=" << fmt_double(r.beta) << " snr_db=" << fmt_double(r.snr_db)
          << " wall_time_s=" << fmt_double(r.wall_time_s) << '\n';
  }

  render_figures(results, config, out_dir);
}

std::vector<BerResult> load_results(const std::string& path, SystemConfig* config_out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results '" + path + "'");
  std::vector<BerResult> results;
  SystemConfig config;
  std::string line;
  int line_no = 0;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with("#")) {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key == "config_hash") continue;
      try {
        apply_key_value(config, key, value);
      } catch (const ConfigError&) {
        // tolerate unknown provenance keys
      }
      continue;
    }
    if (trim(line).empty()) continue;
    if (!saw_columns) {  // header row
      saw_columns = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 11)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 11 fields");
    BerResult r;
    r.method = method_from_name(trim(fields[0]));
    r.snr_db = parse_double(fields[1], "snr_db");
    r.alpha = parse_double(fields[2], "alpha");
    r.beta = parse_double(fields[3], "beta");
    r.blocks = parse_uint(fields[4], "blocks");
    r.bits_sent = parse_uint(fields[5], "bits_sent");
    r.bit_errors = parse_uint(fields[6], "bit_errors");
    r.ber = parse_double(fields[7], "ber");
    r.subset_match_rate = parse_double(fields[8], "subset_match_rate");
    r.ci95_halfwidth = parse_double(fields[9], "ci95_halfwidth");
    r.undersampled = parse_int(fields[10], "undersampled") != 0;
    results.push_back(r);
  }
  if (!saw_columns) throw ConfigError(path + ": missing column header");
  if (config_out) *config_out = config;
  return results;
}

}  // namespace gsmsim
