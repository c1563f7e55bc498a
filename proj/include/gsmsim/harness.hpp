#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "gsmsim/config.hpp"
#include "gsmsim/features.hpp"
#include "gsmsim/model.hpp"

namespace gsmsim {

/// Subset selection schemes compared by the sweep.
enum class MethodId { edas_perfect, edas_impaired, dt, mlp, random_baseline };

std::string method_name(MethodId method);
MethodId method_from_name(const std::string& name);
std::vector<MethodId> all_methods();

/// Precomputed link-level context shared by every block of a run.
struct LinkContext {
  SystemConfig config;
  std::vector<AntennaCombination> cluster;
  SubsetPartition partition;
  std::vector<std::complex<double>> constellation;
};

LinkContext make_context(const SystemConfig& config);

/// Block-by-block channel evolution plus the transmitter-side estimates.
/// correlated mode: one Gauss-Markov step per block, estimate built on the
/// channel iota steps back; iid mode: fresh channel per block, estimate on
/// the current channel. History is pre-rolled so estimates and the lagged
/// estimate are valid from the first block.
class ChannelProcess {
 public:
  ChannelProcess(const SystemConfig& config, const ImpairmentParams& impairments, Rng& rng);

  void step(Rng& rng);

  const ChannelMatrix& current() const { return truth_.back(); }
  const ChannelMatrix& estimate() const { return estimates_.back(); }
  const ChannelMatrix& estimate_lagged() const;

 private:
  SystemConfig config_;
  ImpairmentParams impairments_;
  std::deque<ChannelMatrix> truth_;      // back = now, front = iota steps ago
  std::deque<ChannelMatrix> estimates_;  // back = now, front = delta steps ago
};

/// The channel knowledge the detector runs with. Perfect by default;
/// optionally degraded with an independent estimation error.
ChannelMatrix receiver_csi(const ChannelMatrix& h_true, const SystemConfig& config, Rng& rng);

struct Models {
  const TrainedModel* dt = nullptr;
  const TrainedModel* mlp = nullptr;
};

struct BlockRecord {
  int bit_errors = 0;
  int bits = 0;
  bool subset_match = false;  ///< selected subset equals the genie selection
};

/// Simulates one GSM block end to end for the given method.
BlockRecord run_block(ChannelProcess& process, MethodId method, const Models& models,
                      const LinkContext& ctx, double snr_db, Rng& rng);

struct BerResult {
  MethodId method{};
  double snr_db = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t blocks = 0;
  std::uint64_t bits_sent = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  double subset_match_rate = 0.0;
  double ci95_halfwidth = 0.0;  ///< normal-approximation binomial half width
  bool undersampled = false;    ///< fewer than 100 errors or half width > 20% of BER
  double wall_time_s = 0.0;     ///< reported in the manifest only
};

/// Full (method x alpha x beta x snr) grid. Every point derives its stream
/// from (config.seed, method, snr index, impairment index), so results are
/// identical for any worker count.
std::vector<BerResult> run_sweep(const LinkContext& ctx, std::span<const MethodId> methods,
                                 std::uint64_t blocks_per_point, int workers,
                                 const Models& models);

struct ClassStats {
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<ClassStats> per_class;
  std::vector<std::vector<std::int64_t>> confusion;  // [truth][predicted]
  std::int64_t n = 0;
};

EvalReport evaluate_model(const TrainedModel& model, const Dataset& data);
std::string format_report(const EvalReport& report);

struct TrainOutput {
  TrainedModel dt;
  TrainedModel mlp;
  EvalReport dt_report;
  EvalReport mlp_report;
  MlpTrainRecord mlp_record;
  Dataset train_data;  ///< raw features (unstandardized)
  Dataset test_data;
};

/// Generates disjoint train/test datasets, fits the scaling on the training
/// split, trains both learners, and evaluates them against the genie labels.
TrainOutput train_pipeline(const SystemConfig& config, int workers = 1);

struct RunInfo {
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<MethodId> methods;
  double wall_time_total_s = 0.0;
};

/// Writes results.csv (stable bytes for a fixed seed), manifest.txt (wall
/// times and provenance) and one figure_*.csv per impairment point.
void emit_results(std::span<const BerResult> results, const SystemConfig& config,
                  const RunInfo& info, const std::string& out_dir);

std::vector<BerResult> load_results(const std::string& path, SystemConfig* config = nullptr);

/// Rebuilds the per-figure SNR-vs-BER files from a stored results file.
void render_figures(std::span<const BerResult> results, const SystemConfig& config,
                    const std::string& out_dir);

}  // namespace gsmsim
