#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsmsim/antenna_selection.hpp"
#include "gsmsim/channel.hpp"

namespace gsmsim {

/// How the true channel behaves from block to block.
enum class ChannelMode { iid, correlated };

struct MlpHyperParams {
  int hidden_layers = 15;
  int hidden_units = 10;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 200;
};

/// Complete dimensioning and impairment description of one experiment.
/// Every field is settable from the key=value config file.
struct SystemConfig {
  // link dimensioning
  int n_tx = 8;
  int n_active = 2;
  int n_rx = 4;
  int mod_order = 4;
  int spatial_bits = 2;

  ImpairmentParams impairments;
  ChannelMode channel_mode = ChannelMode::correlated;
  EdasMetric edas_metric = EdasMetric::as_printed;
  bool normalize_tx_power = true;

  std::vector<double> snr_grid_db = {0, 5, 10, 15, 20};
  std::vector<double> alpha_grid;  ///< empty -> {impairments.alpha}
  std::vector<double> beta_grid;   ///< empty -> {impairments.beta}
  std::uint64_t seed = 1;

  // feature pipeline
  int delta = -1;      ///< feature sample delay; -1 follows impairments.iota
  int pilot_count = 64;
  double train_snr_db = 10.0;
  bool train_snr_from_grid = true;  ///< draw each instance's SNR from snr_grid_db

  // receiver CSI policy; default is perfect receiver knowledge
  bool receiver_csi_impaired = false;
  double receiver_beta = 0.0;

  // learner hyperparameters
  int dt_max_depth = 17;
  MlpHyperParams mlp;

  // dataset / sweep sizing
  int n_instances = 20000;
  double train_fraction = 0.8;
  std::uint64_t blocks_per_point = 100000;

  // derived quantities
  std::uint64_t combination_count() const;  ///< C = binom(n_tx, n_active)
  int subset_count() const;                 ///< K = floor(C / 2^spatial_bits)
  int feature_count() const;                ///< Q = 2K + 2 n_tx n_rx
  int bits_per_block() const;
  int effective_delta() const { return delta < 0 ? impairments.iota : delta; }
  double tx_scale() const;
  std::vector<double> effective_alpha_grid() const;
  std::vector<double> effective_beta_grid() const;

  void validate() const;  ///< throws ConfigError

  /// Named configurations: "desk" (8x4, N_u=2, rho=2), "testbed12" (12x4,
  /// rho=3) and "testbed16" (16x4, rho=3).
  static SystemConfig preset(const std::string& name);
};

/// Applies one config key. Throws ConfigError on unknown keys or bad values.
void apply_key_value(SystemConfig& config, const std::string& key, const std::string& value);

/// Parses a key = value config file ('#' starts a comment).
SystemConfig load_config_file(const std::string& path);

/// Canonical key=value rendering; fixed key order, full-precision numbers.
std::string serialize_config(const SystemConfig& config);

/// Parses the output of serialize_config.
SystemConfig parse_config_text(const std::string& text);

/// FNV-1a over the canonical rendering; changes iff the config changes.
std::uint64_t config_hash(const SystemConfig& config);

std::string to_string(ChannelMode mode);
std::string to_string(EdasMetric metric);

}  // namespace gsmsim
