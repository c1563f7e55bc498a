#include "gsmsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gsmsim/errors.hpp"
#include "gsmsim/textio.hpp"

namespace gsmsim {

std::uint64_t SystemConfig::combination_count() const {
  return binomial(n_tx, n_active);
}

int SystemConfig::subset_count() const {
  return static_cast<int>(combination_count() >> spatial_bits);
}

int SystemConfig::feature_count() const {
  return 2 * subset_count() + 2 * n_tx * n_rx;
}

int SystemConfig::bits_per_block() const {
  return gsmsim::bits_per_block(spatial_bits, mod_order);
}

double SystemConfig::tx_scale() const {
  return normalize_tx_power ? 1.0 / std::sqrt(static_cast<double>(n_active)) : 1.0;
}

std::vector<double> SystemConfig::effective_alpha_grid() const {
  return alpha_grid.empty() ? std::vector<double>{impairments.alpha} : alpha_grid;
}

std::vector<double> SystemConfig::effective_beta_grid() const {
  return beta_grid.empty() ? std::vector<double>{impairments.beta} : beta_grid;
}

void SystemConfig::validate() const {
  if (n_tx < 1) throw ConfigError("n_tx must be >= 1");
  if (n_active < 1 || n_active > n_tx) throw ConfigError("need 1 <= n_active <= n_tx");
  if (n_rx < 1) throw ConfigError("n_rx must be >= 1");
  if (mod_order != 4 && mod_order != 16 && mod_order != 64)
    throw ConfigError("mod_order must be one of 4, 16, 64");
  if (spatial_bits < 1 || spatial_bits > 20) throw ConfigError("spatial_bits out of range");
  impairments.validate();
  if (subset_count() < 2)
    throw ConfigError("antenna selection needs K >= 2 subsets; C=" +
                      std::to_string(combination_count()) + ", 2^spatial_bits=" +
                      std::to_string(1 << spatial_bits));
  if (snr_grid_db.empty()) throw ConfigError("snr_grid_db must be non-empty");
  for (double s : snr_grid_db)
    if (std::isnan(s)) throw ConfigError("snr_grid_db contains NaN");
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha_grid values must lie in [0,1]");
  for (double b : beta_grid)
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("beta_grid values must lie in [0,1]");
  if (pilot_count < 1) throw ConfigError("pilot_count must be >= 1");
  if (!(receiver_beta >= 0.0 && receiver_beta <= 1.0))
    throw ConfigError("receiver_beta must lie in [0,1]");
  if (dt_max_depth < 1) throw ConfigError("dt_max_depth must be >= 1");
  if (mlp.hidden_layers < 1 || mlp.hidden_units < 1)
    throw ConfigError("mlp layer sizes must be >= 1");
  if (!(mlp.learning_rate >= 0.0)) throw ConfigError("mlp_learning_rate must be >= 0");
  if (mlp.batch_size < 1 || mlp.epochs < 0) throw ConfigError("invalid mlp training sizes");
  if (n_instances < 1) throw ConfigError("n_instances must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  if (blocks_per_point < 1) throw ConfigError("blocks_per_point must be >= 1");
}

SystemConfig SystemConfig::preset(const std::string& name) {
  SystemConfig c;
  if (name == "desk") {
    // defaults: 8x4, N_u=2, C=28, rho=2, K=7
  } else if (name == "testbed12") {
    c.n_tx = 12;
    c.spatial_bits = 3;  // C=66, K=8, 2 combinations unused
  } else if (name == "testbed16") {
    c.n_tx = 16;
    c.spatial_bits = 3;  // C=120, K=15
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

}  // namespace

std::string to_string(ChannelMode mode) {
  return mode == ChannelMode::iid ? "iid" : "correlated";
}

std::string to_string(EdasMetric metric) {
  return metric == EdasMetric::as_printed ? "as_printed" : "per_rx_norm";
}

void apply_key_value(SystemConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "preset") {
    c = SystemConfig::preset(v);
  } else if (key == "n_tx") {
    c.n_tx = static_cast<int>(parse_int(v, key));
  } else if (key == "n_active") {
    c.n_active = static_cast<int>(parse_int(v, key));
  } else if (key == "n_rx") {
    c.n_rx = static_cast<int>(parse_int(v, key));
  } else if (key == "mod_order") {
    c.mod_order = static_cast<int>(parse_int(v, key));
  } else if (key == "spatial_bits") {
    c.spatial_bits = static_cast<int>(parse_int(v, key));
  } else if (key == "alpha") {
    c.impairments.alpha = parse_double(v, key);
  } else if (key == "beta") {
    c.impairments.beta = parse_double(v, key);
  } else if (key == "iota") {
    c.impairments.iota = static_cast<int>(parse_int(v, key));
  } else if (key == "rician_k") {
    c.impairments.rician_k = parse_double(v, key);
  } else if (key == "channel_mode") {
    if (v == "iid")
      c.channel_mode = ChannelMode::iid;
    else if (v == "correlated")
      c.channel_mode = ChannelMode::correlated;
    else
      throw ConfigError("channel_mode: expected iid|correlated, got '" + v + "'");
  } else if (key == "edas_metric") {
    if (v == "as_printed")
      c.edas_metric = EdasMetric::as_printed;
    else if (v == "per_rx_norm")
      c.edas_metric = EdasMetric::per_rx_norm;
    else
      throw ConfigError("edas_metric: expected as_printed|per_rx_norm, got '" + v + "'");
  } else if (key == "normalize_tx_power") {
    c.normalize_tx_power = parse_bool(v, key);
  } else if (key == "snr_grid_db") {
    c.snr_grid_db = parse_double_list(v, key);
  } else if (key == "alpha_grid") {
    c.alpha_grid = parse_double_list(v, key);
  } else if (key == "beta_grid") {
    c.beta_grid = parse_double_list(v, key);
  } else if (key == "seed") {
    c.seed = parse_uint(v, key);
  } else if (key == "delta") {
    c.delta = static_cast<int>(parse_int(v, key));
  } else if (key == "pilot_count") {
    c.pilot_count = static_cast<int>(parse_int(v, key));
  } else if (key == "train_snr_db") {
    if (v == "grid") {
      c.train_snr_from_grid = true;
    } else {
      c.train_snr_from_grid = false;
      c.train_snr_db = parse_double(v, key);
    }
  } else if (key == "receiver_csi_impaired") {
    c.receiver_csi_impaired = parse_bool(v, key);
  } else if (key == "receiver_beta") {
    c.receiver_beta = parse_double(v, key);
  } else if (key == "dt_max_depth") {
    c.dt_max_depth = static_cast<int>(parse_int(v, key));
  } else if (key == "mlp_hidden_layers") {
    c.mlp.hidden_layers = static_cast<int>(parse_int(v, key));
  } else if (key == "mlp_hidden_units") {
    c.mlp.hidden_units = static_cast<int>(parse_int(v, key));
  } else if (key == "mlp_learning_rate") {
    c.mlp.learning_rate = parse_double(v, key);
  } else if (key == "mlp_batch_size") {
    c.mlp.batch_size = static_cast<int>(parse_int(v, key));
  } else if (key == "mlp_epochs") {
    c.mlp.epochs = static_cast<int>(parse_int(v, key));
  } else if (key == "n_instances") {
    c.n_instances = static_cast<int>(parse_int(v, key));
  } else if (key == "train_fraction") {
    c.train_fraction = parse_double(v, key);
  } else if (key == "blocks_per_point") {
    c.blocks_per_point = parse_uint(v, key);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

SystemConfig parse_config_text(const std::string& text) {
  SystemConfig c;
  int line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    std::string line = raw_line;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_key_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

std::string serialize_config(const SystemConfig& c) {
  std::ostringstream out;
  out << "n_tx = " << c.n_tx << '\n';
  out << "n_active = " << c.n_active << '\n';
  out << "n_rx = " << c.n_rx << '\n';
  out << "mod_order = " << c.mod_order << '\n';
  out << "spatial_bits = " << c.spatial_bits << '\n';
  out << "alpha = " << fmt_double(c.impairments.alpha) << '\n';
  out << "beta = " << fmt_double(c.impairments.beta) << '\n';
  out << "iota = " << c.impairments.iota << '\n';
  out << "rician_k = " << fmt_double(c.impairments.rician_k) << '\n';
  out << "channel_mode = " << to_string(c.channel_mode) << '\n';
  out << "edas_metric = " << to_string(c.edas_metric) << '\n';
  out << "normalize_tx_power = " << (c.normalize_tx_power ? "true" : "false") << '\n';
  out << "snr_grid_db = " << join_doubles(c.snr_grid_db, ',') << '\n';
  out << "alpha_grid = " << join_doubles(c.effective_alpha_grid(), ',') << '\n';
  out << "beta_grid = " << join_doubles(c.effective_beta_grid(), ',') << '\n';
  out << "seed = " << c.seed << '\n';
  out << "delta = " << c.effective_delta() << '\n';
  out << "pilot_count = " << c.pilot_count << '\n';
  out << "train_snr_db = "
      << (c.train_snr_from_grid ? std::string("grid") : fmt_double(c.train_snr_db)) << '\n';
  out << "receiver_csi_impaired = " << (c.receiver_csi_impaired ? "true" : "false") << '\n';
  out << "receiver_beta = " << fmt_double(c.receiver_beta) << '\n';
  out << "dt_max_depth = " << c.dt_max_depth << '\n';
  out << "mlp_hidden_layers = " << c.mlp.hidden_layers << '\n';
  out << "mlp_hidden_units = " << c.mlp.hidden_units << '\n';
  out << "mlp_learning_rate = " << fmt_double(c.mlp.learning_rate) << '\n';
  out << "mlp_batch_size = " << c.mlp.batch_size << '\n';
  out << "mlp_epochs = " << c.mlp.epochs << '\n';
  out << "n_instances = " << c.n_instances << '\n';
  out << "train_fraction = " << fmt_double(c.train_fraction) << '\n';
  out << "blocks_per_point = " << c.blocks_per_point << '\n';
  return out.str();
}

std::uint64_t config_hash(const SystemConfig& c) { return fnv1a64(serialize_config(c)); }

}  // namespace gsmsim
