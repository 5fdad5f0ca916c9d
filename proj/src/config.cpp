#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fgd/harness.hpp"

namespace fgd {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::toy: return "toy";
    case Experiment::decay: return "decay";
    case Experiment::invariance: return "invariance";
    case Experiment::bench: return "bench";
    case Experiment::mlp: return "mlp";
    case Experiment::verify: return "verify";
  }
  throw ConfigError("to_string: bad experiment enum");
}

Experiment experiment_from_string(const std::string& s) {
  if (s == "toy") return Experiment::toy;
  if (s == "decay") return Experiment::decay;
  if (s == "invariance") return Experiment::invariance;
  if (s == "bench") return Experiment::bench;
  if (s == "mlp") return Experiment::mlp;
  if (s == "verify") return Experiment::verify;
  throw ConfigError("unknown experiment '" + s + "'");
}

RunConfig default_config(Experiment e) {
  RunConfig cfg;
  cfg.experiment = e;
  switch (e) {
    case Experiment::toy:
      // eta 0.1, feedback 12, five seeds of 60 epochs. The velocity keeps a
      // multiplier of 0.1 per step, which gives the monotone decay the run
      // is checked against.
      cfg.fgd.gamma = 0.9;
      break;
    case Experiment::decay:
      cfg.fgd.eta = 1.0;
      cfg.fgd.gamma = 0.0;
      cfg.fgd.alpha = 5.0;
      cfg.fgd.inverse_mode = InverseMode::exact;
      break;
    case Experiment::invariance:
      cfg.fgd.eta = 0.5;
      cfg.fgd.gamma = 0.5;
      cfg.fgd.alpha = 0.0;  // Eq-style bundle field has no feedback
      cfg.fgd.inverse_mode = InverseMode::exact;
      break;
    case Experiment::bench:
      cfg.fgd.gamma = 0.1;
      cfg.fgd.alpha = 12.0;
      cfg.fgd.eta = 0.01;
      break;
    case Experiment::mlp:
      cfg.fgd.eta = 0.2;
      cfg.fgd.gamma = 0.1;
      cfg.fgd.alpha = 12.0;
      cfg.epochs = 200;
      cfg.lr_decay_factor = 0.1;
      cfg.lr_decay_epochs = {170};
      break;
    case Experiment::verify:
      break;
  }
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "experiment",    "seed",          "eta",
      "gamma",         "alpha",         "inverse_mode",
      "k1",            "k2",            "drift_abort",
      "phi_grad_point", "n",            "p",
      "epochs",        "num_seeds",     "h",
      "t_end",         "decay_start",   "v0_lo",
      "v0_hi",         "train_size",    "test_size",
      "noise",         "hidden",        "lr_decay_factor",
      "lr_decay_epochs", "diag_stride", "output_dir",
      "plot",          "corrupt_feedback"};
  return keys;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: key '" + key + "' must be true or false, got '" + v + "'");
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "experiment") {
    cfg.experiment = experiment_from_string(value);
  } else if (key == "seed") {
    cfg.seed = parse_count(key, value);
  } else if (key == "eta") {
    cfg.fgd.eta = parse_double(key, value);
  } else if (key == "gamma") {
    cfg.fgd.gamma = parse_double(key, value);
  } else if (key == "alpha") {
    cfg.fgd.alpha = parse_double(key, value);
  } else if (key == "inverse_mode") {
    if (value == "exact") cfg.fgd.inverse_mode = InverseMode::exact;
    else if (value == "neumann") cfg.fgd.inverse_mode = InverseMode::neumann;
    else throw ConfigError("config: inverse_mode must be exact or neumann");
  } else if (key == "k1") {
    cfg.fgd.k.k1 = parse_double(key, value);
  } else if (key == "k2") {
    cfg.fgd.k.k2 = parse_double(key, value);
  } else if (key == "drift_abort") {
    cfg.fgd.drift_abort = parse_double(key, value);
  } else if (key == "phi_grad_point") {
    if (value == "updated_theta") cfg.fgd.phi_grad_point = PhiGradPoint::updated_theta;
    else if (value == "original_theta") cfg.fgd.phi_grad_point = PhiGradPoint::original_theta;
    else throw ConfigError("config: phi_grad_point must be updated_theta or original_theta");
  } else if (key == "n") {
    cfg.n = parse_count(key, value);
  } else if (key == "p") {
    cfg.p = parse_count(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_count(key, value);
  } else if (key == "num_seeds") {
    cfg.num_seeds = parse_count(key, value);
  } else if (key == "h") {
    cfg.h = parse_double(key, value);
  } else if (key == "t_end") {
    cfg.t_end = parse_double(key, value);
  } else if (key == "decay_start") {
    if (value != "perturbed" && value != "on_bundle") {
      throw ConfigError("config: decay_start must be perturbed or on_bundle");
    }
    cfg.decay_start = value;
  } else if (key == "v0_lo") {
    cfg.v0_lo = parse_double(key, value);
  } else if (key == "v0_hi") {
    cfg.v0_hi = parse_double(key, value);
  } else if (key == "train_size") {
    cfg.train_size = parse_count(key, value);
  } else if (key == "test_size") {
    cfg.test_size = parse_count(key, value);
  } else if (key == "noise") {
    cfg.noise = parse_double(key, value);
  } else if (key == "hidden") {
    cfg.hidden = parse_count(key, value);
  } else if (key == "lr_decay_factor") {
    cfg.lr_decay_factor = parse_double(key, value);
  } else if (key == "lr_decay_epochs") {
    cfg.lr_decay_epochs.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) cfg.lr_decay_epochs.push_back(parse_count(key, item));
    }
  } else if (key == "diag_stride") {
    cfg.diag_stride = parse_count(key, value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "plot") {
    cfg.plot = parse_bool(key, value);
  } else if (key == "corrupt_feedback") {
    cfg.corrupt_feedback = parse_bool(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void validate_ranges(const RunConfig& cfg) {
  if (!(cfg.fgd.eta > 0.0)) throw ConfigError("config: eta must be positive");
  if (!(cfg.fgd.gamma >= 0.0 && cfg.fgd.gamma <= 1.0)) {
    throw ConfigError("config: gamma must lie in [0, 1]");
  }
  if (!(cfg.fgd.alpha >= 0.0)) throw ConfigError("config: alpha must be nonnegative");
  if (!(cfg.fgd.k.k1 > 0.0 && cfg.fgd.k.k2 > 0.0)) {
    throw ConfigError("config: k1 and k2 must be positive");
  }
  if (!(cfg.fgd.drift_abort > 0.0 && cfg.fgd.drift_abort < 1.0)) {
    throw ConfigError("config: drift_abort must lie in (0, 1)");
  }
  if (cfg.p == 0 || cfg.n < cfg.p) throw ConfigError("config: need n >= p >= 1");
  if (cfg.epochs == 0) throw ConfigError("config: epochs must be >= 1");
  if (cfg.num_seeds == 0) throw ConfigError("config: num_seeds must be >= 1");
  if (!(cfg.h > 0.0)) throw ConfigError("config: h must be positive");
  if (!(cfg.t_end > 0.0)) throw ConfigError("config: t_end must be positive");
  if (!(cfg.v0_lo > 0.0 && cfg.v0_hi > cfg.v0_lo)) {
    throw ConfigError("config: need 0 < v0_lo < v0_hi");
  }
  if (cfg.train_size == 0 || cfg.test_size == 0) {
    throw ConfigError("config: dataset sizes must be positive");
  }
  if (!(cfg.noise >= 0.0)) throw ConfigError("config: noise must be nonnegative");
  if (cfg.hidden < 2) throw ConfigError("config: hidden must be >= 2");
  if (!(cfg.lr_decay_factor > 0.0 && cfg.lr_decay_factor <= 1.0)) {
    throw ConfigError("config: lr_decay_factor must lie in (0, 1]");
  }
  if (cfg.diag_stride == 0) throw ConfigError("config: diag_stride must be >= 1");
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<Experiment> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());

  // First pass: find the experiment so defaults come from the right profile.
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value': '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    }
    if (std::find(known_keys().begin(), known_keys().end(), key) ==
        known_keys().end()) {
      throw ConfigError("config: unknown key '" + key + "' at line " +
                        std::to_string(lineno));
    }
    if (!entries.emplace(key, value).second) {
      throw ConfigError("config: duplicate key '" + key + "' at line " +
                        std::to_string(lineno));
    }
  }

  Experiment exp = expected.value_or(Experiment::toy);
  if (auto it = entries.find("experiment"); it != entries.end()) {
    exp = experiment_from_string(it->second);
    if (expected && exp != *expected) {
      throw ConfigError("config: file says experiment '" + to_string(exp) +
                        "' but the command requested '" + to_string(*expected) + "'");
    }
  } else if (!expected) {
    throw ConfigError("config: no experiment given on the command line or in the file");
  }

  RunConfig cfg = default_config(exp);
  for (const auto& [key, value] : entries) apply_key(cfg, key, value);
  validate_ranges(cfg);
  return cfg;
}

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_resolved_config: cannot open " + path.string());
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "experiment = " << to_string(cfg.experiment) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "eta = " << num(cfg.fgd.eta) << '\n'
      << "gamma = " << num(cfg.fgd.gamma) << '\n'
      << "alpha = " << num(cfg.fgd.alpha) << '\n'
      << "inverse_mode = "
      << (cfg.fgd.inverse_mode == InverseMode::exact ? "exact" : "neumann") << '\n'
      << "k1 = " << num(cfg.fgd.k.k1) << '\n'
      << "k2 = " << num(cfg.fgd.k.k2) << '\n'
      << "drift_abort = " << num(cfg.fgd.drift_abort) << '\n'
      << "phi_grad_point = "
      << (cfg.fgd.phi_grad_point == PhiGradPoint::updated_theta ? "updated_theta"
                                                                : "original_theta")
      << '\n'
      << "n = " << cfg.n << '\n'
      << "p = " << cfg.p << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "num_seeds = " << cfg.num_seeds << '\n'
      << "h = " << num(cfg.h) << '\n'
      << "t_end = " << num(cfg.t_end) << '\n'
      << "decay_start = " << cfg.decay_start << '\n'
      << "v0_lo = " << num(cfg.v0_lo) << '\n'
      << "v0_hi = " << num(cfg.v0_hi) << '\n'
      << "train_size = " << cfg.train_size << '\n'
      << "test_size = " << cfg.test_size << '\n'
      << "noise = " << num(cfg.noise) << '\n'
      << "hidden = " << cfg.hidden << '\n'
      << "lr_decay_factor = " << num(cfg.lr_decay_factor) << '\n';
  out << "lr_decay_epochs = ";
  for (std::size_t i = 0; i < cfg.lr_decay_epochs.size(); ++i) {
    if (i) out << ',';
    out << cfg.lr_decay_epochs[i];
  }
  out << '\n'
      << "diag_stride = " << cfg.diag_stride << '\n'
      << "output_dir = " << cfg.output_dir.string() << '\n'
      << "plot = " << (cfg.plot ? "true" : "false") << '\n'
      << "corrupt_feedback = " << (cfg.corrupt_feedback ? "true" : "false") << '\n';
}

void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::filesystem::path& path, bool with_test_acc) {
  std::ofstream out(path);
  if (!out) throw Error("write_metrics_csv: cannot open " + path.string());
  out << "step,epoch,loss,loss_gap,v_value,stiefel_dist,tangency,wall_ns";
  if (with_test_acc) out << ",test_acc";
  out << '\n';
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << r.epoch << ',' << num(r.loss) << ',';
    if (r.loss_gap) out << num(*r.loss_gap);
    out << ',' << num(r.v_value) << ',' << num(r.stiefel_dist) << ','
        << num(r.tangency) << ',' << r.wall_ns;
    if (with_test_acc) {
      out << ',';
      if (r.test_acc) out << num(*r.test_acc);
    }
    out << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_metrics_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("read_metrics_csv: empty file");
  const bool with_acc = line.find("test_acc") != std::string::npos;
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < (with_acc ? 9u : 8u)) fields.push_back("");
    MetricsRow r;
    r.step = std::stol(fields[0]);
    r.epoch = std::stol(fields[1]);
    r.loss = std::stod(fields[2]);
    if (!fields[3].empty()) r.loss_gap = std::stod(fields[3]);
    r.v_value = std::stod(fields[4]);
    r.stiefel_dist = std::stod(fields[5]);
    r.tangency = std::stod(fields[6]);
    r.wall_ns = std::stoll(fields[7]);
    if (with_acc && !fields[8].empty()) r.test_acc = std::stod(fields[8]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fgd
