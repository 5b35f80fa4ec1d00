#include "hypflow/config.hpp"

#include "hypflow/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hypflow {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& v, int line, const std::string& key) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(line, key + ": malformed number '" + v + "'");
  return x;
}

long long to_int(const std::string& v, int line, const std::string& key) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  long long x = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') fail(line, key + ": malformed integer '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& v, int line, const std::string& key) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0') fail(line, key + ": malformed integer '" + v + "'");
  return x;
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(line, key + ": expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::size_t at = 0;
  while (at <= v.size()) {
    std::size_t comma = v.find(',', at);
    std::string item =
        trim(v.substr(at, comma == std::string::npos ? comma : comma - at));
    if (item.empty()) fail(line, key + ": empty list element");
    out.push_back(to_double(item, line, key));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  if (out.empty()) fail(line, key + ": empty list");
  return out;
}

std::vector<std::vector<double>> to_rows(const std::string& v, int line,
                                         const std::string& key) {
  std::vector<std::vector<double>> out;
  std::size_t at = 0;
  while (at <= v.size()) {
    std::size_t semi = v.find(';', at);
    std::string row = trim(v.substr(at, semi == std::string::npos ? semi : semi - at));
    if (row.empty()) fail(line, key + ": empty row");
    out.push_back(to_list(row, line, key));
    if (semi == std::string::npos) break;
    at = semi + 1;
  }
  return out;
}

}  // namespace

TrainConfig parse_train_config_text(const std::string& text) {
  TrainConfig cfg;
  bool saw_target = false, saw_flow = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      continue;  // sections are organizational only
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, key + ": empty value");

    if (key == "target") {
      try {
        cfg.target.kind = target_kind_from_string(value);
      } catch (const std::invalid_argument& e) {
        fail(line_no, e.what());
      }
      saw_target = true;
    } else if (key == "flow") {
      if (value == "none") {
        cfg.use_flow_layers = false;
        cfg.flow_kind = LayerKind::tangent;
      } else {
        try {
          cfg.flow_kind = layer_kind_from_string(value);
        } catch (const std::invalid_argument& e) {
          fail(line_no, e.what());
        }
        cfg.use_flow_layers = true;
      }
      saw_flow = true;
    } else if (key == "dim") {
      cfg.dim = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "layers") {
      cfg.n_layers = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "hidden") {
      cfg.hidden = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "epochs") {
      cfg.epochs = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "learning_rate") {
      cfg.learning_rate = to_double(value, line_no, key);
    } else if (key == "seed") {
      cfg.seed = to_u64(value, line_no, key);
    } else if (key == "warmup_epochs") {
      cfg.warmup_epochs = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "warmup_start_radius") {
      cfg.warmup_start_R = to_double(value, line_no, key);
    } else if (key == "warmup_end_radius") {
      cfg.warmup_end_R = to_double(value, line_no, key);
    } else if (key == "learnable_curvature") {
      cfg.learnable_curvature = to_bool(value, line_no, key);
    } else if (key == "dataset_count") {
      cfg.dataset_count = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "train_fraction") {
      cfg.train_fraction = to_double(value, line_no, key);
    } else if (key == "eval_samples") {
      cfg.eval_samples = static_cast<int>(to_int(value, line_no, key));
    } else if (key == "gaussian_mean") {
      cfg.target.mean_tangent = to_list(value, line_no, key);
    } else if (key == "gaussian_sigma") {
      cfg.target.sigma = to_list(value, line_no, key);
    } else if (key == "mixture_means") {
      cfg.target.mix_means = to_rows(value, line_no, key);
    } else if (key == "mixture_sigmas") {
      cfg.target.mix_sigmas = to_rows(value, line_no, key);
    } else if (key == "mixture_weights") {
      cfg.target.mix_weights = to_list(value, line_no, key);
    } else if (key == "spiral_turns") {
      cfg.target.spiral_turns = to_double(value, line_no, key);
    } else if (key == "spiral_radius") {
      cfg.target.spiral_radius = to_double(value, line_no, key);
    } else if (key == "spiral_noise") {
      cfg.target.spiral_noise = to_double(value, line_no, key);
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }

  if (!saw_target) throw ConfigError("config: missing required key 'target'");
  if (!saw_flow) throw ConfigError("config: missing required key 'flow'");

  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(cfg.dim == 2, "dim must be 2 (all built-in targets are 2-D)");
  require(cfg.n_layers >= 1, "layers must be >= 1");
  require(cfg.hidden >= 1, "hidden must be >= 1");
  require(cfg.epochs >= 1, "epochs must be >= 1");
  require(cfg.batch_size >= 0, "batch_size must be >= 0");
  require(cfg.learning_rate > 0.0, "learning_rate must be > 0");
  require(cfg.warmup_epochs >= 0, "warmup_epochs must be >= 0");
  require(cfg.warmup_start_R > 0.0, "warmup_start_radius must be > 0");
  require(cfg.warmup_end_R > 0.0, "warmup_end_radius must be > 0");
  require(cfg.dataset_count >= 2, "dataset_count must be >= 2");
  require(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0,
          "train_fraction must be in (0, 1]");
  require(cfg.eval_samples >= 0, "eval_samples must be >= 0");
  return cfg;
}

TrainConfig parse_train_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config_text(buf.str());
}

namespace {

std::string list_str(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", xs[i]);
    out += buf;
  }
  return out;
}

std::string rows_str(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ";";
    out += list_str(rows[i]);
  }
  return out;
}

}  // namespace

std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "flow = " << (cfg.use_flow_layers ? to_string(cfg.flow_kind) : "none") << "\n";
  out << "dim = " << cfg.dim << "\n";
  out << "layers = " << cfg.n_layers << "\n";
  out << "hidden = " << cfg.hidden << "\n";
  out << "[optimization]\n";
  out << "epochs = " << cfg.epochs << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "learning_rate = " << fmt17(cfg.learning_rate) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "[curvature]\n";
  out << "warmup_epochs = " << cfg.warmup_epochs << "\n";
  out << "warmup_start_radius = " << fmt17(cfg.warmup_start_R) << "\n";
  out << "warmup_end_radius = " << fmt17(cfg.warmup_end_R) << "\n";
  out << "learnable_curvature = " << (cfg.learnable_curvature ? "true" : "false") << "\n";
  out << "[data]\n";
  out << "target = " << to_string(cfg.target.kind) << "\n";
  out << "dataset_count = " << cfg.dataset_count << "\n";
  out << "train_fraction = " << fmt17(cfg.train_fraction) << "\n";
  out << "eval_samples = " << cfg.eval_samples << "\n";
  switch (cfg.target.kind) {
    case TargetSpec::Kind::gaussian:
      out << "gaussian_mean = " << list_str(cfg.target.mean_tangent) << "\n";
      out << "gaussian_sigma = " << list_str(cfg.target.sigma) << "\n";
      break;
    case TargetSpec::Kind::mixture:
      out << "mixture_means = " << rows_str(cfg.target.mix_means) << "\n";
      out << "mixture_sigmas = " << rows_str(cfg.target.mix_sigmas) << "\n";
      out << "mixture_weights = " << list_str(cfg.target.mix_weights) << "\n";
      break;
    case TargetSpec::Kind::spiral:
      out << "spiral_turns = " << fmt17(cfg.target.spiral_turns) << "\n";
      out << "spiral_radius = " << fmt17(cfg.target.spiral_radius) << "\n";
      out << "spiral_noise = " << fmt17(cfg.target.spiral_noise) << "\n";
      break;
    case TargetSpec::Kind::checkerboard:
      break;
  }
  return out.str();
}

}  // namespace hypflow
