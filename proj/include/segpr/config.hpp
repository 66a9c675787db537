#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "segpr/errors.hpp"
#include "segpr/utf8.hpp"

namespace segpr {

// Every tunable of the pipeline, serializable as flat `key=value` text.
// Defaults are the desk-scale setup; production-scale values (embedding 200,
// 100 kernels per size, batch 64) are plain config choices away.
struct Config {
  std::uint64_t seed = 1;

  // encoder
  int embedding_dim = 32;
  std::vector<int> kernel_sizes = {2, 3, 4, 5};
  int kernels_per_size = 16;
  double dropout = 0.3;
  std::string pretrained;  // optional word2vec-text embedding file

  // corpus
  int min_count = 1;

  // optimizer
  double learning_rate = 0.001;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  double clip_norm = 5.0;
  int batch_size = 16;

  // training
  int epochs = 30;
  bool constrained_training = false;

  // posterior regularization
  double lambda = 0.5;
  double alpha = 1.0;
  int s_size = 2;
  int iterations = 4;
  int epochs_per_iteration = 5;
  int patience = 2;

  bool operator==(const Config&) const = default;

  void validate() const {
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (kernel_sizes.empty()) throw ConfigError("kernel_sizes must be nonempty");
    for (int k : kernel_sizes) {
      if (k < 1) throw ConfigError("kernel_sizes entries must be >= 1");
    }
    if (kernels_per_size < 1) throw ConfigError("kernels_per_size must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) {
      throw ConfigError("dropout must be in [0, 1)");
    }
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (rms_decay <= 0.0 || rms_decay >= 1.0) {
      throw ConfigError("rms_decay must be in (0, 1)");
    }
    if (rms_epsilon <= 0.0) throw ConfigError("rms_epsilon must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (s_size < 1) throw ConfigError("s_size must be >= 1");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (epochs_per_iteration < 1) {
      throw ConfigError("epochs_per_iteration must be >= 1");
    }
    if (patience < 1) throw ConfigError("patience must be >= 1");
  }
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

inline std::string format_int_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s,
                                       const std::string& key) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    const std::size_t j = std::min(s.find(',', i), s.size());
    const std::string item = s.substr(i, j - i);
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + item + "' is not an integer");
    }
    i = j + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    if constexpr (std::is_same_v<T, double>) {
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      const unsigned long long v = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return static_cast<std::uint64_t>(v);
    } else {
      const int v = std::stoi(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    }
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + value + "' is not a valid number");
  }
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": '" + value + "' is not a boolean");
}

}  // namespace detail

inline std::string config_to_text(const Config& c) {
  std::ostringstream out;
  out << "seed=" << c.seed << '\n';
  out << "embedding_dim=" << c.embedding_dim << '\n';
  out << "kernel_sizes=" << detail::format_int_list(c.kernel_sizes) << '\n';
  out << "kernels_per_size=" << c.kernels_per_size << '\n';
  out << "dropout=" << detail::format_double(c.dropout) << '\n';
  out << "pretrained=" << c.pretrained << '\n';
  out << "min_count=" << c.min_count << '\n';
  out << "learning_rate=" << detail::format_double(c.learning_rate) << '\n';
  out << "rms_decay=" << detail::format_double(c.rms_decay) << '\n';
  out << "rms_epsilon=" << detail::format_double(c.rms_epsilon) << '\n';
  out << "clip_norm=" << detail::format_double(c.clip_norm) << '\n';
  out << "batch_size=" << c.batch_size << '\n';
  out << "epochs=" << c.epochs << '\n';
  out << "constrained_training=" << (c.constrained_training ? "true" : "false")
      << '\n';
  out << "lambda=" << detail::format_double(c.lambda) << '\n';
  out << "alpha=" << detail::format_double(c.alpha) << '\n';
  out << "s_size=" << c.s_size << '\n';
  out << "iterations=" << c.iterations << '\n';
  out << "epochs_per_iteration=" << c.epochs_per_iteration << '\n';
  out << "patience=" << c.patience << '\n';
  return out.str();
}

inline void config_set(Config& c, const std::string& key,
                       const std::string& value) {
  using detail::parse_number;
  if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(value, key);
  } else if (key == "embedding_dim") {
    c.embedding_dim = parse_number<int>(value, key);
  } else if (key == "kernel_sizes") {
    c.kernel_sizes = detail::parse_int_list(value, key);
  } else if (key == "kernels_per_size") {
    c.kernels_per_size = parse_number<int>(value, key);
  } else if (key == "dropout") {
    c.dropout = parse_number<double>(value, key);
  } else if (key == "pretrained") {
    c.pretrained = value;
  } else if (key == "min_count") {
    c.min_count = parse_number<int>(value, key);
  } else if (key == "learning_rate") {
    c.learning_rate = parse_number<double>(value, key);
  } else if (key == "rms_decay") {
    c.rms_decay = parse_number<double>(value, key);
  } else if (key == "rms_epsilon") {
    c.rms_epsilon = parse_number<double>(value, key);
  } else if (key == "clip_norm") {
    c.clip_norm = parse_number<double>(value, key);
  } else if (key == "batch_size") {
    c.batch_size = parse_number<int>(value, key);
  } else if (key == "epochs") {
    c.epochs = parse_number<int>(value, key);
  } else if (key == "constrained_training") {
    c.constrained_training = detail::parse_bool(value, key);
  } else if (key == "lambda") {
    c.lambda = parse_number<double>(value, key);
  } else if (key == "alpha") {
    c.alpha = parse_number<double>(value, key);
  } else if (key == "s_size") {
    c.s_size = parse_number<int>(value, key);
  } else if (key == "iterations") {
    c.iterations = parse_number<int>(value, key);
  } else if (key == "epochs_per_iteration") {
    c.epochs_per_iteration = parse_number<int>(value, key);
  } else if (key == "patience") {
    c.patience = parse_number<int>(value, key);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

inline Config config_from_text(std::string_view text,
                               Config base = Config{}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t b = 0;
    std::size_t e = line.size();
    while (b < e && is_ascii_space(line[b])) ++b;
    while (e > b && is_ascii_space(line[e - 1])) --e;
    if (b == e || line[b] == '#') continue;
    const std::size_t eq = line.find('=', b);
    if (eq == std::string::npos || eq >= e) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    }
    std::size_t ke = eq;
    while (ke > b && is_ascii_space(line[ke - 1])) --ke;
    std::size_t vb = eq + 1;
    while (vb < e && is_ascii_space(line[vb])) ++vb;
    config_set(base, line.substr(b, ke - b), line.substr(vb, e - vb));
  }
  return base;
}

inline Config load_config(const std::string& path, Config base = Config{}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return config_from_text(text.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace segpr
