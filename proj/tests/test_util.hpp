#ifndef SEGPR_TESTS_TEST_UTIL_HPP
#define SEGPR_TESTS_TEST_UTIL_HPP

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "segpr/segpr.hpp"

namespace segpr::testing {

// ---------------------------------------------------------------------------
// Brute-force CRF oracle. Enumerates every tag sequence, scoring it with the
// same left-to-right addition order as the lattice recursions so that exact
// comparisons are meaningful.

struct OraclePath {
  std::vector<Tag> tags;
  double score = 0.0;
};

inline bool path_legal(const std::vector<Tag>& tags, bool constrained) {
  if (!constrained) return true;
  if (!start_legal(tags.front()) || !end_legal(tags.back())) return false;
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) {
    if (!bigram_legal(tags[i], tags[i + 1])) return false;
  }
  return true;
}

inline std::vector<OraclePath> enumerate_paths(const Matrix& unary,
                                               const Matrix& trans,
                                               bool constrained) {
  const int n = unary.rows();
  std::vector<OraclePath> out;
  std::vector<int> codes(n, 0);
  while (true) {
    std::vector<Tag> tags(n);
    for (int i = 0; i < n; ++i) tags[i] = kAllTags[codes[i]];
    if (path_legal(tags, constrained)) {
      double s = unary(0, codes[0]);
      for (int i = 1; i < n; ++i) {
        s += trans(codes[i - 1], codes[i]);
        s += unary(i, codes[i]);
      }
      out.push_back({std::move(tags), s});
    }
    int i = n - 1;
    while (i >= 0 && codes[i] == kNumTags - 1) codes[i--] = 0;
    if (i < 0) break;
    ++codes[i];
  }
  return out;
}

inline double oracle_log_z(const std::vector<OraclePath>& paths) {
  double m = paths.front().score;
  for (const auto& p : paths) m = std::max(m, p.score);
  double z = 0.0;
  for (const auto& p : paths) z += std::exp(p.score - m);
  return m + std::log(z);
}

inline Matrix oracle_node_marginals(const std::vector<OraclePath>& paths,
                                    int n) {
  const double log_z = oracle_log_z(paths);
  Matrix m(n, kNumTags);
  for (const auto& p : paths) {
    const double w = std::exp(p.score - log_z);
    for (int i = 0; i < n; ++i) m(i, tag_code(p.tags[i])) += w;
  }
  return m;
}

inline std::vector<Matrix> oracle_edge_marginals(
    const std::vector<OraclePath>& paths, int n) {
  const double log_z = oracle_log_z(paths);
  std::vector<Matrix> out(n > 1 ? n - 1 : 0, Matrix(kNumTags, kNumTags));
  for (const auto& p : paths) {
    const double w = std::exp(p.score - log_z);
    for (int i = 0; i + 1 < n; ++i) {
      out[i](tag_code(p.tags[i]), tag_code(p.tags[i + 1])) += w;
    }
  }
  return out;
}

// Highest score; among exact ties the sequence whose reversed tag codes are
// lexicographically smallest (last position decided first).
inline OraclePath oracle_best(const std::vector<OraclePath>& paths) {
  const OraclePath* best = &paths.front();
  for (const auto& p : paths) {
    if (p.score > best->score) {
      best = &p;
    } else if (p.score == best->score && &p != best) {
      const auto& a = p.tags;
      const auto& b = best->tags;
      for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) {
          if (tag_code(a[i]) < tag_code(b[i])) best = &p;
          break;
        }
      }
    }
  }
  return *best;
}

// Score descending; exact ties order by the forward tag sequence.
inline std::vector<OraclePath> oracle_kbest(std::vector<OraclePath> paths,
                                            int k) {
  std::sort(paths.begin(), paths.end(),
            [](const OraclePath& x, const OraclePath& y) {
              if (x.score != y.score) return x.score > y.score;
              return x.tags < y.tags;
            });
  if (static_cast<int>(paths.size()) > k) paths.resize(k);
  return paths;
}

inline Matrix random_matrix(int rows, int cols, double lo, double hi,
                            Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

// ---------------------------------------------------------------------------
// Central finite differences against whatever gradients `loss_fn` accumulates
// into the parameters. `loss_fn` must be deterministic and must build a fresh
// graph per call. Large parameters are spot-checked on a random subset of
// coordinates.

struct FdReport {
  int checked = 0;
  double max_rel = 0.0;
  std::string worst;
};

template <typename LossFn>
FdReport check_gradients(const std::vector<Parameter*>& params, LossFn loss_fn,
                         double h, int sample_per_param, Rng& rng) {
  for (Parameter* p : params) p->grad.fill(0.0);
  (void)loss_fn();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  FdReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const int n = static_cast<int>(p.value.data().size());
    std::vector<int> coords;
    if (n <= sample_per_param) {
      for (int c = 0; c < n; ++c) coords.push_back(c);
    } else {
      std::unordered_set<int> seen;
      while (static_cast<int>(seen.size()) < sample_per_param) {
        seen.insert(static_cast<int>(rng.next_below(n)));
      }
      coords.assign(seen.begin(), seen.end());
    }
    for (int c : coords) {
      double& x = p.value.data()[c];
      const double orig = x;
      x = orig + h;
      const double lp = loss_fn();
      x = orig - h;
      const double lm = loss_fn();
      x = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double a = analytic[pi].data()[c];
      const double rel = std::abs(fd - a) /
                         std::max({1.0, std::abs(fd), std::abs(a)});
      ++rep.checked;
      if (rel > rep.max_rel) {
        rep.max_rel = rel;
        std::ostringstream os;
        os << p.name << "[" << c << "]: analytic " << a << " vs fd " << fd;
        rep.worst = os.str();
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Filesystem and subprocess helpers for exercising the command line tool.

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("segpr_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::string& args,
                         const std::filesystem::path& workdir) {
  const std::filesystem::path out_path = workdir / ".stdout";
  const std::filesystem::path err_path = workdir / ".stderr";
  const std::string cmd = "cd '" + workdir.string() + "' && '" +
                          std::string(SEGPR_CLI_PATH) + "' " + args + " > '" +
                          out_path.string() + "' 2> '" + err_path.string() +
                          "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// Pulls the value after `key=` from the last line of `text` containing it.
inline double parse_metric(const std::string& text, const std::string& key) {
  std::size_t pos = std::string::npos;
  std::size_t at = text.find(key + "=");
  while (at != std::string::npos) {
    pos = at;
    at = text.find(key + "=", at + 1);
  }
  if (pos == std::string::npos) {
    throw InputError("metric " + key + " not found in output");
  }
  return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace segpr::testing

#endif  // SEGPR_TESTS_TEST_UTIL_HPP
