#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "segpr/errors.hpp"
#include "segpr/matrix.hpp"
#include "segpr/tags.hpp"

namespace segpr {

// Stand-in for log(0) on forbidden lattice entries. Large but finite so the
// dynamic programs never produce NaN from inf arithmetic; masked paths still
// underflow to exactly zero probability.
inline constexpr double kNegInf = -1.0e30;

namespace detail {

inline void check_crf_shapes(const Matrix& unary, const Matrix& trans) {
  if (unary.cols() != kNumTags) {
    throw DimensionError("unary scores must have " +
                         std::to_string(kNumTags) + " columns, got " +
                         std::to_string(unary.cols()));
  }
  if (trans.rows() != kNumTags || trans.cols() != kNumTags) {
    throw DimensionError("transition matrix must be " +
                         std::to_string(kNumTags) + "x" +
                         std::to_string(kNumTags));
  }
  if (unary.rows() == 0) throw DimensionError("empty tag lattice");
}

inline double logsumexp4(const double (&v)[kNumTags]) {
  const double m = std::max(std::max(v[0], v[1]), std::max(v[2], v[3]));
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

// Score of one tag path: sum of unary scores plus sum of transition scores.
inline double sequence_score(const Matrix& unary, const Matrix& trans,
                             std::span<const Tag> tags) {
  detail::check_crf_shapes(unary, trans);
  if (static_cast<int>(tags.size()) != unary.rows()) {
    throw InputError("sequence_score: " + std::to_string(tags.size()) +
                     " tags vs " + std::to_string(unary.rows()) +
                     " positions");
  }
  double s = 0.0;
  for (int i = 0; i < unary.rows(); ++i) {
    s += unary(i, tag_code(tags[i]));
    if (i + 1 < unary.rows()) s += trans(tag_code(tags[i]), tag_code(tags[i + 1]));
  }
  return s;
}

// Forward and backward log-messages plus the log-partition value. With
// `constrained` set the BMES legality mask is applied: sentences start in
// {B,S}, end in {E,S}, and only legal bigrams carry mass.
struct Lattice {
  Matrix alpha;
  Matrix beta;
  double log_z = 0.0;
  bool constrained = false;
};

inline Lattice forward_backward(const Matrix& unary, const Matrix& trans,
                                bool constrained) {
  detail::check_crf_shapes(unary, trans);
  const int n = unary.rows();
  Lattice lat;
  lat.constrained = constrained;
  lat.alpha = Matrix(n, kNumTags);
  lat.beta = Matrix(n, kNumTags);

  for (int t = 0; t < kNumTags; ++t) {
    lat.alpha(0, t) =
        constrained && !start_legal(kAllTags[t]) ? kNegInf : unary(0, t);
  }
  for (int i = 1; i < n; ++i) {
    for (int t = 0; t < kNumTags; ++t) {
      double acc[kNumTags];
      for (int a = 0; a < kNumTags; ++a) {
        const bool ok = !constrained || bigram_legal(kAllTags[a], kAllTags[t]);
        acc[a] = ok ? lat.alpha(i - 1, a) + trans(a, t) : kNegInf;
      }
      lat.alpha(i, t) = unary(i, t) + detail::logsumexp4(acc);
    }
  }

  for (int t = 0; t < kNumTags; ++t) {
    lat.beta(n - 1, t) =
        constrained && !end_legal(kAllTags[t]) ? kNegInf : 0.0;
  }
  for (int i = n - 2; i >= 0; --i) {
    for (int a = 0; a < kNumTags; ++a) {
      double acc[kNumTags];
      for (int t = 0; t < kNumTags; ++t) {
        const bool ok = !constrained || bigram_legal(kAllTags[a], kAllTags[t]);
        acc[t] = ok ? trans(a, t) + unary(i + 1, t) + lat.beta(i + 1, t)
                    : kNegInf;
      }
      lat.beta(i, a) = detail::logsumexp4(acc);
    }
  }

  double last[kNumTags];
  for (int t = 0; t < kNumTags; ++t) {
    last[t] = lat.alpha(n - 1, t) + lat.beta(n - 1, t);
  }
  lat.log_z = detail::logsumexp4(last);
  return lat;
}

inline double log_partition(const Matrix& unary, const Matrix& trans,
                            bool constrained) {
  return forward_backward(unary, trans, constrained).log_z;
}

inline double log_likelihood(const Matrix& unary, const Matrix& trans,
                             std::span<const Tag> tags, bool constrained) {
  return sequence_score(unary, trans, tags) -
         log_partition(unary, trans, constrained);
}

// Posterior P(y_i = t) for every position, rows summing to 1.
inline Matrix node_marginals(const Lattice& lat) {
  const int n = lat.alpha.rows();
  Matrix m(n, kNumTags);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < kNumTags; ++t) {
      m(i, t) = std::exp(lat.alpha(i, t) + lat.beta(i, t) - lat.log_z);
    }
  }
  return m;
}

namespace detail {

// Posterior P(y_i = a, y_{i+1} = b).
inline double edge_prob(const Lattice& lat, const Matrix& unary,
                        const Matrix& trans, int i, int a, int b) {
  if (lat.constrained && !bigram_legal(kAllTags[a], kAllTags[b])) return 0.0;
  return std::exp(lat.alpha(i, a) + trans(a, b) + unary(i + 1, b) +
                  lat.beta(i + 1, b) - lat.log_z);
}

}  // namespace detail

struct Marginals {
  Matrix node;               // N x 4
  std::vector<Matrix> edge;  // N-1 matrices of 4 x 4, one per adjacent pair
};

inline Marginals marginals(const Matrix& unary, const Matrix& trans,
                           bool constrained) {
  const Lattice lat = forward_backward(unary, trans, constrained);
  Marginals m;
  m.node = node_marginals(lat);
  for (int i = 0; i + 1 < unary.rows(); ++i) {
    Matrix e(kNumTags, kNumTags);
    for (int a = 0; a < kNumTags; ++a) {
      for (int b = 0; b < kNumTags; ++b) {
        e(a, b) = detail::edge_prob(lat, unary, trans, i, a, b);
      }
    }
    m.edge.push_back(std::move(e));
  }
  return m;
}

// Loss and analytic gradients of an expectation of negative log-likelihoods
// over a weighted candidate set:
//
//   loss = sum_c w_c * (log Z - score(c))
//
// The gradient in the unary scores is the node marginal matrix minus the
// weighted tag counts of the candidates; likewise for transitions with
// pairwise marginals and bigram counts.
struct CrfGrad {
  double loss = 0.0;
  Matrix d_unary;
  Matrix d_trans;
};

inline CrfGrad expected_nll_grad(const Matrix& unary, const Matrix& trans,
                                 std::span<const std::vector<Tag>> candidates,
                                 std::span<const double> weights,
                                 bool constrained) {
  if (candidates.size() != weights.size()) {
    throw DimensionError("expected_nll_grad: " +
                         std::to_string(candidates.size()) +
                         " candidates vs " + std::to_string(weights.size()) +
                         " weights");
  }
  if (candidates.empty()) {
    throw DimensionError("expected_nll_grad: empty candidate set");
  }
  const Lattice lat = forward_backward(unary, trans, constrained);
  const int n = unary.rows();
  double weight_sum = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (static_cast<int>(candidates[c].size()) != n) {
      throw DimensionError("expected_nll_grad: candidate " +
                           std::to_string(c) + " has " +
                           std::to_string(candidates[c].size()) +
                           " tags, expected " + std::to_string(n));
    }
    weight_sum += weights[c];
  }

  CrfGrad g;
  g.loss = weight_sum * lat.log_z;
  g.d_unary = node_marginals(lat);
  for (double& v : g.d_unary.data()) v *= weight_sum;
  g.d_trans = Matrix(kNumTags, kNumTags);
  for (int i = 0; i + 1 < n; ++i) {
    for (int a = 0; a < kNumTags; ++a) {
      for (int b = 0; b < kNumTags; ++b) {
        g.d_trans(a, b) +=
            weight_sum * detail::edge_prob(lat, unary, trans, i, a, b);
      }
    }
  }

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& tags = candidates[c];
    const double w = weights[c];
    g.loss -= w * sequence_score(unary, trans, tags);
    for (int i = 0; i < n; ++i) {
      g.d_unary(i, tag_code(tags[i])) -= w;
      if (i + 1 < n) g.d_trans(tag_code(tags[i]), tag_code(tags[i + 1])) -= w;
    }
  }
  return g;
}

inline CrfGrad nll_grad(const Matrix& unary, const Matrix& trans,
                        std::span<const Tag> gold, bool constrained) {
  const std::vector<Tag> one(gold.begin(), gold.end());
  const double w = 1.0;
  return expected_nll_grad(unary, trans, std::span<const std::vector<Tag>>(&one, 1),
                           std::span<const double>(&w, 1), constrained);
}

struct ScoredSequence {
  std::vector<Tag> tags;
  double score = 0.0;
};

// Highest scoring path. Ties take the lower tag code, both at each
// backpointer decision and at the final state.
inline ScoredSequence viterbi(const Matrix& unary, const Matrix& trans,
                              bool constrained) {
  detail::check_crf_shapes(unary, trans);
  const int n = unary.rows();
  Matrix delta(n, kNumTags);
  std::vector<std::array<int, kNumTags>> back(n);

  for (int t = 0; t < kNumTags; ++t) {
    delta(0, t) =
        constrained && !start_legal(kAllTags[t]) ? kNegInf : unary(0, t);
  }
  for (int i = 1; i < n; ++i) {
    for (int t = 0; t < kNumTags; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int a = 0; a < kNumTags; ++a) {
        const bool ok = !constrained || bigram_legal(kAllTags[a], kAllTags[t]);
        const double s = ok ? delta(i - 1, a) + trans(a, t) : kNegInf;
        if (s > best) {
          best = s;
          arg = a;
        }
      }
      delta(i, t) = unary(i, t) + best;
      back[i][t] = arg;
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int t = 0; t < kNumTags; ++t) {
    const double s =
        delta(n - 1, t) +
        (constrained && !end_legal(kAllTags[t]) ? kNegInf : 0.0);
    if (s > best) {
      best = s;
      arg = t;
    }
  }

  ScoredSequence out;
  out.tags.resize(n);
  for (int i = n - 1; i >= 0; --i) {
    out.tags[i] = kAllTags[arg];
    if (i > 0) arg = back[i][arg];
  }
  out.score = sequence_score(unary, trans, out.tags);
  return out;
}

// Exact k-best paths, highest score first. Equal scores order by the tag
// sequence, lexicographically with B < M < E < S. Returns fewer than k
// entries when the lattice has fewer legal paths.
inline std::vector<ScoredSequence> kbest(const Matrix& unary,
                                         const Matrix& trans, int k,
                                         bool constrained) {
  detail::check_crf_shapes(unary, trans);
  if (k < 1) throw ConfigError("kbest: k must be >= 1");
  const int n = unary.rows();

  const auto before = [](const ScoredSequence& x, const ScoredSequence& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.tags < y.tags;
  };

  // lists[t] holds the k best prefixes ending in state t at the current
  // position. Prefix order is preserved under common extension, so per-state
  // truncation is exact, ties included.
  std::array<std::vector<ScoredSequence>, kNumTags> lists;
  for (int t = 0; t < kNumTags; ++t) {
    if (constrained && !start_legal(kAllTags[t])) continue;
    lists[t].push_back({{kAllTags[t]}, unary(0, t)});
  }
  for (int i = 1; i < n; ++i) {
    std::array<std::vector<ScoredSequence>, kNumTags> next;
    for (int t = 0; t < kNumTags; ++t) {
      auto& cand = next[t];
      for (int a = 0; a < kNumTags; ++a) {
        if (constrained && !bigram_legal(kAllTags[a], kAllTags[t])) continue;
        for (const ScoredSequence& p : lists[a]) {
          ScoredSequence ext;
          ext.tags = p.tags;
          ext.tags.push_back(kAllTags[t]);
          ext.score = p.score + trans(a, t) + unary(i, t);
          cand.push_back(std::move(ext));
        }
      }
      std::sort(cand.begin(), cand.end(), before);
      if (static_cast<int>(cand.size()) > k) cand.resize(k);
    }
    lists = std::move(next);
  }

  std::vector<ScoredSequence> merged;
  for (int t = 0; t < kNumTags; ++t) {
    if (constrained && !end_legal(kAllTags[t])) continue;
    for (ScoredSequence& p : lists[t]) merged.push_back(std::move(p));
  }
  std::sort(merged.begin(), merged.end(), before);
  if (static_cast<int>(merged.size()) > k) merged.resize(k);
  return merged;
}

}  // namespace segpr
