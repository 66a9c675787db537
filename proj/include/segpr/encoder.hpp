#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "segpr/corpus.hpp"
#include "segpr/errors.hpp"
#include "segpr/graph.hpp"
#include "segpr/matrix.hpp"
#include "segpr/rng.hpp"
#include "segpr/tags.hpp"
#include "segpr/utf8.hpp"

namespace segpr {

// Character CNN over tag-score space. For every position, windows of each
// kernel size are cut from the (padded) embedding sequence, concatenated,
// and passed through affine + ReLU; the per-size feature blocks concatenate
// to h_i, which an affine projection maps to the four unary tag scores.
struct EncoderParams {
  int embedding_dim = 0;
  std::vector<int> kernel_sizes;
  Parameter embeddings;             // V x d
  std::vector<Parameter> conv_w;    // (k*d) x m per kernel size
  std::vector<Parameter> conv_b;    // 1 x m
  Parameter proj_w;                 // F x 4
  Parameter proj_b;                 // 1 x 4

  int vocab_size() const { return embeddings.value.rows(); }

  int feature_dim() const {
    int f = 0;
    for (const auto& b : conv_b) f += b.value.cols();
    return f;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> ps{&embeddings};
    for (auto& w : conv_w) ps.push_back(&w);
    for (auto& b : conv_b) ps.push_back(&b);
    ps.push_back(&proj_w);
    ps.push_back(&proj_b);
    return ps;
  }
};

namespace detail {

inline void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
}

inline Matrix xavier(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  fill_uniform(m, std::sqrt(6.0 / (rows + cols)), rng);
  return m;
}

}  // namespace detail

// Overwrites embedding rows for vocabulary characters found in a word2vec
// text file (`<count> <dim>` header, then `char v1 ... vd` lines). Rows for
// characters absent from the file keep their random initialization. Returns
// the number of rows copied.
inline int apply_pretrained_embeddings(Matrix& embeddings, const Vocab& vocab,
                                       const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read pretrained embeddings: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("empty pretrained embedding file: " + path);
  }
  std::istringstream header(line);
  long count = 0;
  int dim = 0;
  if (!(header >> count >> dim)) {
    throw FormatError(path + ":1: expected '<count> <dim>' header");
  }
  if (dim != embeddings.cols()) {
    throw ConfigError("pretrained embedding dimension " + std::to_string(dim) +
                      " does not match configured dimension " +
                      std::to_string(embeddings.cols()));
  }
  int copied = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::u32string key;
    try {
      key = decode_utf8(token);
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const bool usable = key.size() == 1 && vocab.contains(key[0]);
    const int row = usable ? vocab.id(key[0]) : -1;
    for (int j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!(fields >> v)) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(dim) + " values");
      }
      if (row >= 0) embeddings(row, j) = v;
    }
    if (row >= 0) ++copied;
  }
  return copied;
}

inline EncoderParams init_params(const Vocab& vocab, int embedding_dim,
                                 std::span<const int> kernel_sizes,
                                 int kernels_per_size, Rng& rng,
                                 const std::string& pretrained_path = "") {
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (kernel_sizes.empty()) throw ConfigError("kernel size set is empty");
  if (kernels_per_size < 1) throw ConfigError("kernels_per_size must be >= 1");
  for (int k : kernel_sizes) {
    if (k < 1) throw ConfigError("kernel sizes must be >= 1");
  }

  EncoderParams p;
  p.embedding_dim = embedding_dim;
  p.kernel_sizes.assign(kernel_sizes.begin(), kernel_sizes.end());

  p.embeddings.name = "embeddings";
  p.embeddings.value = Matrix(vocab.size(), embedding_dim);
  detail::fill_uniform(p.embeddings.value, std::sqrt(3.0 / embedding_dim), rng);

  for (int k : kernel_sizes) {
    Parameter w;
    w.name = "conv_w_" + std::to_string(k);
    w.value = detail::xavier(k * embedding_dim, kernels_per_size, rng);
    p.conv_w.push_back(std::move(w));
    Parameter b;
    b.name = "conv_b_" + std::to_string(k);
    b.value = Matrix(1, kernels_per_size);
    p.conv_b.push_back(std::move(b));
  }

  const int f = static_cast<int>(kernel_sizes.size()) * kernels_per_size;
  p.proj_w.name = "proj_w";
  p.proj_w.value = detail::xavier(f, kNumTags, rng);
  p.proj_b.name = "proj_b";
  p.proj_b.value = Matrix(1, kNumTags);

  for (Parameter* q : p.parameters()) q->grad = Matrix(q->value.rows(), q->value.cols());

  if (!pretrained_path.empty()) {
    apply_pretrained_embeddings(p.embeddings.value, vocab, pretrained_path);
  }
  return p;
}

// Builds the unary score node (N x 4) for one sentence of character ids.
// With training=false no dropout is applied and the rng is never touched.
inline Node* encode(Graph& g, EncoderParams& p, std::span<const int> ids,
                    double dropout_rate, bool training, Rng& rng) {
  if (ids.empty()) throw InputError("cannot encode an empty sentence");
  const int n = static_cast<int>(ids.size());
  const int d = p.embedding_dim;

  int pad_left = 0;
  int pad_right = 0;
  for (int k : p.kernel_sizes) {
    pad_left = std::max(pad_left, k / 2);
    pad_right = std::max(pad_right, (k - 1) / 2);
  }

  std::vector<int> padded(pad_left + n + pad_right, Vocab::kPad);
  for (int i = 0; i < n; ++i) padded[pad_left + i] = ids[i];

  Node* table = g.leaf(p.embeddings);
  Node* emb = g.gather_rows(table, padded);
  emb = g.dropout(emb, dropout_rate, rng, training);

  std::vector<Node*> blocks;
  for (std::size_t s = 0; s < p.kernel_sizes.size(); ++s) {
    const int k = p.kernel_sizes[s];
    if (p.conv_w[s].value.rows() != k * d) {
      throw DimensionError("conv weights for kernel size " +
                           std::to_string(k) + " expect " +
                           std::to_string(p.conv_w[s].value.rows() / d) +
                           "-wide windows");
    }
    std::vector<Node*> window;
    for (int o = 0; o < k; ++o) {
      std::vector<int> rows(n);
      for (int i = 0; i < n; ++i) rows[i] = pad_left - k / 2 + o + i;
      window.push_back(g.gather_rows(emb, rows));
    }
    Node* cat = g.concat_cols(window);
    Node* conv = g.affine(cat, g.leaf(p.conv_w[s]), g.leaf(p.conv_b[s]));
    blocks.push_back(g.relu(conv));
  }

  Node* h = g.concat_cols(blocks);
  h = g.dropout(h, dropout_rate, rng, training);
  return g.affine(h, g.leaf(p.proj_w), g.leaf(p.proj_b));
}

}  // namespace segpr
