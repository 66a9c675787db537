#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "segpr/config.hpp"
#include "segpr/corpus.hpp"
#include "segpr/crf.hpp"
#include "segpr/encoder.hpp"
#include "segpr/errors.hpp"
#include "segpr/graph.hpp"
#include "segpr/matrix.hpp"
#include "segpr/rng.hpp"

namespace segpr {

inline constexpr char kModelMagic[5] = {'S', 'E', 'G', 'P', 'R'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

// Everything a trained segmenter needs: the configuration it was trained
// with, the character vocabulary, the encoder weights, and the CRF
// transition matrix.
struct Model {
  Config config;
  Vocab vocab;
  EncoderParams encoder;
  Parameter transitions;

  std::vector<Parameter*> parameters() {
    auto ps = encoder.parameters();
    ps.push_back(&transitions);
    return ps;
  }
};

inline Model init_model(const Config& config, Vocab vocab, Rng& rng) {
  config.validate();
  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  m.encoder = init_params(m.vocab, config.embedding_dim, config.kernel_sizes,
                          config.kernels_per_size, rng, config.pretrained);
  m.transitions = Parameter("transitions", Matrix(kNumTags, kNumTags));
  return m;
}

inline std::vector<Matrix> snapshot_values(Model& m) {
  std::vector<Matrix> vs;
  for (Parameter* p : m.parameters()) vs.push_back(p->value);
  return vs;
}

inline void restore_values(Model& m, const std::vector<Matrix>& vs) {
  const auto ps = m.parameters();
  if (vs.size() != ps.size()) {
    throw DimensionError("restore_values: snapshot has " +
                         std::to_string(vs.size()) + " entries, model has " +
                         std::to_string(ps.size()));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    require_shape(vs[i], ps[i]->value.rows(), ps[i]->value.cols(),
                  "restore_values: " + ps[i]->name);
    ps[i]->value = vs[i];
  }
}

// Unary scores for one sentence with dropout off; the model is logically
// const but leaf binding needs mutable parameter access.
inline Matrix unary_scores(Model& m, std::span<const int> ids) {
  Graph g;
  Rng unused(0);
  return encode(g, m.encoder, ids, 0.0, false, unused)->value;
}

inline std::vector<Tag> predict_tags(Model& m, const std::u32string& chars) {
  return viterbi(unary_scores(m, m.vocab.encode(chars)),
                 m.transitions.value, true)
      .tags;
}

inline std::vector<std::u32string> segment(Model& m,
                                           const std::u32string& chars) {
  if (chars.empty()) return {};
  return tags_to_words(chars, predict_tags(m, chars));
}

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

inline void write_blob(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline void read_exact(std::istream& in, char* buf, std::size_t n,
                       const std::string& what) {
  in.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError("truncated model file while reading " + what);
  }
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  char buf[4];
  read_exact(in, buf, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[i]))
         << (8 * i);
  }
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
  char buf[8];
  read_exact(in, buf, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i]))
         << (8 * i);
  }
  return v;
}

inline std::string read_blob(std::istream& in, const std::string& what) {
  const std::uint64_t n = read_u64(in, what + " length");
  std::string s(n, '\0');
  if (n > 0) read_exact(in, s.data(), n, what);
  return s;
}

inline Matrix read_matrix(std::istream& in, const std::string& what) {
  const int rows = static_cast<int>(read_u32(in, what + " rows"));
  const int cols = static_cast<int>(read_u32(in, what + " cols"));
  Matrix m(rows, cols);
  if (m.size() > 0) {
    read_exact(in, reinterpret_cast<char*>(m.data().data()),
               m.size() * sizeof(double), what);
  }
  return m;
}

}  // namespace detail

inline void save_model(Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out.write(kModelMagic, sizeof(kModelMagic));
  detail::write_u32(out, kModelFormatVersion);
  detail::write_blob(out, config_to_text(m.config));
  std::ostringstream vocab_text;
  m.vocab.write(vocab_text);
  detail::write_blob(out, vocab_text.str());
  const auto ps = m.parameters();
  detail::write_u32(out, static_cast<std::uint32_t>(ps.size()));
  for (const Parameter* p : ps) {
    detail::write_blob(out, p->name);
    detail::write_matrix(out, p->value);
  }
  if (!out) throw IoError("failed writing model file: " + path);
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file: " + path);

  char magic[sizeof(kModelMagic)];
  detail::read_exact(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw FormatError(path + " is not a model file (bad magic)");
  }
  const std::uint32_t version = detail::read_u32(in, "format version");
  if (version != kModelFormatVersion) {
    throw FormatError(path + ": unsupported model format version " +
                      std::to_string(version));
  }

  Model m;
  m.config = config_from_text(detail::read_blob(in, "config"));
  m.config.validate();
  std::istringstream vocab_in(detail::read_blob(in, "vocab"));
  m.vocab = Vocab::read(vocab_in, path + " (embedded vocab)");

  // Shape the skeleton from the config, then fill values strictly in the
  // order save_model wrote them.
  m.encoder.embedding_dim = m.config.embedding_dim;
  m.encoder.kernel_sizes = m.config.kernel_sizes;
  m.encoder.embeddings =
      Parameter("embeddings", Matrix(m.vocab.size(), m.config.embedding_dim));
  for (int k : m.config.kernel_sizes) {
    m.encoder.conv_w.emplace_back(
        "conv_w_" + std::to_string(k),
        Matrix(k * m.config.embedding_dim, m.config.kernels_per_size));
    m.encoder.conv_b.emplace_back("conv_b_" + std::to_string(k),
                                  Matrix(1, m.config.kernels_per_size));
  }
  const int f = static_cast<int>(m.config.kernel_sizes.size()) *
                m.config.kernels_per_size;
  m.encoder.proj_w = Parameter("proj_w", Matrix(f, kNumTags));
  m.encoder.proj_b = Parameter("proj_b", Matrix(1, kNumTags));
  m.transitions = Parameter("transitions", Matrix(kNumTags, kNumTags));

  const auto ps = m.parameters();
  const std::uint32_t count = detail::read_u32(in, "parameter count");
  if (count != ps.size()) {
    throw FormatError(path + ": expected " + std::to_string(ps.size()) +
                      " parameters, found " + std::to_string(count));
  }
  for (Parameter* p : ps) {
    const std::string name = detail::read_blob(in, "parameter name");
    if (name != p->name) {
      throw FormatError(path + ": expected parameter '" + p->name +
                        "', found '" + name + "'");
    }
    Matrix value = detail::read_matrix(in, p->name);
    if (!value.same_shape(p->value)) {
      throw ConfigError(path + ": parameter '" + p->name +
                        "' has shape " + std::to_string(value.rows()) + "x" +
                        std::to_string(value.cols()) +
                        ", config implies " + std::to_string(p->value.rows()) +
                        "x" + std::to_string(p->value.cols()));
    }
    p->value = std::move(value);
  }
  return m;
}

}  // namespace segpr
