#include "segpr/encoder.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace segpr {
namespace {

Vocab test_vocab() {
  const std::vector<std::u32string> texts{U"abcdefgh"};
  return Vocab::build(texts, 1);
}

TEST(Encoder, ParameterShapes) {
  Vocab vocab = test_vocab();
  Rng rng(1);
  const std::vector<int> sizes{2, 3, 5};
  EncoderParams p = init_params(vocab, 8, sizes, 6, rng);
  EXPECT_EQ(p.embeddings.value.rows(), vocab.size());
  EXPECT_EQ(p.embeddings.value.cols(), 8);
  ASSERT_EQ(p.conv_w.size(), 3u);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EXPECT_EQ(p.conv_w[i].value.rows(), sizes[i] * 8);
    EXPECT_EQ(p.conv_w[i].value.cols(), 6);
    EXPECT_EQ(p.conv_b[i].value.rows(), 1);
    EXPECT_EQ(p.conv_b[i].value.cols(), 6);
  }
  EXPECT_EQ(p.feature_dim(), 18);
  EXPECT_EQ(p.proj_w.value.rows(), 18);
  EXPECT_EQ(p.proj_w.value.cols(), kNumTags);
  EXPECT_EQ(p.proj_b.value.cols(), kNumTags);
  EXPECT_EQ(p.parameters().size(), 9u);  // embeddings, 3x(w, b), proj w, b
}

TEST(Encoder, InitRespectsBounds) {
  Vocab vocab = test_vocab();
  Rng rng(2);
  const std::vector<int> sizes{3};
  EncoderParams p = init_params(vocab, 16, sizes, 8, rng);
  const double emb_bound = std::sqrt(3.0 / 16.0);
  for (double v : p.embeddings.value.data()) {
    EXPECT_LE(std::abs(v), emb_bound);
  }
  const double conv_bound = std::sqrt(6.0 / (3 * 16 + 8));
  for (double v : p.conv_w[0].value.data()) {
    EXPECT_LE(std::abs(v), conv_bound);
  }
  for (double v : p.conv_b[0].value.data()) EXPECT_EQ(v, 0.0);
  for (double v : p.proj_b.value.data()) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, OutputShapeAndDeterminism) {
  Vocab vocab = test_vocab();
  Rng rng(3);
  const std::vector<int> sizes{2, 3, 4, 5};
  EncoderParams p = init_params(vocab, 8, sizes, 4, rng);
  for (int n : {1, 2, 7}) {
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) ids.push_back(2 + i % 6);
    Graph g1;
    Node* u1 = encode(g1, p, ids, 0.0, false, rng);
    EXPECT_EQ(u1->value.rows(), n);
    EXPECT_EQ(u1->value.cols(), kNumTags);
    Graph g2;
    Node* u2 = encode(g2, p, ids, 0.0, false, rng);
    EXPECT_EQ(u1->value.data(), u2->value.data());
  }
  Graph g;
  EXPECT_THROW(encode(g, p, std::vector<int>{}, 0.0, false, rng), InputError);
}

// With a single width-3 kernel, position i sees characters i-1..i+1 only.
TEST(Encoder, ReceptiveFieldIsLocal) {
  Vocab vocab = test_vocab();
  Rng rng(4);
  const std::vector<int> sizes{3};
  EncoderParams p = init_params(vocab, 8, sizes, 4, rng);
  std::vector<int> ids{2, 3, 4, 5, 6, 7};
  Graph g1;
  const Matrix base = encode(g1, p, ids, 0.0, false, rng)->value;
  ids[4] = 2;  // change position 4
  Graph g2;
  const Matrix changed = encode(g2, p, ids, 0.0, false, rng)->value;
  for (int i = 0; i < 6; ++i) {
    bool same = true;
    for (int t = 0; t < kNumTags; ++t) {
      same &= base(i, t) == changed(i, t);
    }
    EXPECT_EQ(same, i < 3 || i > 5) << "row " << i;
  }
}

TEST(Encoder, ZeroWeightsGiveBiasRows) {
  Vocab vocab = test_vocab();
  Rng rng(5);
  const std::vector<int> sizes{2, 3};
  EncoderParams p = init_params(vocab, 4, sizes, 3, rng);
  for (auto& w : p.conv_w) w.value.fill(0.0);
  for (auto& b : p.conv_b) b.value.fill(0.5);
  p.proj_w.value.fill(0.0);
  p.proj_b.value.fill(0.25);
  const std::vector<int> ids{2, 3, 4};
  Graph g;
  const Matrix u = encode(g, p, ids, 0.0, false, rng)->value;
  for (int i = 0; i < 3; ++i) {
    for (int t = 0; t < kNumTags; ++t) EXPECT_DOUBLE_EQ(u(i, t), 0.25);
  }
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  Vocab vocab = test_vocab();
  Rng rng(6);
  const std::vector<int> sizes{2, 3};
  EncoderParams p = init_params(vocab, 5, sizes, 3, rng);
  const std::vector<int> ids{2, 5, 3, 2};

  const auto loss = [&] {
    Graph g;
    Node* u = encode(g, p, ids, 0.0, false, rng);
    // Weighted sum so each output coordinate matters differently.
    Matrix seed(u->value.rows(), u->value.cols());
    double w = 0.3;
    for (double& v : seed.data()) v = (w += 0.7);
    double l = 0.0;
    for (std::size_t i = 0; i < seed.size(); ++i) {
      l += seed.data()[i] * u->value.data()[i];
    }
    g.backward(u, seed);
    return l;
  };
  const auto rep =
      testing::check_gradients(p.parameters(), loss, 1e-5, 40, rng);
  EXPECT_GT(rep.checked, 100);
  EXPECT_LE(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Encoder, PretrainedVectorsOverrideInitialization) {
  const auto dir = testing::make_temp_dir("pretrained");
  const auto path = dir / "vec.txt";
  // word2vec text format: count and dimension, then one word per line.
  testing::write_file(path,
                      "3 4\n"
                      "a 1 2 3 4\n"
                      "xy 9 9 9 9\n"
                      "c -1 -0.5 0.25 8\n");
  Vocab vocab = test_vocab();
  Rng rng(7);
  const std::vector<int> sizes{2};
  EncoderParams p = init_params(vocab, 4, sizes, 3, rng, path.string());
  const int a = vocab.id(U'a');
  EXPECT_EQ(p.embeddings.value(a, 0), 1.0);
  EXPECT_EQ(p.embeddings.value(a, 3), 4.0);
  const int c = vocab.id(U'c');
  EXPECT_EQ(p.embeddings.value(c, 1), -0.5);
  const int b = vocab.id(U'b');
  EXPECT_LE(std::abs(p.embeddings.value(b, 0)), std::sqrt(3.0 / 4.0));

  // The multi-character token is skipped; the random stream is untouched
  // either way, so every other parameter matches a plain initialization.
  Rng rng2(7);
  EncoderParams q = init_params(vocab, 4, sizes, 3, rng2);
  EXPECT_EQ(p.conv_w[0].value.data(), q.conv_w[0].value.data());
  EXPECT_EQ(p.proj_w.value.data(), q.proj_w.value.data());
  EXPECT_EQ(p.embeddings.value(b, 0), q.embeddings.value(b, 0));
}

TEST(Encoder, PretrainedDimensionMismatchIsRejected) {
  const auto dir = testing::make_temp_dir("pretrained_bad");
  const auto path = dir / "vec.txt";
  testing::write_file(path, "1 3\na 1 2 3\n");
  Vocab vocab = test_vocab();
  Rng rng(8);
  const std::vector<int> sizes{2};
  EXPECT_THROW(init_params(vocab, 4, sizes, 3, rng, path.string()),
               ConfigError);
}

TEST(Encoder, RejectsBadHyperParameters) {
  Vocab vocab = test_vocab();
  Rng rng(9);
  const std::vector<int> none;
  EXPECT_THROW(init_params(vocab, 4, none, 3, rng), ConfigError);
  const std::vector<int> zero{0};
  EXPECT_THROW(init_params(vocab, 4, zero, 3, rng), ConfigError);
  const std::vector<int> ok{2};
  EXPECT_THROW(init_params(vocab, 0, ok, 3, rng), ConfigError);
  EXPECT_THROW(init_params(vocab, 4, ok, 0, rng), ConfigError);
}

}  // namespace
}  // namespace segpr
