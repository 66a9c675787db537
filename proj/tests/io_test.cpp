#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "test_util.hpp"

namespace segpr {
namespace {

Config small_config() {
  Config cfg;
  cfg.embedding_dim = 6;
  cfg.kernel_sizes = {2, 3};
  cfg.kernels_per_size = 4;
  cfg.epochs = 2;
  return cfg;
}

Model small_model(std::uint64_t seed) {
  const std::vector<std::u32string> texts{U"你好世界", U"天气很好"};
  Vocab vocab = Vocab::build(texts, 1);
  Config cfg = small_config();
  cfg.seed = seed;
  Rng rng = Rng::fork(seed, 0);
  return init_model(cfg, std::move(vocab), rng);
}

TEST(Io, ConfigTextRoundTripsExactly) {
  Config cfg;
  cfg.seed = 77;
  cfg.learning_rate = 0.1 + 0.2;  // needs all 17 digits
  cfg.dropout = 1.0 / 3.0;
  cfg.kernel_sizes = {1, 3, 7};
  cfg.lambda = 0.125;
  cfg.constrained_training = true;
  const Config back = config_from_text(config_to_text(cfg));
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(back.learning_rate, cfg.learning_rate);
}

TEST(Io, ConfigParsingHandlesCommentsAndErrors) {
  const Config cfg = config_from_text(
      "# comment\n\n  epochs = 5 \nlambda=0.25\nkernel_sizes=2,4\n");
  EXPECT_EQ(cfg.epochs, 5);
  EXPECT_DOUBLE_EQ(cfg.lambda, 0.25);
  EXPECT_EQ(cfg.kernel_sizes, (std::vector<int>{2, 4}));
  EXPECT_THROW(config_from_text("no_such_key=1\n"), ConfigError);
  EXPECT_THROW(config_from_text("epochs\n"), ConfigError);
  EXPECT_THROW(config_from_text("epochs=x\n"), ConfigError);
}

TEST(Io, ConfigValidationRejectsBadRanges) {
  Config cfg;
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = Config{};
  cfg.lambda = -0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = Config{};
  cfg.s_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = Config{};
  cfg.kernel_sizes = {};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = Config{};
  cfg.epochs = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Io, ModelRoundTripsBitExactly) {
  const auto dir = testing::make_temp_dir("model_io");
  const std::string path = (dir / "m.bin").string();
  Model m = small_model(3);
  save_model(m, path);
  Model back = load_model(path);

  const auto ps = m.parameters();
  const auto qs = back.parameters();
  ASSERT_EQ(ps.size(), qs.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps[i]->name, qs[i]->name);
    ASSERT_TRUE(ps[i]->value.same_shape(qs[i]->value));
    EXPECT_EQ(0, std::memcmp(ps[i]->value.data().data(),
                             qs[i]->value.data().data(),
                             ps[i]->value.size() * sizeof(double)));
  }
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.vocab.size(), m.vocab.size());

  // Same scores from the reloaded model, bit for bit.
  const auto ids = m.vocab.encode(U"你好世界");
  const Matrix u1 = unary_scores(m, ids);
  const Matrix u2 = unary_scores(back, ids);
  EXPECT_EQ(u1.data(), u2.data());

  // Saving the reloaded model reproduces the file byte for byte.
  const std::string path2 = (dir / "m2.bin").string();
  save_model(back, path2);
  EXPECT_EQ(testing::slurp(path), testing::slurp(path2));
}

TEST(Io, ModelRejectsCorruptFiles) {
  const auto dir = testing::make_temp_dir("model_bad");
  const std::string path = (dir / "m.bin").string();
  Model m = small_model(4);
  save_model(m, path);

  std::string bytes = testing::slurp(path);
  {
    std::string bad = bytes;
    bad[0] = 'X';
    testing::write_file(dir / "magic.bin", bad);
    EXPECT_THROW(load_model((dir / "magic.bin").string()), FormatError);
  }
  {
    const std::string bad = bytes.substr(0, bytes.size() / 2);
    testing::write_file(dir / "trunc.bin", bad);
    EXPECT_THROW(load_model((dir / "trunc.bin").string()), FormatError);
  }
  EXPECT_THROW(load_model((dir / "missing.bin").string()), IoError);
}

TEST(Io, ModelFileEmbedsItsVocabulary) {
  const auto dir = testing::make_temp_dir("model_vocab");
  const std::string path = (dir / "m.bin").string();
  Model m = small_model(5);
  save_model(m, path);
  Model back = load_model(path);
  for (char32_t c : std::u32string(U"你好世界天气很")) {
    EXPECT_EQ(back.vocab.id(c), m.vocab.id(c));
  }
  EXPECT_EQ(back.vocab.id(U'猫'), Vocab::kUnk);
}

TEST(Io, InitIsDeterministicPerSeed) {
  Model a = small_model(9);
  Model b = small_model(9);
  Model c = small_model(10);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  bool all_equal_ab = true;
  bool all_equal_ac = true;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    all_equal_ab &= pa[i]->value.data() == pb[i]->value.data();
    all_equal_ac &= pa[i]->value.data() == pc[i]->value.data();
  }
  EXPECT_TRUE(all_equal_ab);
  EXPECT_FALSE(all_equal_ac);
}

TEST(Io, SavedVocabSidecarReloads) {
  const auto dir = testing::make_temp_dir("vocab_io");
  const std::vector<std::u32string> texts{U"你好", U"好好"};
  const Vocab v = Vocab::build(texts, 1);
  const std::string path = (dir / "v.vocab").string();
  v.save(path);
  const Vocab w = Vocab::load(path);
  EXPECT_EQ(w.size(), v.size());
  EXPECT_EQ(w.id(U'好'), v.id(U'好'));
  EXPECT_EQ(w.count_at(w.id(U'好')), 3);

  testing::write_file(dir / "bad.vocab", "not a vocab\n");
  EXPECT_THROW(Vocab::load((dir / "bad.vocab").string()), FormatError);
}

}  // namespace
}  // namespace segpr
