#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "segpr/corpus.hpp"
#include "segpr/errors.hpp"
#include "segpr/rng.hpp"
#include "segpr/utf8.hpp"

namespace segpr {

// Desk-scale corpus generator: a Zipf-weighted word vocabulary over a small
// CJK alphabet, sentences as independent word draws. Small corpora of this
// shape show the same OOV failure modes as real segmentation data while
// training in seconds.
struct SyntheticSpec {
  int alphabet_size = 50;
  int vocab_size = 200;
  std::vector<double> length_probs = {0.3, 0.4, 0.2, 0.1};  // word length 1..n
  double zipf_exponent = 1.0;
  int min_sentence_words = 5;
  int max_sentence_words = 15;
  int labeled_sentences = 100;
  int unlabeled_sentences = 2000;
  int test_sentences = 1000;
  double lexicon_coverage = 0.8;
  // 0: single corpus. 1/2: first or second half of a doubled word pool, so
  // two runs with the same seed get disjoint vocabularies over one alphabet
  // (the domain-adaptation setup).
  int split = 0;

  void validate() const {
    if (alphabet_size < 1) throw ConfigError("alphabet_size must be >= 1");
    if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
    if (length_probs.empty()) {
      throw ConfigError("length_probs must be nonempty");
    }
    double sum = 0.0;
    for (double p : length_probs) {
      if (p < 0.0) throw ConfigError("length_probs must be nonnegative");
      sum += p;
    }
    if (sum <= 0.0) throw ConfigError("length_probs must have positive mass");
    if (zipf_exponent < 0.0) throw ConfigError("zipf_exponent must be >= 0");
    if (min_sentence_words < 1 || max_sentence_words < min_sentence_words) {
      throw ConfigError("need 1 <= min_sentence_words <= max_sentence_words");
    }
    if (labeled_sentences < 1 || unlabeled_sentences < 1 ||
        test_sentences < 1) {
      throw ConfigError("corpus sizes must be >= 1");
    }
    if (lexicon_coverage < 0.0 || lexicon_coverage > 1.0) {
      throw ConfigError("lexicon_coverage must be in [0, 1]");
    }
    if (split < 0 || split > 2) throw ConfigError("split must be 0, 1 or 2");

    const int pool = split == 0 ? vocab_size : 2 * vocab_size;
    double capacity = 0.0;
    for (std::size_t len = 1; len <= length_probs.size(); ++len) {
      if (length_probs[len - 1] > 0.0) {
        capacity += std::pow(static_cast<double>(alphabet_size),
                             static_cast<double>(len));
      }
    }
    if (static_cast<double>(pool) > capacity) {
      throw ConfigError("infeasible spec: " + std::to_string(pool) +
                        " distinct words cannot be drawn from this alphabet "
                        "and length distribution");
    }
  }
};

struct SyntheticData {
  std::vector<std::u32string> vocabulary;            // rank order
  std::vector<std::u32string> lexicon;               // top words by rank
  std::vector<std::vector<std::u32string>> labeled;  // sentences as words
  std::vector<std::vector<std::u32string>> unlabeled;
  std::vector<std::vector<std::u32string>> test;
};

namespace detail {

inline std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = rng.next_double() * cdf.back();
  return static_cast<std::size_t>(
      std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec,
                                        std::uint64_t seed) {
  spec.validate();

  std::vector<double> length_cdf(spec.length_probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.length_probs.size(); ++i) {
    acc += spec.length_probs[i];
    length_cdf[i] = acc;
  }

  // The word pool stream depends only on the seed, so split=1 and split=2
  // carve disjoint halves out of one pool.
  Rng pool_rng = Rng::fork(seed, 2);
  const int pool_size = spec.split == 0 ? spec.vocab_size : 2 * spec.vocab_size;
  std::vector<std::u32string> pool;
  std::unordered_set<std::u32string> seen;
  while (static_cast<int>(pool.size()) < pool_size) {
    const std::size_t len = detail::sample_cdf(length_cdf, pool_rng) + 1;
    std::u32string w;
    for (std::size_t i = 0; i < len; ++i) {
      w.push_back(static_cast<char32_t>(0x4E00 + pool_rng.next_int(spec.alphabet_size)));
    }
    if (seen.insert(w).second) pool.push_back(std::move(w));
  }

  SyntheticData data;
  const int offset = spec.split == 2 ? spec.vocab_size : 0;
  data.vocabulary.assign(pool.begin() + offset,
                         pool.begin() + offset + spec.vocab_size);

  const int lex_size = static_cast<int>(
      std::llround(spec.lexicon_coverage * spec.vocab_size));
  data.lexicon.assign(data.vocabulary.begin(),
                      data.vocabulary.begin() + lex_size);

  std::vector<double> word_cdf(data.vocabulary.size());
  acc = 0.0;
  for (std::size_t r = 0; r < word_cdf.size(); ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
    word_cdf[r] = acc;
  }

  Rng text_rng = Rng::fork(seed, 3 + static_cast<std::uint64_t>(spec.split));
  const auto draw_corpus = [&](int sentences) {
    std::vector<std::vector<std::u32string>> out;
    out.reserve(sentences);
    for (int s = 0; s < sentences; ++s) {
      const int words =
          spec.min_sentence_words +
          text_rng.next_int(spec.max_sentence_words - spec.min_sentence_words + 1);
      std::vector<std::u32string> sentence;
      sentence.reserve(words);
      for (int w = 0; w < words; ++w) {
        sentence.push_back(
            data.vocabulary[detail::sample_cdf(word_cdf, text_rng)]);
      }
      out.push_back(std::move(sentence));
    }
    return out;
  };
  data.labeled = draw_corpus(spec.labeled_sentences);
  data.unlabeled = draw_corpus(spec.unlabeled_sentences);
  data.test = draw_corpus(spec.test_sentences);
  return data;
}

inline void write_segmented_file(
    const std::string& path,
    const std::vector<std::vector<std::u32string>>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const auto& sentence : sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i) out << ' ';
      out << encode_utf8(sentence[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing corpus file: " + path);
}

inline void write_raw_file(
    const std::string& path,
    const std::vector<std::vector<std::u32string>>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const auto& sentence : sentences) {
    for (const auto& word : sentence) out << encode_utf8(word);
    out << '\n';
  }
  if (!out) throw IoError("failed writing corpus file: " + path);
}

inline void write_word_file(const std::string& path,
                            const std::vector<std::u32string>& words) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write word file: " + path);
  for (const auto& w : words) out << encode_utf8(w) << '\n';
  if (!out) throw IoError("failed writing word file: " + path);
}

}  // namespace segpr
