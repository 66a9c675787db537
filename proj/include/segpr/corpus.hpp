#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "segpr/errors.hpp"
#include "segpr/rng.hpp"
#include "segpr/spans.hpp"
#include "segpr/tags.hpp"
#include "segpr/utf8.hpp"

namespace segpr {

struct LabeledSentence {
  std::u32string chars;
  std::vector<Tag> tags;
};

struct UnlabeledSentence {
  std::u32string chars;
};

// Splits one line of a segmented corpus into words. Words are separated by
// ASCII whitespace (spaces in the bakeoff files, tabs tolerated); empty
// tokens are dropped.
inline std::vector<std::u32string> parse_segmented_line(std::string_view line) {
  std::vector<std::u32string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_ascii_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_ascii_space(line[j])) ++j;
    if (j > i) words.push_back(decode_utf8(line.substr(i, j - i)));
    i = j;
  }
  return words;
}

// BMES encoding of a word list: a 1-character word becomes S, a k-character
// word becomes B M^(k-2) E.
inline std::vector<Tag> words_to_tags(std::span<const std::u32string> words) {
  std::vector<Tag> tags;
  for (const auto& w : words) {
    if (w.empty()) throw FormatError("words_to_tags: empty word");
    if (w.size() == 1) {
      tags.push_back(Tag::S);
    } else {
      tags.push_back(Tag::B);
      for (std::size_t i = 1; i + 1 < w.size(); ++i) tags.push_back(Tag::M);
      tags.push_back(Tag::E);
    }
  }
  return tags;
}

// Inverse of words_to_tags on valid sequences; invalid sequences are
// repaired by the boundary convention of to_spans.
inline std::vector<std::u32string> tags_to_words(std::u32string_view chars,
                                                 std::span<const Tag> tags) {
  if (chars.size() != tags.size()) {
    throw FormatError("tags_to_words: " + std::to_string(chars.size()) +
                      " characters vs " + std::to_string(tags.size()) +
                      " tags");
  }
  std::vector<std::u32string> words;
  for (const Span& s : to_spans(tags)) {
    words.emplace_back(chars.substr(s.start, s.end - s.start));
  }
  return words;
}

inline LabeledSentence sentence_from_words(
    std::span<const std::u32string> words) {
  LabeledSentence s;
  for (const auto& w : words) s.chars += w;
  s.tags = words_to_tags(words);
  return s;
}

// Character vocabulary with two reserved ids: PAD (0, window padding) and
// UNK (1, fallback for unseen characters). Real characters get dense ids
// from 2 upward in order of first appearance, which keeps builds
// deterministic.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  static Vocab build(std::span<const std::u32string> texts, int min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    std::unordered_map<char32_t, long> counts;
    std::vector<char32_t> order;
    for (const auto& text : texts) {
      for (char32_t c : text) {
        if (++counts[c] == 1) order.push_back(c);
      }
    }
    Vocab v;
    for (char32_t c : order) {
      const long n = counts[c];
      if (n >= min_count) v.add(c, n);
    }
    return v;
  }

  static Vocab build(std::span<const LabeledSentence> sentences,
                     int min_count) {
    std::vector<std::u32string> texts;
    texts.reserve(sentences.size());
    for (const auto& s : sentences) texts.push_back(s.chars);
    return build(std::span<const std::u32string>(texts), min_count);
  }

  int id(char32_t c) const {
    auto it = to_id_.find(c);
    return it == to_id_.end() ? kUnk : it->second;
  }

  bool contains(char32_t c) const { return to_id_.count(c) != 0; }

  // Total id count including PAD and UNK.
  int size() const { return static_cast<int>(chars_.size()) + 2; }

  std::vector<int> encode(std::u32string_view text) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char32_t c : text) ids.push_back(id(c));
    return ids;
  }

  char32_t char_at(int id) const { return chars_[id - 2]; }
  long count_at(int id) const { return counts_[id - 2]; }

  void write(std::ostream& out) const {
    out << "#segpr-vocab v1\n";
    for (std::size_t i = 0; i < chars_.size(); ++i) {
      out << encode_utf8(std::u32string_view(&chars_[i], 1)) << '\t' << (i + 2)
          << '\t' << counts_[i] << '\n';
    }
  }

  static Vocab read(std::istream& in, const std::string& context) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("#segpr-vocab v1", 0) != 0) {
      throw FormatError("missing '#segpr-vocab v1' header in " + context);
    }
    Vocab v;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) {
        throw FormatError(context + ":" + std::to_string(lineno) +
                          ": expected char<TAB>id<TAB>count");
      }
      const std::u32string c = decode_utf8(line.substr(0, t1));
      if (c.size() != 1) {
        throw FormatError(context + ":" + std::to_string(lineno) +
                          ": entry is not a single character");
      }
      const int id = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
      const long n = std::stol(line.substr(t2 + 1));
      if (id != v.size()) {
        throw FormatError(context + ":" + std::to_string(lineno) +
                          ": ids must be dense and in order");
      }
      v.add(c[0], n);
    }
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocab file: " + path);
    write(out);
    if (!out) throw IoError("failed writing vocab file: " + path);
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read vocab file: " + path);
    return read(in, path);
  }

 private:
  void add(char32_t c, long count) {
    to_id_.emplace(c, size());
    chars_.push_back(c);
    counts_.push_back(count);
  }

  std::unordered_map<char32_t, int> to_id_;
  std::vector<char32_t> chars_;
  std::vector<long> counts_;
};

// Holds out the final floor(0.1*n) sentences, in file order, as validation.
inline std::pair<std::vector<LabeledSentence>, std::vector<LabeledSentence>>
split_train_valid(std::vector<LabeledSentence> sentences) {
  const std::size_t n = sentences.size();
  if (n < 10) {
    throw ConfigError("need at least 10 sentences to split train/validation, got " +
                      std::to_string(n));
  }
  const std::size_t n_valid = n / 10;
  std::vector<LabeledSentence> valid(sentences.end() - n_valid, sentences.end());
  sentences.resize(n - n_valid);
  return {std::move(sentences), std::move(valid)};
}

// Uniform sample without replacement of floor(ratio*n) sentences with the
// gold tags stripped. The sample keeps file order and is deterministic for
// a given seed.
inline std::vector<UnlabeledSentence> sample_unlabeled(
    std::span<const LabeledSentence> sentences, double ratio, Rng& rng) {
  if (ratio <= 0.0 || ratio > 1.0) {
    throw ConfigError("unlabeled sample ratio must be in (0, 1]");
  }
  const std::size_t n = sentences.size();
  const std::size_t k = static_cast<std::size_t>(ratio * static_cast<double>(n));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<UnlabeledSentence> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back({sentences[i].chars});
  return out;
}

// One segmented sentence per line; blank lines are skipped.
inline std::vector<LabeledSentence> load_labeled_corpus(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read labeled corpus: " + path);
  std::vector<LabeledSentence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    try {
      const auto words = parse_segmented_line(line);
      if (words.empty()) continue;
      out.push_back(sentence_from_words(words));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// One raw sentence per line; ASCII whitespace inside a line is dropped so
// a segmented file fed here degrades to its raw text.
inline std::vector<UnlabeledSentence> load_unlabeled_corpus(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read unlabeled corpus: " + path);
  std::vector<UnlabeledSentence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string compact;
    compact.reserve(line.size());
    for (char c : line) {
      if (!is_ascii_space(c)) compact.push_back(c);
    }
    if (compact.empty()) continue;
    try {
      out.push_back({decode_utf8(compact)});
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace segpr
