#pragma once

#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>

#include "segpr/errors.hpp"
#include "segpr/spans.hpp"
#include "segpr/tags.hpp"
#include "segpr/utf8.hpp"

namespace segpr {

// A plain word list. Membership is exact: no normalization beyond trimming
// ASCII whitespace when loading.
class Lexicon {
 public:
  void add(std::u32string word) { words_.insert(std::move(word)); }

  bool contains(std::u32string_view word) const {
    return words_.count(std::u32string(word)) != 0;
  }

  std::size_t size() const { return words_.size(); }

  static Lexicon load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read lexicon: " + path);
    Lexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t b = 0;
      std::size_t e = line.size();
      while (b < e && is_ascii_space(line[b])) ++b;
      while (e > b && is_ascii_space(line[e - 1])) --e;
      if (b == e) continue;
      try {
        lex.add(decode_utf8(std::string_view(line).substr(b, e - b)));
      } catch (const FormatError& err) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": " +
                          err.what());
      }
    }
    return lex;
  }

 private:
  std::unordered_set<std::u32string> words_;
};

// Fraction of the words induced by (chars, tags) that are lexicon entries.
inline double lexicon_fraction(std::u32string_view chars,
                               std::span<const Tag> tags, const Lexicon& lex) {
  if (chars.size() != tags.size()) {
    throw DimensionError("lexicon_fraction: " + std::to_string(chars.size()) +
                         " characters vs " + std::to_string(tags.size()) +
                         " tags");
  }
  if (tags.empty()) return 0.0;
  const auto spans = to_spans(tags);
  int hits = 0;
  for (const Span& s : spans) {
    if (lex.contains(chars.substr(s.start, s.end - s.start))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(spans.size());
}

}  // namespace segpr
