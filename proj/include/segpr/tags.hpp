#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace segpr {

// Character position tags: Begin / Middle / End of a multi-character word,
// or Single-character word. The integer codes are fixed and used as lattice
// state indices everywhere.
enum class Tag : std::uint8_t { B = 0, M = 1, E = 2, S = 3 };

inline constexpr int kNumTags = 4;

inline constexpr Tag kAllTags[kNumTags] = {Tag::B, Tag::M, Tag::E, Tag::S};

inline constexpr int tag_code(Tag t) { return static_cast<int>(t); }

inline constexpr char tag_char(Tag t) { return "BMES"[tag_code(t)]; }

// Legal tag bigrams: B->{M,E}, M->{M,E}, E->{B,S}, S->{B,S}.
inline constexpr bool bigram_legal(Tag from, Tag to) {
  constexpr bool table[kNumTags][kNumTags] = {
      /* B */ {false, true, true, false},
      /* M */ {false, true, true, false},
      /* E */ {true, false, false, true},
      /* S */ {true, false, false, true},
  };
  return table[tag_code(from)][tag_code(to)];
}

// A sentence may start only with B or S and end only with E or S.
inline constexpr bool start_legal(Tag t) { return t == Tag::B || t == Tag::S; }
inline constexpr bool end_legal(Tag t) { return t == Tag::E || t == Tag::S; }

inline bool tags_valid(std::span<const Tag> tags) {
  if (tags.empty()) return true;
  if (!start_legal(tags.front()) || !end_legal(tags.back())) return false;
  for (std::size_t i = 0; i + 1 < tags.size(); ++i) {
    if (!bigram_legal(tags[i], tags[i + 1])) return false;
  }
  return true;
}

inline std::string tags_to_string(std::span<const Tag> tags) {
  std::string s;
  s.reserve(tags.size());
  for (Tag t : tags) s.push_back(tag_char(t));
  return s;
}

}  // namespace segpr
