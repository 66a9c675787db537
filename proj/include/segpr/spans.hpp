#pragma once

#include <span>
#include <vector>

#include "segpr/tags.hpp"

namespace segpr {

// Half-open word span [start, end) in character indices. The spans of one
// segmentation tile the sentence without gaps or overlap.
struct Span {
  int start = 0;
  int end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// Converts a tag sequence into word spans. Valid BMES sequences map to
// their words; invalid ones are repaired by the single convention used
// throughout: a word boundary falls after position i iff tags[i] is E or S
// or i is the last position. On valid sequences this is exactly the
// inverse of the BMES encoding.
inline std::vector<Span> to_spans(std::span<const Tag> tags) {
  std::vector<Span> spans;
  int start = 0;
  const int n = static_cast<int>(tags.size());
  for (int i = 0; i < n; ++i) {
    if (tags[i] == Tag::E || tags[i] == Tag::S || i == n - 1) {
      spans.push_back({start, i + 1});
      start = i + 1;
    }
  }
  return spans;
}

}  // namespace segpr
