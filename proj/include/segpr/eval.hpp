#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "segpr/errors.hpp"
#include "segpr/lexicon.hpp"
#include "segpr/spans.hpp"

namespace segpr {

struct SentenceCounts {
  long gold = 0;
  long pred = 0;
  long correct = 0;
};

struct OovResult {
  double recall = 1.0;   // 1.0 by convention when there are no OOV words
  bool vacuous = true;
  long oov_gold = 0;
  long oov_correct = 0;
};

struct EvalResult {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  long gold_words = 0;
  long predicted_words = 0;
  long correct_words = 0;
  std::optional<OovResult> oov;
};

namespace detail {

inline long matching_spans(std::span<const Span> gold,
                           std::span<const Span> pred) {
  long hits = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < gold.size() && j < pred.size()) {
    if (gold[i] == pred[j]) {
      ++hits;
      ++i;
      ++j;
    } else if (gold[i].start < pred[j].start ||
               (gold[i].start == pred[j].start && gold[i].end < pred[j].end)) {
      ++i;
    } else {
      ++j;
    }
  }
  return hits;
}

inline void check_aligned(std::span<const std::vector<Span>> gold,
                          std::span<const std::vector<Span>> pred) {
  if (gold.size() != pred.size()) {
    throw InputError("eval: " + std::to_string(gold.size()) +
                     " gold sentences vs " + std::to_string(pred.size()) +
                     " predicted");
  }
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const int ng = gold[s].empty() ? 0 : gold[s].back().end;
    const int np = pred[s].empty() ? 0 : pred[s].back().end;
    if (ng != np) {
      throw InputError("eval: sentence " + std::to_string(s) + " covers " +
                       std::to_string(ng) + " gold characters vs " +
                       std::to_string(np) + " predicted");
    }
  }
}

}  // namespace detail

inline std::vector<SentenceCounts> sentence_counts(
    std::span<const std::vector<Span>> gold,
    std::span<const std::vector<Span>> pred) {
  detail::check_aligned(gold, pred);
  std::vector<SentenceCounts> out(gold.size());
  for (std::size_t s = 0; s < gold.size(); ++s) {
    out[s].gold = static_cast<long>(gold[s].size());
    out[s].pred = static_cast<long>(pred[s].size());
    out[s].correct = detail::matching_spans(gold[s], pred[s]);
  }
  return out;
}

// Micro-averaged word precision/recall/F over a corpus: counts are summed
// across sentences before any ratio is taken.
inline EvalResult score(std::span<const std::vector<Span>> gold,
                        std::span<const std::vector<Span>> pred) {
  EvalResult r;
  for (const SentenceCounts& c : sentence_counts(gold, pred)) {
    r.gold_words += c.gold;
    r.predicted_words += c.pred;
    r.correct_words += c.correct;
  }
  if (r.predicted_words > 0) {
    r.precision = static_cast<double>(r.correct_words) / r.predicted_words;
  }
  if (r.gold_words > 0) {
    r.recall = static_cast<double>(r.correct_words) / r.gold_words;
  }
  if (r.precision + r.recall > 0.0) {
    r.fscore = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

// Recall over the gold words that are missing from the reference word set
// (typically the training vocabulary): of the out-of-vocabulary gold words,
// how many did the prediction recover exactly?
inline OovResult oov_recall(std::span<const std::vector<Span>> gold,
                            std::span<const std::vector<Span>> pred,
                            std::span<const std::u32string> texts,
                            const Lexicon& reference) {
  detail::check_aligned(gold, pred);
  if (texts.size() != gold.size()) {
    throw InputError("eval: " + std::to_string(texts.size()) +
                     " texts vs " + std::to_string(gold.size()) +
                     " gold sentences");
  }
  OovResult r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::size_t j = 0;
    for (const Span& g : gold[s]) {
      const std::u32string_view word =
          std::u32string_view(texts[s]).substr(g.start, g.end - g.start);
      if (reference.contains(word)) continue;
      ++r.oov_gold;
      while (j < pred[s].size() && pred[s][j].start < g.start) ++j;
      if (j < pred[s].size() && pred[s][j] == g) ++r.oov_correct;
    }
  }
  if (r.oov_gold > 0) {
    r.vacuous = false;
    r.recall = static_cast<double>(r.oov_correct) / r.oov_gold;
  }
  return r;
}

inline void write_eval_csv(std::ostream& out,
                           std::span<const SentenceCounts> counts) {
  out << "sentence_id,gold_count,pred_count,correct\n";
  for (std::size_t s = 0; s < counts.size(); ++s) {
    out << s << ',' << counts[s].gold << ',' << counts[s].pred << ','
        << counts[s].correct << '\n';
  }
}

}  // namespace segpr
