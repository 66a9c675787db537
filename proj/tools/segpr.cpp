#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segpr/segpr.hpp"

namespace {

using namespace segpr;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::optional<int> s_size;
  std::optional<int> iterations;
};

Config make_config(const Overrides& o) {
  Config cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.s_size) cfg.s_size = *o.s_size;
  if (o.iterations) cfg.iterations = *o.iterations;
  cfg.validate();
  return cfg;
}

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--lambda", o.lambda, "weight of the regularization term");
  cmd->add_option("--alpha", o.alpha, "model-score weight inside phi");
  cmd->add_option("--s-size", o.s_size, "candidate set size per sentence");
  cmd->add_option("--iterations", o.iterations, "outer training iterations");
}

void write_log_file(const std::string& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write log file: " + path);
  for (const TrainRecord& r : report.records) {
    out << format_train_record(r) << '\n';
  }
}

void finish_training(Model& model, Trainer& trainer, const EvalResult& best,
                     const std::string& model_path) {
  save_model(model, model_path);
  model.vocab.save(model_path + ".vocab");
  write_log_file(model_path + ".log", trainer.report());
  std::printf("best validation fscore %.4f over %zu logged records\n",
              best.fscore, trainer.report().records.size());
  std::printf("model written to %s\n", model_path.c_str());
}

int cmd_train(const Overrides& o, const std::string& labeled_path,
              const std::string& model_path) {
  const Config cfg = make_config(o);
  auto sentences = load_labeled_corpus(labeled_path);
  auto [train, valid] = split_train_valid(std::move(sentences));

  std::vector<std::u32string> texts;
  for (const auto& s : train) texts.push_back(s.chars);
  for (const auto& s : valid) texts.push_back(s.chars);
  Vocab vocab = Vocab::build(std::span<const std::u32string>(texts),
                             cfg.min_count);

  Rng init_rng = Rng::fork(cfg.seed, 0);
  Model model = init_model(cfg, std::move(vocab), init_rng);
  Trainer trainer(model, &std::cout);
  const EvalResult best = trainer.train_supervised(train, valid);
  finish_training(model, trainer, best, model_path);
  return 0;
}

int cmd_pr_train(const Overrides& o, const std::string& labeled_path,
                 const std::string& unlabeled_path,
                 const std::string& lexicon_path,
                 const std::string& model_path) {
  const Config cfg = make_config(o);
  if (cfg.lambda > 0.0 && (unlabeled_path.empty() || lexicon_path.empty())) {
    throw ConfigError(
        "lambda > 0 requires --unlabeled and --lexicon; pass --lambda 0 to "
        "train on labeled data alone");
  }
  auto sentences = load_labeled_corpus(labeled_path);
  auto [train, valid] = split_train_valid(std::move(sentences));
  std::vector<UnlabeledSentence> unlabeled;
  if (!unlabeled_path.empty()) {
    unlabeled = load_unlabeled_corpus(unlabeled_path);
  }
  Lexicon lexicon;
  if (!lexicon_path.empty()) lexicon = Lexicon::load(lexicon_path);

  // The vocabulary also covers the unlabeled text, so target-domain
  // characters get their own embeddings instead of UNK.
  std::vector<std::u32string> texts;
  for (const auto& s : train) texts.push_back(s.chars);
  for (const auto& s : valid) texts.push_back(s.chars);
  for (const auto& s : unlabeled) texts.push_back(s.chars);
  Vocab vocab = Vocab::build(std::span<const std::u32string>(texts),
                             cfg.min_count);

  Rng init_rng = Rng::fork(cfg.seed, 0);
  Model model = init_model(cfg, std::move(vocab), init_rng);
  Trainer trainer(model, &std::cout);
  const EvalResult best = trainer.train_lupr(train, valid, unlabeled, lexicon);
  finish_training(model, trainer, best, model_path);
  return 0;
}

int cmd_segment(const std::string& model_path, const std::string& input_path,
                const std::string& output_path) {
  Model model = load_model(model_path);
  std::ifstream in(input_path, std::ios::binary);
  if (!in) throw IoError("cannot read input file: " + input_path);
  std::ofstream out_file;
  if (!output_path.empty()) {
    out_file.open(output_path, std::ios::binary);
    if (!out_file) throw IoError("cannot write output file: " + output_path);
  }
  std::ostream& out = output_path.empty() ? std::cout : out_file;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string compact;
    for (char c : line) {
      if (!is_ascii_space(c)) compact.push_back(c);
    }
    if (!compact.empty()) {
      std::u32string chars;
      try {
        chars = decode_utf8(compact);
      } catch (const FormatError& e) {
        throw FormatError(input_path + ":" + std::to_string(lineno) + ": " +
                          e.what());
      }
      const auto words = segment(model, chars);
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out << ' ';
        out << encode_utf8(words[i]);
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing segment output");
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& csv_path) {
  std::ifstream gold_in(gold_path, std::ios::binary);
  if (!gold_in) throw IoError("cannot read gold file: " + gold_path);
  std::ifstream pred_in(pred_path, std::ios::binary);
  if (!pred_in) throw IoError("cannot read predicted file: " + pred_path);

  std::vector<SentenceCounts> rows;
  long gold_total = 0;
  long pred_total = 0;
  long correct_total = 0;
  std::string gold_line;
  std::string pred_line;
  int lineno = 0;
  while (true) {
    const bool has_gold = static_cast<bool>(std::getline(gold_in, gold_line));
    const bool has_pred = static_cast<bool>(std::getline(pred_in, pred_line));
    if (!has_gold && !has_pred) break;
    ++lineno;
    if (has_gold != has_pred) {
      throw InputError("files diverge at line " + std::to_string(lineno) +
                       ": " + (has_gold ? pred_path : gold_path) +
                       " has no line there");
    }
    const auto gold_words = parse_segmented_line(gold_line);
    const auto pred_words = parse_segmented_line(pred_line);
    SentenceCounts counts;
    counts.gold = static_cast<long>(gold_words.size());
    counts.pred = static_cast<long>(pred_words.size());
    if (pred_words.empty()) {
      // An empty prediction concedes every gold word of the sentence.
      counts.correct = 0;
    } else {
      const LabeledSentence g = sentence_from_words(gold_words);
      const LabeledSentence p = sentence_from_words(pred_words);
      if (g.chars != p.chars) {
        throw InputError("line " + std::to_string(lineno) +
                         ": predicted characters do not match gold");
      }
      const std::vector<std::vector<Span>> gs{to_spans(g.tags)};
      const std::vector<std::vector<Span>> ps{to_spans(p.tags)};
      counts = sentence_counts(gs, ps)[0];
    }
    gold_total += counts.gold;
    pred_total += counts.pred;
    correct_total += counts.correct;
    rows.push_back(counts);
  }

  const double precision =
      pred_total > 0 ? static_cast<double>(correct_total) / pred_total : 0.0;
  const double recall =
      gold_total > 0 ? static_cast<double>(correct_total) / gold_total : 0.0;
  const double fscore = precision + recall > 0.0
                            ? 2.0 * precision * recall / (precision + recall)
                            : 0.0;
  std::printf("%ld gold words, %ld predicted, %ld correct\n", gold_total,
              pred_total, correct_total);
  std::printf("P=%.2f R=%.2f F=%.2f\n", precision, recall, fscore);
  std::printf("P=%.4f R=%.4f F=%.4f\n", precision, recall, fscore);

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write csv file: " + csv_path);
    write_eval_csv(csv, rows);
  }
  return 0;
}

int cmd_synth(const SyntheticSpec& spec, std::uint64_t seed,
              const std::string& labeled_path,
              const std::string& unlabeled_path, const std::string& test_path,
              const std::string& lexicon_path) {
  const SyntheticData data = generate_synthetic(spec, seed);
  write_segmented_file(labeled_path, data.labeled);
  write_raw_file(unlabeled_path, data.unlabeled);
  write_segmented_file(test_path, data.test);
  write_word_file(lexicon_path, data.lexicon);
  std::printf(
      "wrote %zu labeled, %zu unlabeled, %zu test sentences; lexicon of %zu "
      "of %zu words\n",
      data.labeled.size(), data.unlabeled.size(), data.test.size(),
      data.lexicon.size(), data.vocabulary.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "segpr: character-level word segmentation with a CNN-CRF model and "
      "lexicon-guided posterior regularization"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string labeled_path;
  std::string unlabeled_path;
  std::string lexicon_path;
  std::string model_path;
  std::string input_path;
  std::string output_path;
  std::string gold_path;
  std::string pred_path;
  std::string test_path;
  SyntheticSpec spec;
  std::uint64_t synth_seed = 1;

  CLI::App* train = app.add_subcommand(
      "train", "train a supervised model on a segmented corpus");
  add_override_flags(train, overrides);
  train->add_option("--labeled", labeled_path, "segmented training corpus")
      ->required();
  train->add_option("--model", model_path, "output model path")->required();

  CLI::App* pr_train = app.add_subcommand(
      "pr-train",
      "train with unlabeled sentences and a lexicon via posterior "
      "regularization");
  add_override_flags(pr_train, overrides);
  pr_train->add_option("--labeled", labeled_path, "segmented training corpus")
      ->required();
  pr_train->add_option("--unlabeled", unlabeled_path, "raw sentence corpus");
  pr_train->add_option("--lexicon", lexicon_path, "word list, one per line");
  pr_train->add_option("--model", model_path, "output model path")->required();

  CLI::App* segment =
      app.add_subcommand("segment", "segment raw text with a trained model");
  segment->add_option("--model", model_path, "trained model path")->required();
  segment->add_option("--input", input_path, "raw text, one sentence per line")
      ->required();
  segment->add_option("--output", output_path,
                      "output path (stdout if omitted)");

  CLI::App* eval = app.add_subcommand(
      "eval", "score a predicted segmentation against a gold one");
  eval->add_option("gold", gold_path, "gold segmented file")->required();
  eval->add_option("predicted", pred_path, "predicted segmented file")
      ->required();
  eval->add_option("--output", output_path, "per-sentence counts CSV");

  CLI::App* synth =
      app.add_subcommand("synth", "generate a synthetic segmentation corpus");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--labeled", labeled_path, "output: segmented train file")
      ->required();
  synth->add_option("--unlabeled", unlabeled_path, "output: raw text file")
      ->required();
  synth->add_option("--test", test_path, "output: segmented test file")
      ->required();
  synth->add_option("--lexicon", lexicon_path, "output: word list")
      ->required();
  synth->add_option("--vocab-size", spec.vocab_size, "distinct words");
  synth->add_option("--alphabet-size", spec.alphabet_size,
                    "distinct characters");
  synth->add_option("--coverage", spec.lexicon_coverage,
                    "fraction of the vocabulary in the lexicon");
  synth->add_option("--zipf", spec.zipf_exponent, "word frequency exponent");
  synth->add_option("--labeled-count", spec.labeled_sentences,
                    "labeled sentences");
  synth->add_option("--unlabeled-count", spec.unlabeled_sentences,
                    "unlabeled sentences");
  synth->add_option("--test-count", spec.test_sentences, "test sentences");
  synth->add_option("--min-words", spec.min_sentence_words,
                    "minimum words per sentence");
  synth->add_option("--max-words", spec.max_sentence_words,
                    "maximum words per sentence");
  synth->add_option("--split", spec.split,
                    "0 whole pool, 1/2 disjoint halves of a doubled pool");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(overrides, labeled_path, model_path);
    if (pr_train->parsed()) {
      return cmd_pr_train(overrides, labeled_path, unlabeled_path,
                          lexicon_path, model_path);
    }
    if (segment->parsed()) {
      return cmd_segment(model_path, input_path, output_path);
    }
    if (eval->parsed()) return cmd_eval(gold_path, pred_path, output_path);
    if (synth->parsed()) {
      return cmd_synth(spec, synth_seed, labeled_path, unlabeled_path,
                       test_path, lexicon_path);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
