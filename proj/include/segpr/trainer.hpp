#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segpr/config.hpp"
#include "segpr/corpus.hpp"
#include "segpr/crf.hpp"
#include "segpr/encoder.hpp"
#include "segpr/errors.hpp"
#include "segpr/eval.hpp"
#include "segpr/graph.hpp"
#include "segpr/lexicon.hpp"
#include "segpr/model.hpp"
#include "segpr/optimizer.hpp"
#include "segpr/rng.hpp"

namespace segpr {

// One candidate segmentation of an unlabeled sentence together with its
// guidance score and its weight in the target distribution.
struct QCandidate {
  std::vector<Tag> tags;
  double phi = 0.0;
  double prob = 0.0;
};

// The target distribution for one unlabeled sentence: a softmax over the
// s_size best candidates scored under the frozen model of iteration t.
struct QDistribution {
  std::size_t sentence = 0;  // index into the unlabeled pool
  int iteration = 0;
  std::vector<QCandidate> candidates;
};

// Guidance score of one candidate: the fraction of its words found in the
// lexicon plus alpha times its sequence score under the frozen model.
// Dropout is always off here.
inline double phi(Model& theta_t, const std::u32string& chars,
                  std::span<const Tag> tags, const Lexicon& lex,
                  double alpha) {
  const Matrix u = unary_scores(theta_t, theta_t.vocab.encode(chars));
  return lexicon_fraction(chars, tags, lex) +
         alpha * sequence_score(u, theta_t.transitions.value, tags);
}

// The s_size best constrained decodings under the current model, dropout
// off. Every returned candidate is a well-formed segmentation.
inline std::vector<ScoredSequence> build_candidates(Model& m,
                                                    const std::u32string& chars,
                                                    int s_size) {
  return kbest(unary_scores(m, m.vocab.encode(chars)), m.transitions.value,
               s_size, true);
}

// Softmax with max subtraction.
inline std::vector<double> q_tilde(std::span<const double> phis) {
  if (phis.empty()) throw InputError("q_tilde: empty candidate set");
  const double m = *std::max_element(phis.begin(), phis.end());
  std::vector<double> probs(phis.size());
  double z = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    probs[i] = std::exp(phis[i] - m);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

inline QDistribution build_q_distribution(Model& theta_t,
                                          const std::u32string& chars,
                                          const Lexicon& lex, double alpha,
                                          int s_size, std::size_t sentence,
                                          int iteration) {
  QDistribution q;
  q.sentence = sentence;
  q.iteration = iteration;
  std::vector<double> phis;
  for (ScoredSequence& c : build_candidates(theta_t, chars, s_size)) {
    const double frac = lexicon_fraction(chars, c.tags, lex);
    phis.push_back(frac + alpha * c.score);
    q.candidates.push_back({std::move(c.tags), phis.back(), 0.0});
  }
  const auto probs = q_tilde(phis);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    q.candidates[i].prob = probs[i];
  }
  return q;
}

// Adds `scale` times the gradient of sum_c w_c * (-log p(c | chars)) to the
// model's gradient buffers and returns the unscaled loss value.
inline double accumulate_expected_nll(
    Model& m, const std::u32string& chars,
    std::span<const std::vector<Tag>> candidates,
    std::span<const double> weights, double scale, bool training, Rng& rng) {
  Graph g;
  Node* u = encode(g, m.encoder, m.vocab.encode(chars), m.config.dropout,
                   training, rng);
  CrfGrad cg = expected_nll_grad(u->value, m.transitions.value, candidates,
                                 weights, m.config.constrained_training);
  for (double& v : cg.d_unary.data()) v *= scale;
  g.backward(u, cg.d_unary);
  m.transitions.grad.add_scaled(cg.d_trans, scale);
  return cg.loss;
}

// Summed negative log-likelihood of a labeled batch; gradients accumulate
// into the model's buffers without an optimizer step.
inline double supervised_batch_loss(Model& m,
                                    std::span<const LabeledSentence> batch,
                                    bool training, Rng& rng) {
  if (batch.empty()) throw InputError("supervised_batch_loss: empty batch");
  double loss = 0.0;
  for (const LabeledSentence& s : batch) {
    const std::vector<Tag> gold = s.tags;
    const double w = 1.0;
    loss += accumulate_expected_nll(
        m, s.chars, std::span<const std::vector<Tag>>(&gold, 1),
        std::span<const double>(&w, 1), 1.0, training, rng);
  }
  return loss;
}

// Summed expected negative log-likelihood under the given Q distributions;
// gradients are accumulated scaled by `scale` (lambda during training).
// Returns the unscaled loss sum.
inline double pr_batch_loss(Model& m, std::span<const std::u32string> chars,
                            std::span<const QDistribution> qs, double scale,
                            bool training, Rng& rng) {
  if (chars.size() != qs.size()) {
    throw DimensionError("pr_batch_loss: " + std::to_string(chars.size()) +
                         " sentences vs " + std::to_string(qs.size()) +
                         " distributions");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    std::vector<std::vector<Tag>> cands;
    std::vector<double> probs;
    for (const QCandidate& c : qs[i].candidates) {
      if (c.tags.size() != chars[i].size()) {
        throw ConfigError(
            "pr_batch_loss: candidate length does not match its sentence; "
            "the Q distribution was built for different input");
      }
      cands.push_back(c.tags);
      probs.push_back(c.prob);
    }
    loss += accumulate_expected_nll(m, chars[i], cands, probs, scale,
                                    training, rng);
  }
  return loss;
}

struct TrainRecord {
  int iter = 0;
  double loss = 0.0;     // mean labeled NLL per labeled sentence
  double pr_loss = 0.0;  // mean expected NLL per unlabeled sentence
  EvalResult eval;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  double best_f = 0.0;
};

inline std::string format_train_record(const TrainRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "iter=%d loss=%.4f pr_loss=%.4f P=%.4f R=%.4f F=%.4f", r.iter,
                r.loss, r.pr_loss, r.eval.precision, r.eval.recall,
                r.eval.fscore);
  return buf;
}

// Drives supervised and lexicon-guided training over one model. All
// randomness (shuffles, dropout) comes from a stream forked off the config
// seed, so runs are reproducible end to end.
class Trainer {
 public:
  explicit Trainer(Model& model, std::ostream* log = nullptr)
      : model_(model),
        optimizer_(model.parameters(),
                   RmsPropConfig{model.config.learning_rate,
                                 model.config.rms_decay,
                                 model.config.rms_epsilon,
                                 model.config.clip_norm}),
        rng_(Rng::fork(model.config.seed, 1)),
        log_(log) {
    model.config.validate();
  }

  const TrainReport& report() const { return report_; }

  EvalResult evaluate(std::span<const LabeledSentence> data) {
    std::vector<std::vector<Span>> gold;
    std::vector<std::vector<Span>> pred;
    for (const LabeledSentence& s : data) {
      gold.push_back(to_spans(s.tags));
      pred.push_back(to_spans(predict_tags(model_, s.chars)));
    }
    return score(gold, pred);
  }

  // One optimizer step on summed labeled NLL plus lambda times the summed
  // expected NLL of the unlabeled batch. With lambda=0 or an empty batch
  // the regularization machinery is skipped entirely. The reported pr_loss
  // is the unscaled expected NLL sum.
  struct StepStats {
    double labeled_loss = 0.0;
    double pr_loss = 0.0;
  };

  StepStats step(std::span<const LabeledSentence> labeled,
                 std::span<const std::u32string> unlabeled_chars,
                 std::span<const QDistribution> qs, double lambda) {
    StepStats st;
    st.labeled_loss = supervised_batch_loss(model_, labeled, true, rng_);
    if (lambda > 0.0 && !qs.empty()) {
      st.pr_loss =
          pr_batch_loss(model_, unlabeled_chars, qs, lambda, true, rng_);
    }
    optimizer_.step();
    return st;
  }

  // Minimizes the supervised loss for config.epochs epochs and keeps the
  // parameters scoring the best validation F. Returns that best result.
  EvalResult train_supervised(std::span<const LabeledSentence> train,
                              std::span<const LabeledSentence> valid) {
    if (train.empty()) throw TrainError("training set is empty");
    EvalResult best = evaluate(valid);
    std::vector<Matrix> best_values = snapshot_values(model_);
    for (int epoch = 1; epoch <= model_.config.epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      const double mean_loss = supervised_epoch(train);
      TrainRecord r;
      r.iter = next_iter_++;
      r.loss = mean_loss;
      r.eval = evaluate(valid);
      r.seconds = elapsed(t0);
      emit(r);
      // Without validation data there is nothing to select on; keep the
      // latest parameters.
      if (r.eval.fscore > best.fscore || valid.empty()) {
        best = r.eval;
        best_values = snapshot_values(model_);
      }
    }
    if (model_.config.epochs > 0) restore_values(model_, best_values);
    report_.best_f = best.fscore;
    return best;
  }

  // The full loop: a supervised phase, then `iterations` rounds that each
  // freeze the model, rebuild the target distributions over the unlabeled
  // pool, and train on the combined objective. Each round keeps its best
  // validation parameters; the returned model is the best across all
  // rounds and the supervised phase. Optimizer state carries through.
  EvalResult train_lupr(std::span<const LabeledSentence> train,
                        std::span<const LabeledSentence> valid,
                        std::span<const UnlabeledSentence> unlabeled,
                        const Lexicon& lexicon) {
    const Config& cfg = model_.config;
    if (cfg.lambda > 0.0 && unlabeled.empty()) {
      throw ConfigError("lambda > 0 requires unlabeled sentences");
    }

    EvalResult global_best = train_supervised(train, valid);
    std::vector<Matrix> global_values = snapshot_values(model_);
    int stale = 0;

    for (int t = 1; t <= cfg.iterations; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      const bool use_pr = cfg.lambda > 0.0 && !unlabeled.empty();

      std::vector<QDistribution> qs;
      if (use_pr) {
        qs.reserve(unlabeled.size());
        for (std::size_t i = 0; i < unlabeled.size(); ++i) {
          qs.push_back(build_q_distribution(model_, unlabeled[i].chars,
                                            lexicon, cfg.alpha, cfg.s_size, i,
                                            t));
        }
      }

      EvalResult iter_best;
      iter_best.fscore = -1.0;
      std::vector<Matrix> iter_values;
      double loss_sum = 0.0;
      double pr_sum = 0.0;
      long labeled_seen = 0;
      long unlabeled_seen = 0;
      for (int e = 0; e < cfg.epochs_per_iteration; ++e) {
        if (use_pr) {
          mixed_epoch(train, unlabeled, qs, loss_sum, pr_sum, labeled_seen,
                      unlabeled_seen);
        } else {
          loss_sum += supervised_epoch(train) * static_cast<double>(train.size());
          labeled_seen += static_cast<long>(train.size());
        }
        const EvalResult ev = evaluate(valid);
        if (ev.fscore > iter_best.fscore || valid.empty()) {
          iter_best = ev;
          iter_values = snapshot_values(model_);
        }
      }
      restore_values(model_, iter_values);

      TrainRecord r;
      r.iter = next_iter_++;
      r.loss = labeled_seen > 0 ? loss_sum / labeled_seen : 0.0;
      r.pr_loss = unlabeled_seen > 0 ? pr_sum / unlabeled_seen : 0.0;
      r.eval = iter_best;
      r.seconds = elapsed(t0);
      emit(r);

      if (iter_best.fscore > global_best.fscore || valid.empty()) {
        global_best = iter_best;
        global_values = snapshot_values(model_);
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }

    restore_values(model_, global_values);
    report_.best_f = global_best.fscore;
    return global_best;
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }

  void emit(const TrainRecord& r) {
    report_.records.push_back(r);
    if (log_) *log_ << format_train_record(r) << '\n' << std::flush;
  }

  // One pass over the labeled data in shuffled batches. Returns the mean
  // NLL per sentence.
  double supervised_epoch(std::span<const LabeledSentence> train) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng_.shuffle(order);
    double loss = 0.0;
    const std::size_t bs = static_cast<std::size_t>(model_.config.batch_size);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<LabeledSentence> batch;
      for (std::size_t i = b; i < std::min(b + bs, order.size()); ++i) {
        batch.push_back(train[order[i]]);
      }
      loss += step(batch, {}, {}, 0.0).labeled_loss;
    }
    return loss / static_cast<double>(train.size());
  }

  // One pass over the unlabeled pool; each step pairs an unlabeled batch
  // with the next labeled batch from an endlessly reshuffled stream.
  void mixed_epoch(std::span<const LabeledSentence> train,
                   std::span<const UnlabeledSentence> unlabeled,
                   std::span<const QDistribution> qs, double& loss_sum,
                   double& pr_sum, long& labeled_seen, long& unlabeled_seen) {
    std::vector<std::size_t> order(unlabeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng_.shuffle(order);
    const std::size_t bs = static_cast<std::size_t>(model_.config.batch_size);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<std::u32string> chars;
      std::vector<QDistribution> qbatch;
      for (std::size_t i = b; i < std::min(b + bs, order.size()); ++i) {
        chars.push_back(unlabeled[order[i]].chars);
        qbatch.push_back(qs[order[i]]);
      }
      const auto labeled = next_labeled_batch(train, bs);
      const StepStats st = step(labeled, chars, qbatch, model_.config.lambda);
      loss_sum += st.labeled_loss;
      pr_sum += st.pr_loss;
      labeled_seen += static_cast<long>(labeled.size());
      unlabeled_seen += static_cast<long>(chars.size());
    }
  }

  std::vector<LabeledSentence> next_labeled_batch(
      std::span<const LabeledSentence> train, std::size_t bs) {
    if (labeled_order_.size() != train.size()) {
      labeled_order_.resize(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) labeled_order_[i] = i;
      labeled_pos_ = labeled_order_.size();
    }
    std::vector<LabeledSentence> batch;
    while (batch.size() < bs) {
      if (labeled_pos_ == labeled_order_.size()) {
        rng_.shuffle(labeled_order_);
        labeled_pos_ = 0;
      }
      batch.push_back(train[labeled_order_[labeled_pos_++]]);
    }
    return batch;
  }

  Model& model_;
  RmsProp optimizer_;
  Rng rng_;
  std::ostream* log_;
  TrainReport report_;
  int next_iter_ = 1;
  std::vector<std::size_t> labeled_order_;
  std::size_t labeled_pos_ = 0;
};

}  // namespace segpr
