#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "segpr/graph.hpp"
#include "segpr/matrix.hpp"

namespace segpr {

struct RmsPropConfig {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping entirely, in which
  // case the update is the textbook rule with no extra arithmetic.
  double clip_norm = 5.0;
};

// RMSProp over a fixed parameter list. Holds one squared-gradient
// accumulator per parameter, aligned by index.
class RmsProp {
 public:
  RmsProp(std::vector<Parameter*> params, RmsPropConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    accum_.reserve(params_.size());
    for (const Parameter* p : params_) {
      accum_.emplace_back(p->value.rows(), p->value.cols());
    }
  }

  // Applies one update from the gradients currently stored in the
  // parameters, then zeroes them. Throws TrainError on non-finite
  // gradients so divergence surfaces with a diagnostic instead of NaN
  // parameters.
  void step() {
    for (const Parameter* p : params_) {
      if (!p->grad.all_finite()) {
        throw TrainError("non-finite gradient in parameter '" + p->name + "'");
      }
    }
    double scale = 1.0;
    if (cfg_.clip_norm > 0.0) {
      double sq = 0.0;
      for (const Parameter* p : params_) sq += p->grad.squared_norm();
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
    }
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      Parameter& p = *params_[pi];
      Matrix& acc = accum_[pi];
      for (std::size_t i = 0; i < p.value.data().size(); ++i) {
        const double g = scale * p.grad.data()[i];
        double& a = acc.data()[i];
        a = cfg_.decay * a + (1.0 - cfg_.decay) * g * g;
        p.value.data()[i] -= cfg_.learning_rate * g / std::sqrt(a + cfg_.epsilon);
      }
      p.zero_grad();
    }
  }

  void zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
  }

  const RmsPropConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> accum_;
  RmsPropConfig cfg_;
};

}  // namespace segpr
