#pragma once

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segpr/matrix.hpp"
#include "segpr/rng.hpp"

namespace segpr {

// A trainable weight. The value persists across training steps; the grad
// buffer is filled by Graph::backward and consumed by the optimizer.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)),
        grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

// One vertex of a computation graph: the forward value plus a gradient
// buffer of the same shape. Nodes are created and owned by a Graph and
// referenced by pointer; the creation order is a topological order.
struct Node {
  Matrix value;
  Matrix grad;
  std::function<void()> backward;  // accumulates into the parents' grads
  Matrix* param_grad = nullptr;    // set when this leaf is bound to a Parameter
  int index = 0;
};

// Reverse-mode differentiation over matrix primitives. A Graph is built
// fresh for every forward pass (typically one per sentence); backward may
// be run once and accumulates leaf gradients into any bound Parameters.
class Graph {
 public:
  Node* constant(Matrix v) { return make(std::move(v)); }

  // Leaf whose gradient flows back into p.grad when backward runs.
  Node* leaf(Parameter& p) {
    Node* n = make(p.value);
    n->param_grad = &p.grad;
    bound_.push_back(n);
    return n;
  }

  // c = a * b
  Node* matmul(Node* a, Node* b) {
    Node* n = make(segpr::matmul(a->value, b->value));
    n->backward = [a, b, n] {
      add_matmul_nt(a->grad, n->grad, b->value);
      add_matmul_tn(b->grad, a->value, n->grad);
    };
    return n;
  }

  // y = x + 1*b with b a 1xM row broadcast over the rows of x.
  Node* add_row(Node* x, Node* b) {
    if (b->value.rows() != 1 || b->value.cols() != x->value.cols()) {
      throw DimensionError("add_row: bias must be 1x" +
                           std::to_string(x->value.cols()));
    }
    Matrix out = x->value;
    for (int i = 0; i < out.rows(); ++i) {
      auto r = out.row(i);
      const auto br = b->value.row(0);
      for (int j = 0; j < out.cols(); ++j) r[j] += br[j];
    }
    Node* n = make(std::move(out));
    n->backward = [x, b, n] {
      x->grad.add_scaled(n->grad, 1.0);
      auto bg = b->grad.row(0);
      for (int i = 0; i < n->grad.rows(); ++i) {
        const auto gr = n->grad.row(i);
        for (int j = 0; j < n->grad.cols(); ++j) bg[j] += gr[j];
      }
    };
    return n;
  }

  // y = w*x + b in the row-major batch form x*w + b. x: NxK, w: KxM, b: 1xM.
  Node* affine(Node* x, Node* w, Node* b) { return add_row(matmul(x, w), b); }

  // Elementwise rectifier max(0, x). The subderivative at 0 is taken as 0.
  Node* relu(Node* x) {
    Matrix out = x->value;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    Node* n = make(std::move(out));
    n->backward = [x, n] {
      for (std::size_t i = 0; i < n->grad.data().size(); ++i) {
        if (x->value.data()[i] > 0.0) x->grad.data()[i] += n->grad.data()[i];
      }
    };
    return n;
  }

  // Stacks table rows in the given order. Duplicate indices are allowed;
  // their gradients accumulate into the same table row.
  Node* gather_rows(Node* table, std::span<const int> indices) {
    for (int id : indices) {
      if (id < 0 || id >= table->value.rows()) {
        throw IndexError("gather_rows: index " + std::to_string(id) +
                         " out of range for " +
                         std::to_string(table->value.rows()) + " rows");
      }
    }
    Matrix out(static_cast<int>(indices.size()), table->value.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = table->value.row(indices[i]);
      auto dst = out.row(static_cast<int>(i));
      for (int j = 0; j < out.cols(); ++j) dst[j] = src[j];
    }
    Node* n = make(std::move(out));
    std::vector<int> ids(indices.begin(), indices.end());
    n->backward = [table, n, ids = std::move(ids)] {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        auto dst = table->grad.row(ids[i]);
        const auto src = n->grad.row(static_cast<int>(i));
        for (int j = 0; j < n->grad.cols(); ++j) dst[j] += src[j];
      }
    };
    return n;
  }

  // Horizontal concatenation; all parts must have the same row count.
  Node* concat_cols(std::span<Node* const> parts) {
    if (parts.empty()) throw InputError("concat_cols: no parts");
    const int rows = parts[0]->value.rows();
    int cols = 0;
    for (Node* p : parts) {
      if (p->value.rows() != rows) {
        throw DimensionError("concat_cols: row counts differ");
      }
      cols += p->value.cols();
    }
    Matrix out(rows, cols);
    int off = 0;
    for (Node* p : parts) {
      for (int i = 0; i < rows; ++i) {
        const auto src = p->value.row(i);
        auto dst = out.row(i);
        for (int j = 0; j < p->value.cols(); ++j) dst[off + j] = src[j];
      }
      off += p->value.cols();
    }
    Node* n = make(std::move(out));
    std::vector<Node*> ps(parts.begin(), parts.end());
    n->backward = [n, ps = std::move(ps)] {
      int off2 = 0;
      for (Node* p : ps) {
        for (int i = 0; i < p->grad.rows(); ++i) {
          auto dst = p->grad.row(i);
          const auto src = n->grad.row(i);
          for (int j = 0; j < p->grad.cols(); ++j) dst[j] += src[off2 + j];
        }
        off2 += p->grad.cols();
      }
    };
    return n;
  }

  // Inverted dropout: while training, zero each element with probability
  // `rate` and scale the survivors by 1/(1-rate) so inference needs no
  // rescaling. Outside training (or at rate 0) this is the identity and
  // consumes no randomness.
  Node* dropout(Node* x, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) {
      throw ConfigError("dropout rate must be in [0, 1)");
    }
    if (!training || rate == 0.0) return x;
    const double scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x->value.size());
    for (double& m : mask) m = rng.next_double() < rate ? 0.0 : scale;
    Matrix out = x->value;
    for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] *= mask[i];
    Node* n = make(std::move(out));
    n->backward = [x, n, mask = std::move(mask)] {
      for (std::size_t i = 0; i < mask.size(); ++i) {
        x->grad.data()[i] += mask[i] * n->grad.data()[i];
      }
    };
    return n;
  }

  // Sum of all entries as a 1x1 node.
  Node* sum(Node* x) {
    double s = 0.0;
    for (double v : x->value.data()) s += v;
    Matrix out(1, 1);
    out(0, 0) = s;
    Node* n = make(std::move(out));
    n->backward = [x, n] {
      const double g = n->grad(0, 0);
      for (double& v : x->grad.data()) v += g;
    };
    return n;
  }

  // Backpropagates from `from` seeded with d(loss)/d(from) and flushes leaf
  // gradients into their bound Parameters. One backward pass per graph.
  void backward(Node* from, const Matrix& seed) {
    if (ran_backward_) throw Error("backward already ran on this graph");
    ran_backward_ = true;
    if (!from->grad.same_shape(seed)) {
      throw DimensionError("backward: seed shape mismatch");
    }
    from->grad.add_scaled(seed, 1.0);
    for (int i = from->index; i >= 0; --i) {
      if (nodes_[i].backward) nodes_[i].backward();
    }
    for (Node* leaf : bound_) {
      if (leaf->index <= from->index) leaf->param_grad->add_scaled(leaf->grad, 1.0);
    }
  }

  // Backward from a scalar loss node, seeded with 1.
  void backward(Node* root) {
    if (root->value.rows() != 1 || root->value.cols() != 1) {
      throw DimensionError("backward: root must be 1x1");
    }
    backward(root, Matrix(1, 1, 1.0));
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  Node* make(Matrix v) {
    Node& n = nodes_.emplace_back();
    n.grad = Matrix(v.rows(), v.cols());
    n.value = std::move(v);
    n.index = static_cast<int>(nodes_.size()) - 1;
    return &n;
  }

  std::deque<Node> nodes_;
  std::vector<Node*> bound_;
  bool ran_backward_ = false;
};

}  // namespace segpr
