#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "causarc/matrix.hpp"

namespace causarc {

// Two optimizer groups: backbone-analogue parameters (embeddings, encoder and
// decoder stacks) vs newly added heads (fusion, latent MLPs, classifier).
enum class ParamGroup { kBase, kNew };

struct Param {
  std::string name;
  ParamGroup group = ParamGroup::kNew;
  Matrix value;
  Matrix grad;  // same shape as value, accumulated by Tape::backward

  void zero_grad() { grad = Matrix(value.rows, value.cols); }
};

struct Var {
  int i = -1;
  bool valid() const { return i >= 0; }
};

// Reverse-mode tape over dense double matrices. A tape is built per forward
// pass; backward() walks the nodes in reverse creation order and accumulates
// into each bound Param's grad. Constructing with track=false skips all
// backward bookkeeping (inference mode).
//
// Broadcast rule for add/sub/mul: the second operand may match the first's
// shape or be 1xC (per-column), Rx1 (per-row) or 1x1 (scalar).
class Tape {
 public:
  explicit Tape(bool track = true) : track_(track) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Matrix v);
  Var param(Param& p);  // cached: same Param returns the same node

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var log_(Var a);
  Var clamp(Var a, double lo, double hi);
  Var softmax_rows(Var a, const Matrix* add_mask = nullptr);
  Var log_softmax_rows(Var a, const Matrix* add_mask = nullptr);
  Var layer_norm(Var x, Var gamma, Var beta);  // gamma, beta are 1 x cols
  Var concat_cols(Var a, Var b);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_rows(Var a, int r0, int r1);  // half-open
  Var slice_cols(Var a, int c0, int c1);
  Var mean_rows(Var a);  // n x c -> 1 x c
  Var sum_all(Var a);    // -> 1 x 1
  Var mean_all(Var a);
  Var transpose(Var a);
  Var rows_of(Var table, std::vector<int> ids);  // embedding-style gather
  Var pick(Var a, int r, int c);                 // -> 1 x 1
  // -(sum_i w_i * log_probs[i, targets[i]]) / sum_i w_i
  Var masked_mean_nll(Var log_probs, std::vector<int> targets, std::vector<double> weights);

  void backward(Var loss);  // loss must be 1 x 1

  const Matrix& val(Var v) const;
  const Matrix& grad_of(Var v) const;  // valid after backward
  size_t node_count() const { return nodes_.size(); }
  bool tracking() const { return track_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Param* bound = nullptr;
    std::function<void()> back;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Param*, int> param_cache_;
  bool track_;

  int push(Matrix v, bool needs_grad);
  Node& node(Var v) { return nodes_[v.i]; }
  const Node& node(Var v) const { return nodes_[v.i]; }
  bool wants(Var v) const { return track_ && nodes_[v.i].needs_grad; }
  Matrix& g(int i) { return nodes_[i].grad; }
  const Matrix& v(int i) const { return nodes_[i].value; }
};

}  // namespace causarc
