#pragma once

// Reverse-mode automatic differentiation on a per-run tape.
//
// The op vocabulary is intentionally closed: dense affine maps, the gate
// nonlinearities, hinge penalties, reductions, and a softmax used for soft
// selection over discrete candidates. Every op has an exactly known adjoint
// and the whole set is covered by finite-difference property tests.
//
// Tapes are rebuilt per training step (define-by-run). A tape is owned by one
// thread; tensors are plain values and may be moved across threads freely.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsopt/errors.hpp"

namespace dsopt::ad {

class Tape;

// Dense row-major array of 64-bit reals. `node`/`tape_id` identify the tape
// position this value was recorded at; a detached tensor has node == -1.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  int node = -1;
  std::uint64_t tape_id = 0;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shp, std::vector<double> vals);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> vals);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> vals);
  static Tensor zeros(std::vector<std::size_t> shp);
  static Tensor full(std::vector<std::size_t> shp, double v);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  bool attached() const { return node >= 0; }
  bool finite() const;

  // Value of a single-element tensor.
  double item() const;

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

enum class OpKind : std::uint8_t {
  leaf,
  matmul,
  add,
  mul,         // elementwise
  tanh_fn,
  sigmoid,
  relu,
  softplus,
  concat,
  slice,
  mean,
  square,
  scale,
  hinge,       // max(0, x); subgradient at 0 is 0, same convention as relu
  softmax,
};

const char* op_name(OpKind k);

// Thrown when an op is recorded outside any TapeScope.
struct NoActiveTapeError : std::logic_error {
  NoActiveTapeError();
};

// Per-node gradients produced by Tape::backward. Nodes that are detached or
// unreachable from the loss hold exact zeros.
class Gradients {
 public:
  Gradients(std::uint64_t tape_id, std::vector<std::vector<std::size_t>> shapes,
            std::vector<std::vector<double>> grads)
      : tape_id_(tape_id), shapes_(std::move(shapes)), grads_(std::move(grads)) {}

  std::uint64_t tape_id() const { return tape_id_; }
  std::size_t size() const { return grads_.size(); }

  const std::vector<double>& at_node(int node) const;
  // Gradient of the loss w.r.t. `t`, shaped like `t`.
  Tensor at(const Tensor& t) const;
  bool contains(const Tensor& t) const;

 private:
  std::uint64_t tape_id_;
  std::vector<std::vector<std::size_t>> shapes_;
  std::vector<std::vector<double>> grads_;
};

class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return nodes_.size(); }

  // Attaches `parameter` in place as a gradient-requiring leaf. Idempotent
  // for a tensor already watched on this tape.
  void watch(Tensor& parameter);

  // Attaches a constant (no-gradient) leaf and returns its node id.
  int lift(const Tensor& constant);

  // Reverse pass from a scalar loss recorded on this tape. Gradients
  // accumulate additively across fan-out.
  Gradients backward(const Tensor& loss) const;

  // Recomputes every node from the leaves in recording order. Used to check
  // the bit-identical replay invariant.
  std::vector<std::vector<double>> replay_forward() const;

  const std::vector<double>& node_values(int node) const;
  const std::vector<std::size_t>& node_shape(int node) const;
  OpKind node_op(int node) const;
  const std::vector<int>& node_inputs(int node) const;

 private:
  friend class TapeScope;
  friend Tensor record_op(OpKind op, const std::vector<const Tensor*>& inputs,
                          double scale_factor, std::size_t slice_start,
                          std::size_t slice_len);

  struct Node {
    OpKind op;
    std::vector<int> inputs;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    double scale_factor = 1.0;   // scale
    std::size_t slice_start = 0; // slice
    std::size_t slice_len = 0;   // slice
    bool requires_grad = false;
  };

  int push_node(Node n);

  std::uint64_t id_;
  std::vector<Node> nodes_;
};

// RAII activation of a tape on the current thread. Ops record onto the
// innermost active tape.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  static Tape* active();

 private:
  Tape* previous_;
};

// ---------------------------------------------------------------------------
// Recorded ops. Inputs detached from the active tape are lifted as constants.
// ---------------------------------------------------------------------------

// {m,k}x{k,n} -> {m,n}; {m,k}x{k} -> {m}; {k}x{k,n} -> {n}
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts);  // rank <= 1 parts -> rank 1
Tensor slice(const Tensor& x, std::size_t start, std::size_t len);  // rank 1
Tensor mean(const Tensor& x);    // -> scalar (shape {})
Tensor square(const Tensor& x);
Tensor scale(const Tensor& x, double c);
Tensor hinge(const Tensor& x);
Tensor softmax(const Tensor& x);  // rank 1

// Compositions of the primitives above (no new adjoints).
Tensor sub(const Tensor& a, const Tensor& b);
Tensor add_const(const Tensor& a, double c);
Tensor dot(const Tensor& a, const Tensor& b);     // scalar
Tensor sum(const Tensor& x);                      // scalar
Tensor as_scalar(const Tensor& x);                // numel()==1 -> shape {}

// Max over all parameter entries of |analytic - numeric| / max(1, |analytic|,
// |numeric|), numeric via central differences of `fn` with the given step.
// `fn` must rebuild and return a scalar loss from the current parameter
// values; it is re-evaluated with each entry perturbed by +-step. Exact kink
// points of relu/hinge are excluded by precondition (the subgradient there is
// defined as 0, which central differences cannot see).
double grad_check(const std::function<Tensor()>& fn,
                  const std::vector<Tensor*>& params, double step);

}  // namespace dsopt::ad
