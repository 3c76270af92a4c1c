#include "dsopt/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace dsopt::ad {

namespace {

std::atomic<std::uint64_t> g_tape_counter{1};
thread_local Tape* g_active_tape = nullptr;

std::string shape_str(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const std::string& expected,
                              const std::vector<std::size_t>& actual) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch, expected " +
                              expected + ", got " + shape_str(actual));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

std::size_t shape_numel(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shp, std::vector<double> vals)
    : shape(std::move(shp)), values(std::move(vals)) {
  if (values.size() != shape_numel(shape)) {
    throw std::invalid_argument("Tensor: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vector(std::vector<double> vals) {
  const std::size_t n = vals.size();
  return Tensor({n}, std::move(vals));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> vals) {
  return Tensor({rows, cols}, std::move(vals));
}

Tensor Tensor::zeros(std::vector<std::size_t> shp) {
  std::vector<double> v(shape_numel(shp), 0.0);
  return Tensor(std::move(shp), std::move(v));
}

Tensor Tensor::full(std::vector<std::size_t> shp, double fill) {
  std::vector<double> v(shape_numel(shp), fill);
  return Tensor(std::move(shp), std::move(v));
}

std::size_t Tensor::numel() const { return values.size(); }

bool Tensor::finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

double Tensor::item() const {
  if (values.size() != 1) {
    throw std::invalid_argument("Tensor::item: tensor has " +
                                std::to_string(values.size()) + " elements");
  }
  return values[0];
}

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::mul: return "mul";
    case OpKind::tanh_fn: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::softplus: return "softplus";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::mean: return "mean";
    case OpKind::square: return "square";
    case OpKind::scale: return "scale";
    case OpKind::hinge: return "hinge";
    case OpKind::softmax: return "softmax";
  }
  return "?";
}

NoActiveTapeError::NoActiveTapeError()
    : std::logic_error("recording requested outside a TapeScope") {}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

const std::vector<double>& Gradients::at_node(int node) const {
  if (node < 0 || static_cast<std::size_t>(node) >= grads_.size()) {
    throw std::invalid_argument("Gradients::at_node: node " + std::to_string(node) +
                                " not on tape");
  }
  return grads_[static_cast<std::size_t>(node)];
}

Tensor Gradients::at(const Tensor& t) const {
  if (!contains(t)) {
    throw std::invalid_argument("Gradients::at: tensor is not attached to this tape");
  }
  return Tensor(shapes_[static_cast<std::size_t>(t.node)], grads_[static_cast<std::size_t>(t.node)]);
}

bool Gradients::contains(const Tensor& t) const {
  return t.attached() && t.tape_id == tape_id_ &&
         static_cast<std::size_t>(t.node) < grads_.size();
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tape::Tape() : id_(g_tape_counter.fetch_add(1)) {}

int Tape::push_node(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::watch(Tensor& parameter) {
  if (parameter.attached() && parameter.tape_id == id_) {
    auto& node = nodes_[static_cast<std::size_t>(parameter.node)];
    if (node.op != OpKind::leaf) {
      throw std::invalid_argument("Tape::watch: tensor is a recorded op output");
    }
    node.requires_grad = true;
    return;
  }
  Node n;
  n.op = OpKind::leaf;
  n.shape = parameter.shape;
  n.values = parameter.values;
  n.requires_grad = true;
  parameter.node = push_node(std::move(n));
  parameter.tape_id = id_;
}

int Tape::lift(const Tensor& constant) {
  Node n;
  n.op = OpKind::leaf;
  n.shape = constant.shape;
  n.values = constant.values;
  n.requires_grad = false;
  return push_node(std::move(n));
}

const std::vector<double>& Tape::node_values(int node) const {
  return nodes_.at(static_cast<std::size_t>(node)).values;
}

const std::vector<std::size_t>& Tape::node_shape(int node) const {
  return nodes_.at(static_cast<std::size_t>(node)).shape;
}

OpKind Tape::node_op(int node) const {
  return nodes_.at(static_cast<std::size_t>(node)).op;
}

const std::vector<int>& Tape::node_inputs(int node) const {
  return nodes_.at(static_cast<std::size_t>(node)).inputs;
}

// ---------------------------------------------------------------------------
// TapeScope
// ---------------------------------------------------------------------------

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }
Tape* TapeScope::active() { return g_active_tape; }

// ---------------------------------------------------------------------------
// Forward kernels (shared by record and replay)
// ---------------------------------------------------------------------------

namespace {

struct NodeView {
  const std::vector<std::size_t>* shape;
  const std::vector<double>* values;
};

void matmul_shape(const char* op, const std::vector<std::size_t>& a,
                  const std::vector<std::size_t>& b, std::vector<std::size_t>& out) {
  if (a.size() == 2 && b.size() == 2 && a[1] == b[0]) {
    out = {a[0], b[1]};
  } else if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) {
    out = {a[0]};
  } else if (a.size() == 1 && b.size() == 2 && a[0] == b[0]) {
    out = {b[1]};
  } else {
    shape_error(op, shape_str(a) + " x {conforming}", b);
  }
}

void matmul_forward(const NodeView& a, const NodeView& b, std::vector<double>& out) {
  const auto& sa = *a.shape;
  const auto& sb = *b.shape;
  const std::size_t m = sa.size() == 2 ? sa[0] : 1;
  const std::size_t k = sa.size() == 2 ? sa[1] : sa[0];
  const std::size_t n = sb.size() == 2 ? sb[1] : 1;
  out.assign(m * n, 0.0);
  const double* av = a.values->data();
  const double* bv = b.values->data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = av[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bv + kk * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

void compute_forward(OpKind op, const std::vector<NodeView>& in, double scale_factor,
                     std::size_t slice_start, std::size_t slice_len,
                     std::vector<double>& out) {
  switch (op) {
    case OpKind::leaf:
      throw std::logic_error("compute_forward on leaf");
    case OpKind::matmul:
      matmul_forward(in[0], in[1], out);
      break;
    case OpKind::add: {
      const auto& a = *in[0].values;
      const auto& b = *in[1].values;
      out.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
      break;
    }
    case OpKind::mul: {
      const auto& a = *in[0].values;
      const auto& b = *in[1].values;
      out.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
      break;
    }
    case OpKind::tanh_fn: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    }
    case OpKind::sigmoid: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_sigmoid(x[i]);
      break;
    }
    case OpKind::relu:
    case OpKind::hinge: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    }
    case OpKind::softplus: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_softplus(x[i]);
      break;
    }
    case OpKind::concat: {
      out.clear();
      for (const auto& part : in) {
        out.insert(out.end(), part.values->begin(), part.values->end());
      }
      break;
    }
    case OpKind::slice: {
      const auto& x = *in[0].values;
      out.assign(x.begin() + static_cast<std::ptrdiff_t>(slice_start),
                 x.begin() + static_cast<std::ptrdiff_t>(slice_start + slice_len));
      break;
    }
    case OpKind::mean: {
      const auto& x = *in[0].values;
      double acc = 0.0;
      for (double v : x) acc += v;
      out.assign(1, acc / static_cast<double>(x.size()));
      break;
    }
    case OpKind::square: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
      break;
    }
    case OpKind::scale: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_factor * x[i];
      break;
    }
    case OpKind::softmax: {
      const auto& x = *in[0].values;
      out.resize(x.size());
      double mx = x[0];
      for (double v : x) mx = std::max(mx, v);
      double denom = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - mx);
        denom += out[i];
      }
      for (double& v : out) v /= denom;
      break;
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Recording
// ---------------------------------------------------------------------------

Tensor record_op(OpKind op, const std::vector<const Tensor*>& inputs,
                 double scale_factor, std::size_t slice_start, std::size_t slice_len) {
  Tape* tape = TapeScope::active();
  if (tape == nullptr) throw NoActiveTapeError();

  std::vector<int> input_nodes;
  input_nodes.reserve(inputs.size());
  bool requires_grad = false;
  for (const Tensor* t : inputs) {
    int node = (t->attached() && t->tape_id == tape->id()) ? t->node : tape->lift(*t);
    input_nodes.push_back(node);
    requires_grad = requires_grad ||
                    tape->nodes_[static_cast<std::size_t>(node)].requires_grad;
  }

  // Shape checks + output shape.
  std::vector<std::size_t> out_shape;
  const auto& shp = [&](std::size_t i) -> const std::vector<std::size_t>& {
    return tape->nodes_[static_cast<std::size_t>(input_nodes[i])].shape;
  };
  switch (op) {
    case OpKind::matmul:
      matmul_shape("matmul", shp(0), shp(1), out_shape);
      break;
    case OpKind::add:
    case OpKind::mul:
      if (shp(0) != shp(1)) shape_error(op_name(op), shape_str(shp(0)), shp(1));
      out_shape = shp(0);
      break;
    case OpKind::concat: {
      std::size_t total = 0;
      for (std::size_t i = 0; i < input_nodes.size(); ++i) {
        if (shp(i).size() > 1) shape_error("concat", "rank <= 1 parts", shp(i));
        total += shape_numel(shp(i));
      }
      out_shape = {total};
      break;
    }
    case OpKind::slice: {
      if (shp(0).size() != 1) shape_error("slice", "rank 1", shp(0));
      if (slice_start + slice_len > shp(0)[0] || slice_len == 0) {
        throw std::invalid_argument("slice: range [" + std::to_string(slice_start) +
                                    "," + std::to_string(slice_start + slice_len) +
                                    ") out of bounds for length " +
                                    std::to_string(shp(0)[0]));
      }
      out_shape = {slice_len};
      break;
    }
    case OpKind::mean:
      if (shape_numel(shp(0)) == 0) {
        throw std::invalid_argument("mean: empty input");
      }
      out_shape = {};
      break;
    case OpKind::softmax:
      if (shp(0).size() != 1 || shp(0)[0] == 0) shape_error("softmax", "rank 1, nonempty", shp(0));
      out_shape = shp(0);
      break;
    default:
      out_shape = shp(0);
      break;
  }

  std::vector<NodeView> views;
  views.reserve(input_nodes.size());
  for (int n : input_nodes) {
    const auto& nd = tape->nodes_[static_cast<std::size_t>(n)];
    views.push_back({&nd.shape, &nd.values});
  }

  Tape::Node node;
  node.op = op;
  node.inputs = std::move(input_nodes);
  node.shape = out_shape;
  node.scale_factor = scale_factor;
  node.slice_start = slice_start;
  node.slice_len = slice_len;
  node.requires_grad = requires_grad;
  compute_forward(op, views, scale_factor, slice_start, slice_len, node.values);

  Tensor out(std::move(out_shape), node.values);
  out.node = tape->push_node(std::move(node));
  out.tape_id = tape->id();
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) { return record_op(OpKind::matmul, {&a, &b}, 1.0, 0, 0); }
Tensor add(const Tensor& a, const Tensor& b) { return record_op(OpKind::add, {&a, &b}, 1.0, 0, 0); }
Tensor mul(const Tensor& a, const Tensor& b) { return record_op(OpKind::mul, {&a, &b}, 1.0, 0, 0); }
Tensor tanh(const Tensor& x) { return record_op(OpKind::tanh_fn, {&x}, 1.0, 0, 0); }
Tensor sigmoid(const Tensor& x) { return record_op(OpKind::sigmoid, {&x}, 1.0, 0, 0); }
Tensor relu(const Tensor& x) { return record_op(OpKind::relu, {&x}, 1.0, 0, 0); }
Tensor softplus(const Tensor& x) { return record_op(OpKind::softplus, {&x}, 1.0, 0, 0); }

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) ptrs.push_back(&p);
  return record_op(OpKind::concat, ptrs, 1.0, 0, 0);
}

Tensor slice(const Tensor& x, std::size_t start, std::size_t len) {
  return record_op(OpKind::slice, {&x}, 1.0, start, len);
}

Tensor mean(const Tensor& x) { return record_op(OpKind::mean, {&x}, 1.0, 0, 0); }
Tensor square(const Tensor& x) { return record_op(OpKind::square, {&x}, 1.0, 0, 0); }
Tensor scale(const Tensor& x, double c) { return record_op(OpKind::scale, {&x}, c, 0, 0); }
Tensor hinge(const Tensor& x) { return record_op(OpKind::hinge, {&x}, 1.0, 0, 0); }
Tensor softmax(const Tensor& x) { return record_op(OpKind::softmax, {&x}, 1.0, 0, 0); }

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor add_const(const Tensor& a, double c) {
  return add(a, Tensor::full(a.shape, c));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  Tensor prod = mul(a, b);
  return scale(mean(prod), static_cast<double>(prod.numel()));
}

Tensor sum(const Tensor& x) {
  return scale(mean(x), static_cast<double>(x.numel()));
}

Tensor as_scalar(const Tensor& x) {
  if (x.numel() != 1) {
    throw std::invalid_argument("as_scalar: tensor has " + std::to_string(x.numel()) +
                                " elements");
  }
  return x.rank() == 0 ? x : mean(x);
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

Gradients Tape::backward(const Tensor& loss) const {
  if (!loss.attached() || loss.tape_id != id_) {
    throw std::invalid_argument("backward: loss is not recorded on this tape");
  }
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape));
  }

  std::vector<std::vector<double>> grads(nodes_.size());
  std::vector<std::vector<std::size_t>> shapes(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    grads[i].assign(nodes_[i].values.size(), 0.0);
    shapes[i] = nodes_[i].shape;
  }
  grads[static_cast<std::size_t>(loss.node)][0] = 1.0;

  for (int ni = loss.node; ni >= 0; --ni) {
    const Node& node = nodes_[static_cast<std::size_t>(ni)];
    if (node.op == OpKind::leaf || !node.requires_grad) continue;
    const std::vector<double>& gy = grads[static_cast<std::size_t>(ni)];

    auto in_vals = [&](std::size_t i) -> const std::vector<double>& {
      return nodes_[static_cast<std::size_t>(node.inputs[i])].values;
    };
    auto in_grad = [&](std::size_t i) -> std::vector<double>& {
      return grads[static_cast<std::size_t>(node.inputs[i])];
    };
    auto in_needs = [&](std::size_t i) {
      return nodes_[static_cast<std::size_t>(node.inputs[i])].requires_grad;
    };

    switch (node.op) {
      case OpKind::leaf:
        break;
      case OpKind::matmul: {
        const auto& sa = nodes_[static_cast<std::size_t>(node.inputs[0])].shape;
        const auto& sb = nodes_[static_cast<std::size_t>(node.inputs[1])].shape;
        const std::size_t m = sa.size() == 2 ? sa[0] : 1;
        const std::size_t k = sa.size() == 2 ? sa[1] : sa[0];
        const std::size_t n = sb.size() == 2 ? sb[1] : 1;
        const auto& av = in_vals(0);
        const auto& bv = in_vals(1);
        if (in_needs(0)) {
          auto& ga = in_grad(0);  // dA = dC * B^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += gy[i * n + j] * bv[kk * n + j];
              ga[i * k + kk] += acc;
            }
        }
        if (in_needs(1)) {
          auto& gb = in_grad(1);  // dB = A^T * dC
          for (std::size_t kk = 0; kk < k; ++kk)
            for (std::size_t j = 0; j < n; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i) acc += av[i * k + kk] * gy[i * n + j];
              gb[kk * n + j] += acc;
            }
        }
        break;
      }
      case OpKind::add:
        for (std::size_t s = 0; s < 2; ++s) {
          if (!in_needs(s)) continue;
          auto& g = in_grad(s);
          for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
        }
        break;
      case OpKind::mul:
        for (std::size_t s = 0; s < 2; ++s) {
          if (!in_needs(s)) continue;
          auto& g = in_grad(s);
          const auto& other = in_vals(1 - s);
          for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * other[i];
        }
        break;
      case OpKind::tanh_fn: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        for (std::size_t i = 0; i < gy.size(); ++i)
          g[i] += gy[i] * (1.0 - node.values[i] * node.values[i]);
        break;
      }
      case OpKind::sigmoid: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        for (std::size_t i = 0; i < gy.size(); ++i)
          g[i] += gy[i] * node.values[i] * (1.0 - node.values[i]);
        break;
      }
      case OpKind::relu:
      case OpKind::hinge: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        const auto& x = in_vals(0);
        for (std::size_t i = 0; i < gy.size(); ++i)
          if (x[i] > 0.0) g[i] += gy[i];
        break;
      }
      case OpKind::softplus: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        const auto& x = in_vals(0);
        for (std::size_t i = 0; i < gy.size(); ++i)
          g[i] += gy[i] * stable_sigmoid(x[i]);
        break;
      }
      case OpKind::concat: {
        std::size_t offset = 0;
        for (std::size_t s = 0; s < node.inputs.size(); ++s) {
          const std::size_t len = in_vals(s).size();
          if (in_needs(s)) {
            auto& g = in_grad(s);
            for (std::size_t i = 0; i < len; ++i) g[i] += gy[offset + i];
          }
          offset += len;
        }
        break;
      }
      case OpKind::slice: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        for (std::size_t i = 0; i < node.slice_len; ++i)
          g[node.slice_start + i] += gy[i];
        break;
      }
      case OpKind::mean: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        const double w = gy[0] / static_cast<double>(g.size());
        for (double& v : g) v += w;
        break;
      }
      case OpKind::square: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        const auto& x = in_vals(0);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * 2.0 * x[i];
        break;
      }
      case OpKind::scale: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * node.scale_factor;
        break;
      }
      case OpKind::softmax: {
        if (!in_needs(0)) break;
        auto& g = in_grad(0);
        const auto& y = node.values;
        double dyy = 0.0;
        for (std::size_t i = 0; i < gy.size(); ++i) dyy += gy[i] * y[i];
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += y[i] * (gy[i] - dyy);
        break;
      }
    }
  }

  return Gradients(id_, std::move(shapes), std::move(grads));
}

std::vector<std::vector<double>> Tape::replay_forward() const {
  std::vector<std::vector<double>> vals(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (node.op == OpKind::leaf) {
      vals[i] = node.values;
      continue;
    }
    std::vector<NodeView> views;
    views.reserve(node.inputs.size());
    for (int n : node.inputs) {
      views.push_back({&nodes_[static_cast<std::size_t>(n)].shape,
                       &vals[static_cast<std::size_t>(n)]});
    }
    compute_forward(node.op, views, node.scale_factor, node.slice_start,
                    node.slice_len, vals[i]);
  }
  return vals;
}

// ---------------------------------------------------------------------------
// grad_check
// ---------------------------------------------------------------------------

double grad_check(const std::function<Tensor()>& fn,
                  const std::vector<Tensor*>& params, double step) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be > 0");

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    for (Tensor* p : params) tape.watch(*p);
    Tensor loss = fn();
    if (loss.numel() != 1) {
      throw std::invalid_argument("grad_check: function must return a scalar");
    }
    if (!loss.finite()) {
      throw NumericError("grad_check: non-finite function value");
    }
    Gradients grads = tape.backward(loss);
    for (Tensor* p : params) analytic.push_back(grads.at_node(p->node));
  }

  auto eval = [&]() {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = fn();
    const double v = loss.item();
    if (!std::isfinite(v)) {
      throw NumericError("grad_check: non-finite function value at perturbed point");
    }
    return v;
  };

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + step;
      const double up = eval();
      p.values[i] = saved - step;
      const double down = eval();
      p.values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace dsopt::ad
