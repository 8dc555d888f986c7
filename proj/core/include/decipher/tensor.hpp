#pragma once

// Dense tensors with reverse-mode automatic differentiation on a define-by-run
// tape, plus the Adam optimizer and a finite-difference gradient checker.
//
// Scalar type is a template parameter: float is the training precision,
// double is used for gradient checking. A GraphT installs itself as the
// thread-local current graph on construction; ops record backward closures
// onto it while it is alive. Leaf tensors with requires_grad accumulate
// gradients across backward calls (the caller zeroes them); intermediate
// gradients are reset by each backward pass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "decipher/errors.hpp"
#include "decipher/rng.hpp"

namespace decipher {

template <class S>
struct TensorT;

template <class S>
using TensorPtrT = std::shared_ptr<TensorT<S>>;

template <class S>
struct TensorT {
  std::vector<int> shape;  // row-major; product(shape) == value.size()
  std::vector<S> value;
  std::vector<S> grad;  // same length as value when participating in autodiff
  bool requires_grad = false;

  std::int64_t numel() const { return static_cast<std::int64_t>(value.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  S item() const { return value.empty() ? S(0) : value[0]; }

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), S(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }
};

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

inline std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

template <class S>
TensorPtrT<S> make_tensor(std::vector<int> shape, std::vector<S> data,
                          bool requires_grad = false) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
    throw ContractError("tensor: shape " + shape_str(shape) + " does not match " +
                        std::to_string(data.size()) + " values");
  }
  auto t = std::make_shared<TensorT<S>>();
  t->shape = std::move(shape);
  t->value = std::move(data);
  t->requires_grad = requires_grad;
  if (requires_grad) t->ensure_grad();
  return t;
}

template <class S>
TensorPtrT<S> zeros(std::vector<int> shape, bool requires_grad = false) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  return make_tensor<S>(std::move(shape), std::vector<S>(n, S(0)), requires_grad);
}

template <class S>
TensorPtrT<S> scalar_tensor(S v, bool requires_grad = false) {
  return make_tensor<S>({1}, {v}, requires_grad);
}

// Leaf parameter with uniform(-range, range) init.
template <class S>
TensorPtrT<S> uniform_param(std::vector<int> shape, Rng& rng, double range) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  std::vector<S> data(n);
  for (auto& x : data) x = static_cast<S>(rng.uniform(-range, range));
  return make_tensor<S>(std::move(shape), std::move(data), true);
}

template <class S>
void debug_check_finite(const TensorPtrT<S>& t, const char* op) {
#if !defined(NDEBUG)
  for (S v : t->value) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw std::runtime_error(std::string(op) + ": non-finite value in output " +
                               shape_str(t->shape));
    }
  }
#else
  (void)t;
  (void)op;
#endif
}

// Append-only tape of executed ops. Backward replays the tape in strict
// reverse order exactly once; intermediate grads are zeroed first so repeated
// backward calls add the same leaf contribution each time.
template <class S>
class GraphT {
 public:
  GraphT() : prev_(current_) { current_ = this; }
  ~GraphT() { current_ = prev_; }
  GraphT(const GraphT&) = delete;
  GraphT& operator=(const GraphT&) = delete;

  static GraphT* current() { return current_; }

  void record(const TensorPtrT<S>& out, std::function<void()> backward) {
    out->ensure_grad();
    nodes_.push_back(Node{out, std::move(backward)});
  }

  void backward(const TensorPtrT<S>& loss) {
    if (loss->numel() != 1) {
      throw ContractError("backward: loss must be scalar, got " + shape_str(loss->shape));
    }
    if (loss->grad.empty()) {
      throw ContractError("backward: loss was not produced on this graph");
    }
    for (auto& n : nodes_) n.out->zero_grad();
    loss->grad[0] = S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->back();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    TensorPtrT<S> out;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;
  GraphT* prev_ = nullptr;
  static thread_local GraphT* current_;
};

template <class S>
thread_local GraphT<S>* GraphT<S>::current_ = nullptr;

namespace detail {

// A tensor receives gradient iff it has a grad buffer: leaves opt in via
// requires_grad, node outputs get one when recorded. Detached constants are
// skipped, which treats them as constants.
template <class S>
inline bool takes_grad(const TensorPtrT<S>& t) {
  return !t->grad.empty();
}

template <class S>
inline void require_same_shape(const TensorPtrT<S>& a, const TensorPtrT<S>& b,
                               const char* op) {
  if (a->shape != b->shape) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a->shape) +
                     " vs " + shape_str(b->shape));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <class S>
TensorPtrT<S> add(const TensorPtrT<S>& a, const TensorPtrT<S>& b) {
  detail::require_same_shape(a, b, "add");
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] + b->value[i];
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, b, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
      if (detail::takes_grad(b))
        for (std::size_t i = 0; i < out->grad.size(); ++i) b->grad[i] += out->grad[i];
    });
  }
  debug_check_finite(out, "add");
  return out;
}

template <class S>
TensorPtrT<S> sub(const TensorPtrT<S>& a, const TensorPtrT<S>& b) {
  detail::require_same_shape(a, b, "sub");
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] - b->value[i];
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, b, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
      if (detail::takes_grad(b))
        for (std::size_t i = 0; i < out->grad.size(); ++i) b->grad[i] -= out->grad[i];
    });
  }
  debug_check_finite(out, "sub");
  return out;
}

template <class S>
TensorPtrT<S> mul(const TensorPtrT<S>& a, const TensorPtrT<S>& b) {
  detail::require_same_shape(a, b, "mul");
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] * b->value[i];
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, b, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i)
          a->grad[i] += out->grad[i] * b->value[i];
      if (detail::takes_grad(b))
        for (std::size_t i = 0; i < out->grad.size(); ++i)
          b->grad[i] += out->grad[i] * a->value[i];
    });
  }
  debug_check_finite(out, "mul");
  return out;
}

template <class S>
TensorPtrT<S> scale(const TensorPtrT<S>& a, S c) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] * c;
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out, c] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i] * c;
    });
  }
  debug_check_finite(out, "scale");
  return out;
}

template <class S>
TensorPtrT<S> neg(const TensorPtrT<S>& a) {
  return scale(a, S(-1));
}

template <class S>
TensorPtrT<S> add_scalar(const TensorPtrT<S>& a, S c) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a->value[i] + c;
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) a->grad[i] += out->grad[i];
    });
  }
  debug_check_finite(out, "add_scalar");
  return out;
}

template <class S>
TensorPtrT<S> exp_(const TensorPtrT<S>& a) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::exp(a->value[i]);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i)
          a->grad[i] += out->grad[i] * out->value[i];
    });
  }
  debug_check_finite(out, "exp");
  return out;
}

template <class S>
TensorPtrT<S> log_(const TensorPtrT<S>& a) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::log(a->value[i]);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i)
          a->grad[i] += out->grad[i] / a->value[i];
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> sigmoid(const TensorPtrT<S>& a) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i) {
    const S x = a->value[i];
    out->value[i] = x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                              : std::exp(x) / (S(1) + std::exp(x));
  }
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) {
          const S y = out->value[i];
          a->grad[i] += out->grad[i] * y * (S(1) - y);
        }
    });
  }
  debug_check_finite(out, "sigmoid");
  return out;
}

template <class S>
TensorPtrT<S> tanh_(const TensorPtrT<S>& a) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::tanh(a->value[i]);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i) {
          const S y = out->value[i];
          a->grad[i] += out->grad[i] * (S(1) - y * y);
        }
    });
  }
  debug_check_finite(out, "tanh");
  return out;
}

template <class S>
TensorPtrT<S> relu(const TensorPtrT<S>& a) {
  auto out = zeros<S>(a->shape);
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a->value[i] > S(0) ? a->value[i] : S(0);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, out] {
      if (detail::takes_grad(a))
        for (std::size_t i = 0; i < out->grad.size(); ++i)
          if (a->value[i] > S(0)) a->grad[i] += out->grad[i];
    });
  }
  debug_check_finite(out, "relu");
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <class S>
TensorPtrT<S> matmul(const TensorPtrT<S>& a, const TensorPtrT<S>& b) {
  if (!a->is_matrix() || !b->is_matrix() || a->shape[1] != b->shape[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a->shape) + " x " +
                     shape_str(b->shape));
  }
  const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
  auto out = zeros<S>({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const S av = a->value[i * k + p];
      for (int j = 0; j < n; ++j) out->value[i * n + j] += av * b->value[p * n + j];
    }
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, b, out, m, k, n] {
      if (detail::takes_grad(a))
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) {
            const S gv = out->grad[i * n + j];
            for (int p = 0; p < k; ++p) a->grad[i * k + p] += gv * b->value[p * n + j];
          }
      if (detail::takes_grad(b))
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            const S av = a->value[i * k + p];
            for (int j = 0; j < n; ++j) b->grad[p * n + j] += av * out->grad[i * n + j];
          }
    });
  }
  debug_check_finite(out, "matmul");
  return out;
}

// y = A x for vector x.
template <class S>
TensorPtrT<S> matvec(const TensorPtrT<S>& a, const TensorPtrT<S>& x) {
  if (!a->is_matrix() || !x->is_vector() || a->shape[1] != x->shape[0]) {
    throw ShapeError("matvec: incompatible shapes " + shape_str(a->shape) + " x " +
                     shape_str(x->shape));
  }
  const int m = a->shape[0], n = a->shape[1];
  auto out = zeros<S>({m});
  for (int i = 0; i < m; ++i) {
    S acc = S(0);
    for (int j = 0; j < n; ++j) acc += a->value[i * n + j] * x->value[j];
    out->value[i] = acc;
  }
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [a, x, out, m, n] {
      if (detail::takes_grad(a))
        for (int i = 0; i < m; ++i) {
          const S gv = out->grad[i];
          for (int j = 0; j < n; ++j) a->grad[i * n + j] += gv * x->value[j];
        }
      if (detail::takes_grad(x))
        for (int i = 0; i < m; ++i) {
          const S gv = out->grad[i];
          for (int j = 0; j < n; ++j) x->grad[j] += gv * a->value[i * n + j];
        }
    });
  }
  debug_check_finite(out, "matvec");
  return out;
}

// y = w^T H: convex mixture of the rows of H when w is a distribution.
template <class S>
TensorPtrT<S> vecmat(const TensorPtrT<S>& w, const TensorPtrT<S>& h) {
  if (!w->is_vector() || !h->is_matrix() || w->shape[0] != h->shape[0]) {
    throw ShapeError("vecmat: incompatible shapes " + shape_str(w->shape) + " x " +
                     shape_str(h->shape));
  }
  const int t = h->shape[0], d = h->shape[1];
  auto out = zeros<S>({d});
  for (int i = 0; i < t; ++i) {
    const S wv = w->value[i];
    for (int j = 0; j < d; ++j) out->value[j] += wv * h->value[i * d + j];
  }
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [w, h, out, t, d] {
      if (detail::takes_grad(w))
        for (int i = 0; i < t; ++i) {
          S acc = S(0);
          for (int j = 0; j < d; ++j) acc += h->value[i * d + j] * out->grad[j];
          w->grad[i] += acc;
        }
      if (detail::takes_grad(h))
        for (int i = 0; i < t; ++i) {
          const S wv = w->value[i];
          for (int j = 0; j < d; ++j) h->grad[i * d + j] += wv * out->grad[j];
        }
    });
  }
  debug_check_finite(out, "vecmat");
  return out;
}

// ---------------------------------------------------------------------------
// Structure ops
// ---------------------------------------------------------------------------

template <class S>
TensorPtrT<S> concat(const std::vector<TensorPtrT<S>>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  int total = 0;
  for (const auto& p : parts) {
    if (!p->is_vector())
      throw ShapeError("concat: expected vectors, got " + shape_str(p->shape));
    total += p->shape[0];
  }
  auto out = zeros<S>({total});
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.begin(), p->value.end(), out->value.begin() + off);
    off += p->shape[0];
  }
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [parts, out] {
      int o = 0;
      for (const auto& p : parts) {
        if (detail::takes_grad(p))
          for (int i = 0; i < p->shape[0]; ++i) p->grad[i] += out->grad[o + i];
        o += p->shape[0];
      }
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> concat(const TensorPtrT<S>& a, const TensorPtrT<S>& b) {
  return concat(std::vector<TensorPtrT<S>>{a, b});
}

template <class S>
TensorPtrT<S> slice(const TensorPtrT<S>& v, int offset, int len) {
  if (!v->is_vector()) throw ShapeError("slice: expected vector, got " + shape_str(v->shape));
  if (offset < 0 || len < 0 || offset + len > v->shape[0])
    throw ContractError("slice: range [" + std::to_string(offset) + ", " +
                        std::to_string(offset + len) + ") outside " + shape_str(v->shape));
  auto out = zeros<S>({len});
  std::copy(v->value.begin() + offset, v->value.begin() + offset + len, out->value.begin());
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [v, out, offset, len] {
      if (detail::takes_grad(v))
        for (int i = 0; i < len; ++i) v->grad[offset + i] += out->grad[i];
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> row(const TensorPtrT<S>& m, int i) {
  if (!m->is_matrix()) throw ShapeError("row: expected matrix, got " + shape_str(m->shape));
  if (i < 0 || i >= m->shape[0])
    throw ContractError("row: index " + std::to_string(i) + " outside " + shape_str(m->shape));
  const int d = m->shape[1];
  auto out = zeros<S>({d});
  std::copy(m->value.begin() + static_cast<std::size_t>(i) * d,
            m->value.begin() + static_cast<std::size_t>(i + 1) * d, out->value.begin());
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [m, out, i, d] {
      if (detail::takes_grad(m))
        for (int j = 0; j < d; ++j) m->grad[static_cast<std::size_t>(i) * d + j] += out->grad[j];
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> stack_rows(const std::vector<TensorPtrT<S>>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no inputs");
  const int d = rows[0]->shape.empty() ? 0 : rows[0]->shape[0];
  for (const auto& r : rows) {
    if (!r->is_vector() || r->shape[0] != d)
      throw ShapeError("stack_rows: row shape " + shape_str(r->shape) + " does not match [" +
                       std::to_string(d) + "]");
  }
  const int t = static_cast<int>(rows.size());
  auto out = zeros<S>({t, d});
  for (int i = 0; i < t; ++i)
    std::copy(rows[i]->value.begin(), rows[i]->value.end(),
              out->value.begin() + static_cast<std::size_t>(i) * d);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [rows, out, d] {
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (detail::takes_grad(rows[i]))
          for (int j = 0; j < d; ++j) rows[i]->grad[j] += out->grad[i * d + j];
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> pick(const TensorPtrT<S>& v, int i) {
  if (!v->is_vector()) throw ShapeError("pick: expected vector, got " + shape_str(v->shape));
  if (i < 0 || i >= v->shape[0])
    throw ContractError("pick: index " + std::to_string(i) + " outside " + shape_str(v->shape));
  auto out = scalar_tensor<S>(v->value[i]);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [v, out, i] {
      if (detail::takes_grad(v)) v->grad[i] += out->grad[0];
    });
  }
  return out;
}

template <class S>
TensorPtrT<S> sum(const TensorPtrT<S>& v) {
  S acc = S(0);
  for (S x : v->value) acc += x;
  auto out = scalar_tensor<S>(acc);
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [v, out] {
      if (detail::takes_grad(v))
        for (auto& gv : v->grad) gv += out->grad[0];
    });
  }
  debug_check_finite(out, "sum");
  return out;
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

template <class S>
TensorPtrT<S> softmax(const TensorPtrT<S>& x) {
  if (!x->is_vector()) throw ShapeError("softmax: expected vector, got " + shape_str(x->shape));
  if (x->shape[0] < 1) throw ContractError("softmax: input must be non-empty");
  const int n = x->shape[0];
  auto out = zeros<S>({n});
  const S mx = *std::max_element(x->value.begin(), x->value.end());
  S z = S(0);
  for (int i = 0; i < n; ++i) {
    out->value[i] = std::exp(x->value[i] - mx);
    z += out->value[i];
  }
  for (int i = 0; i < n; ++i) out->value[i] /= z;
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [x, out, n] {
      if (!detail::takes_grad(x)) return;
      S dot = S(0);
      for (int i = 0; i < n; ++i) dot += out->grad[i] * out->value[i];
      for (int i = 0; i < n; ++i) x->grad[i] += out->value[i] * (out->grad[i] - dot);
    });
  }
  debug_check_finite(out, "softmax");
  return out;
}

// Softmax restricted to positions with keep[i] != 0; masked positions get
// probability 0 and receive no gradient.
template <class S>
TensorPtrT<S> masked_softmax(const TensorPtrT<S>& x, const std::vector<char>& keep) {
  if (!x->is_vector()) throw ShapeError("masked_softmax: expected vector, got " + shape_str(x->shape));
  const int n = x->shape[0];
  if (static_cast<int>(keep.size()) != n)
    throw ShapeError("masked_softmax: mask length " + std::to_string(keep.size()) +
                     " vs input " + shape_str(x->shape));
  bool any = false;
  S mx = S(0);
  for (int i = 0; i < n; ++i)
    if (keep[i]) {
      mx = any ? std::max(mx, x->value[i]) : x->value[i];
      any = true;
    }
  if (!any) throw ContractError("masked_softmax: all positions masked");
  auto out = zeros<S>({n});
  S z = S(0);
  for (int i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    out->value[i] = std::exp(x->value[i] - mx);
    z += out->value[i];
  }
  for (int i = 0; i < n; ++i) out->value[i] /= z;
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [x, out, keep, n] {
      if (!detail::takes_grad(x)) return;
      S dot = S(0);
      for (int i = 0; i < n; ++i)
        if (keep[i]) dot += out->grad[i] * out->value[i];
      for (int i = 0; i < n; ++i)
        if (keep[i]) x->grad[i] += out->value[i] * (out->grad[i] - dot);
    });
  }
  debug_check_finite(out, "masked_softmax");
  return out;
}

template <class S>
TensorPtrT<S> log_softmax(const TensorPtrT<S>& x) {
  if (!x->is_vector()) throw ShapeError("log_softmax: expected vector, got " + shape_str(x->shape));
  if (x->shape[0] < 1) throw ContractError("log_softmax: input must be non-empty");
  const int n = x->shape[0];
  auto out = zeros<S>({n});
  const S mx = *std::max_element(x->value.begin(), x->value.end());
  S z = S(0);
  for (int i = 0; i < n; ++i) z += std::exp(x->value[i] - mx);
  const S lz = mx + std::log(z);
  for (int i = 0; i < n; ++i) out->value[i] = x->value[i] - lz;
  if (auto* g = GraphT<S>::current()) {
    g->record(out, [x, out, n] {
      if (!detail::takes_grad(x)) return;
      S gsum = S(0);
      for (int i = 0; i < n; ++i) gsum += out->grad[i];
      for (int i = 0; i < n; ++i)
        x->grad[i] += out->grad[i] - std::exp(out->value[i]) * gsum;
    });
  }
  debug_check_finite(out, "log_softmax");
  return out;
}

// Cross-entropy of a gold index against unnormalized logits.
template <class S>
TensorPtrT<S> nll_from_logits(const TensorPtrT<S>& logits, int gold) {
  return neg(pick(log_softmax(logits), gold));
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <class S>
class AdamT {
 public:
  AdamT(std::vector<TensorPtrT<S>> params, S lr = S(1e-3), S beta1 = S(0.9),
        S beta2 = S(0.999), S eps = S(1e-8))
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
      if (!p->requires_grad)
        throw ContractError("adam: parameter without requires_grad");
      m_.emplace_back(p->value.size(), S(0));
      v_.emplace_back(p->value.size(), S(0));
    }
  }

  // Bias-corrected update, in place. Grads must be populated (zero counts).
  void step() {
    for (const auto& p : params_)
      if (p->grad.size() != p->value.size())
        throw ContractError("adam: parameter missing gradient");
    ++t_;
    const S bc1 = S(1) - std::pow(b1_, static_cast<S>(t_));
    const S bc2 = S(1) - std::pow(b2_, static_cast<S>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const S g = p.grad[i];
        m[i] = b1_ * m[i] + (S(1) - b1_) * g;
        v[i] = b2_ * v[i] + (S(1) - b2_) * g * g;
        const S mhat = m[i] / bc1;
        const S vhat = v[i] / bc2;
        p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void zero_grads() {
    for (const auto& p : params_) p->zero_grad();
  }

  std::int64_t step_count() const { return t_; }
  S lr() const { return lr_; }

 private:
  std::vector<TensorPtrT<S>> params_;
  std::vector<std::vector<S>> m_, v_;
  S lr_, b1_, b2_, eps_;
  std::int64_t t_ = 0;
};

// Global-norm gradient clip; no-op when max_norm <= 0.
template <class S>
void clip_grad_norm(const std::vector<TensorPtrT<S>>& params, S max_norm) {
  if (max_norm <= S(0)) return;
  double sq = 0;
  for (const auto& p : params)
    for (S gv : p->grad) sq += static_cast<double>(gv) * static_cast<double>(gv);
  const double norm = std::sqrt(sq);
  if (norm <= static_cast<double>(max_norm)) return;
  const S factor = static_cast<S>(static_cast<double>(max_norm) / norm);
  for (const auto& p : params)
    for (S& gv : p->grad) gv *= factor;
}

// ---------------------------------------------------------------------------
// Gradient checking (double precision only)
// ---------------------------------------------------------------------------

using NamedParams = std::vector<std::pair<std::string, TensorPtrT<double>>>;

struct GradCheckItem {
  std::string param;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::string name;
  double tolerance = 0.0;
  bool ok = false;
  double worst = 0.0;
  std::string worst_param;
  std::string message;
  std::vector<GradCheckItem> items;
};

// Compares reverse-mode gradients of loss_fn against central finite
// differences, per parameter element. loss_fn must rebuild the forward pass on
// every call and return a scalar; it runs once under a graph for the autodiff
// side and many times without one for the differences.
inline GradCheckReport grad_check(std::string name, const NamedParams& params,
                                  const std::function<TensorPtrT<double>()>& loss_fn,
                                  double tolerance, double fd_step = 1e-5) {
  GradCheckReport report;
  report.name = std::move(name);
  report.tolerance = tolerance;

  for (const auto& [pname, p] : params) {
    if (!p->requires_grad) {
      report.message = "parameter " + pname + " does not require grad";
      return report;
    }
    p->zero_grad();
  }

  {
    GraphT<double> graph;
    auto loss = loss_fn();
    if (loss->numel() != 1) {
      report.message = "loss is not scalar";
      return report;
    }
    if (!std::isfinite(loss->value[0])) {
      report.message = "non-finite loss";
      return report;
    }
    graph.backward(loss);
  }

  std::vector<std::vector<double>> autodiff;
  autodiff.reserve(params.size());
  for (const auto& [pname, p] : params) autodiff.push_back(p->grad);

  report.ok = true;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [pname, p] = params[k];
    GradCheckItem item;
    item.param = pname;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + fd_step;
      const double lp = loss_fn()->value[0];
      p->value[i] = orig - fd_step;
      const double lm = loss_fn()->value[0];
      p->value[i] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        report.message = "non-finite loss during finite differences at " + pname;
        report.ok = false;
        return report;
      }
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double ad = autodiff[k][i];
      // Floor keeps difference noise from dominating near-zero gradients.
      const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-4});
      item.max_rel_err = std::max(item.max_rel_err, rel);
    }
    if (item.max_rel_err > report.worst) {
      report.worst = item.max_rel_err;
      report.worst_param = pname;
    }
    if (item.max_rel_err >= tolerance) report.ok = false;
    report.items.push_back(std::move(item));
  }
  if (!report.ok && report.message.empty())
    report.message = "gradient mismatch at " + report.worst_param;
  return report;
}

}  // namespace decipher
