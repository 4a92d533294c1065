#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mlad/tensor.hpp"

namespace mlad {

// ---------------------------------------------------------------------------
// Pure forward kernels. The tape calls exactly these, so replaying a tape and
// calling an op directly give bit-identical results.
// ---------------------------------------------------------------------------
namespace ops {

namespace detail {

// Message is built only on failure.
template <class Msg>
inline void require(bool ok, Msg&& what) {
  if (!ok) throw Error("dimension_mismatch", what());
}

struct MatmulDims {
  std::size_t batch, m, k, n;
  bool a_batched, b_batched;
};

inline MatmulDims matmul_dims(const Shape& a, const Shape& b) {
  require((a.size() == 2 || a.size() == 3) && (b.size() == 2 || b.size() == 3), [&] { return std::string("matmul expects rank-2 or rank-3 operands, got " + shape_str(a) + " x " + shape_str(b)); });
  MatmulDims d{};
  d.a_batched = a.size() == 3;
  d.b_batched = b.size() == 3;
  const std::size_t ba = d.a_batched ? a[0] : 1;
  const std::size_t bb = d.b_batched ? b[0] : 1;
  require(!(d.a_batched && d.b_batched) || ba == bb, [&] { return std::string("matmul batch mismatch " + shape_str(a) + " x " + shape_str(b)); });
  d.batch = std::max(ba, bb);
  d.m = a[a.size() - 2];
  d.k = a[a.size() - 1];
  require(b[b.size() - 2] == d.k, [&] { return std::string("matmul inner dimension mismatch " + shape_str(a) + " x " + shape_str(b)); });
  d.n = b[b.size() - 1];
  return d;
}

}  // namespace detail

/// c = a · b. Rank-3 operands are batches of matrices; a rank-2 operand is
/// shared across the other operand's batch.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto d = detail::matmul_dims(a.shape(), b.shape());
  Shape out = (d.a_batched || d.b_batched) ? Shape{d.batch, d.m, d.n} : Shape{d.m, d.n};
  Tensor c(out);
  if (d.a_batched && !d.b_batched) {
    kernel::gemm_nn(a.data().data(), b.data().data(), c.data().data(), d.batch * d.m, d.k, d.n);
    return c;
  }
  for (std::size_t bi = 0; bi < d.batch; ++bi) {
    const double* ap = a.data().data() + (d.a_batched ? bi * d.m * d.k : 0);
    const double* bp = b.data().data() + (d.b_batched ? bi * d.k * d.n : 0);
    kernel::gemm_nn(ap, bp, c.data().data() + bi * d.m * d.n, d.m, d.k, d.n);
  }
  return c;
}

/// Swap the last two axes.
inline Tensor transpose(const Tensor& a) {
  detail::require(a.rank() == 2 || a.rank() == 3, [&] { return std::string("transpose expects rank 2 or 3, got " + shape_str(a.shape())); });
  const std::size_t batch = a.rank() == 3 ? a.dim(0) : 1;
  const std::size_t r = a.dim(a.rank() - 2), c = a.dim(a.rank() - 1);
  Shape s = a.shape();
  std::swap(s[s.size() - 1], s[s.size() - 2]);
  Tensor out(s);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = a[b * r * c + i * c + j];
  return out;
}

/// (d0, d1, d2) -> (d1, d0, d2)
inline Tensor permute01(const Tensor& a) {
  detail::require(a.rank() == 3, [&] { return std::string("permute01 expects rank 3, got " + shape_str(a.shape())); });
  const std::size_t d0 = a.dim(0), d1 = a.dim(1), d2 = a.dim(2);
  Tensor out({d1, d0, d2});
  for (std::size_t i = 0; i < d0; ++i)
    for (std::size_t j = 0; j < d1; ++j)
      std::copy_n(a.data().data() + (i * d1 + j) * d2, d2, out.data().data() + (j * d0 + i) * d2);
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require(a.shape() == b.shape(), [&] { return std::string("add shape mismatch " + shape_str(a.shape()) + " + " + shape_str(b.shape())); });
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.begin(), suffix.end(), full.end() - static_cast<std::ptrdiff_t>(suffix.size()));
}

/// a + b where b's shape is a trailing suffix of a's (row / per-class bias).
inline Tensor add_suffix(const Tensor& a, const Tensor& b) {
  detail::require(is_suffix(a.shape(), b.shape()), [&] { return std::string("bias shape " + shape_str(b.shape()) + " is not a suffix of " + shape_str(a.shape())); });
  Tensor out = a;
  const std::size_t inner = b.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % inner];
  return out;
}

/// a ⊙ b where b's shape is a trailing suffix of a's.
inline Tensor mul_suffix(const Tensor& a, const Tensor& b) {
  detail::require(is_suffix(a.shape(), b.shape()), [&] { return std::string("factor shape " + shape_str(b.shape()) + " is not a suffix of " + shape_str(a.shape())); });
  Tensor out = a;
  const std::size_t inner = b.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i % inner];
  return out;
}

/// k·a + c elementwise.
inline Tensor affine(const Tensor& a, double k, double c) {
  Tensor out = a;
  for (double& v : out.data()) v = k * v + c;
  return out;
}

inline Tensor scale_by(const Tensor& a, const Tensor& s) {
  const double k = s.item();
  Tensor out = a;
  for (double& v : out.data()) v *= k;
  return out;
}

inline Tensor relu(const Tensor& a) {
  Tensor out = a;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  Tensor out = a;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

/// Softmax over the last axis with per-row max subtraction.
inline Tensor softmax_rows(const Tensor& a) {
  detail::require(a.rank() >= 1 && a.dim(a.rank() - 1) > 0, [&] { return std::string("softmax_rows on " + shape_str(a.shape())); });
  const std::size_t cols = a.dim(a.rank() - 1);
  const std::size_t rows = a.size() / cols;
  Tensor out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = a.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

inline Tensor sum_last(const Tensor& a) {
  detail::require(a.rank() >= 1, [&] { return std::string("sum_last on rank-0 tensor"); });
  const std::size_t cols = a.dim(a.rank() - 1);
  Shape s(a.shape().begin(), a.shape().end() - 1);
  Tensor out(s);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += a[r * cols + j];
    out[r] = acc;
  }
  return out;
}

inline Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return Tensor::scalar(acc);
}

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Masked mean binary cross-entropy of sigmoid(logits) against labels.
/// Returns 0 when the mask is empty.
inline Tensor bce_with_logits(const Tensor& logits, const Tensor& labels, const Tensor& mask) {
  detail::require(logits.shape() == labels.shape() && logits.shape() == mask.shape(), [&] { return std::string("bce_with_logits shape mismatch"); });
  double acc = 0.0, count = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i] == 0.0) continue;
    acc += mask[i] * (softplus(logits[i]) - labels[i] * logits[i]);
    count += mask[i];
  }
  return Tensor::scalar(count > 0.0 ? acc / count : 0.0);
}

/// Rows [begin, end) of the leading axis.
inline Tensor slice0(const Tensor& a, std::size_t begin, std::size_t end) {
  detail::require(a.rank() >= 1 && begin <= end && end <= a.dim(0), [&] { return std::string("slice0 [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + shape_str(a.shape())); });
  Shape s = a.shape();
  s[0] = end - begin;
  const std::size_t inner = a.dim(0) ? a.size() / a.dim(0) : 0;
  std::vector<double> d(a.data().begin() + static_cast<std::ptrdiff_t>(begin * inner),
                        a.data().begin() + static_cast<std::ptrdiff_t>(end * inner));
  return Tensor(std::move(s), std::move(d));
}

inline Tensor stack0(std::span<const Tensor* const> parts) {
  detail::require(!parts.empty(), [&] { return std::string("stack0 of zero tensors"); });
  const Shape& inner = parts.front()->shape();
  Shape s{parts.size()};
  s.insert(s.end(), inner.begin(), inner.end());
  std::vector<double> d;
  d.reserve(shape_size(s));
  for (const Tensor* p : parts) {
    detail::require(p->shape() == inner, [&] { return std::string("stack0 shape mismatch"); });
    d.insert(d.end(), p->data().begin(), p->data().end());
  }
  return Tensor(std::move(s), std::move(d));
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Transpose,
  Permute01,
  Reshape,
  Add,
  AddSuffix,
  MulSuffix,
  Affine,
  ScaleBy,
  Relu,
  Sigmoid,
  SoftmaxRows,
  SumLast,
  Sum,
  BceWithLogits,
  Slice0,
  Stack0,
};

class Tape;

/// Per-node constants (scale factors, slice bounds, target shape).
struct OpAttr {
  double k = 0.0;
  double c = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  Shape shape;
};

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t id) : tape_(t), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records primitive ops in execution order and differentiates them in
/// reverse. Not thread-safe; independent tapes may run concurrently.
class Tape {
 public:
  using Attr = OpAttr;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf.
  Var parameter(Tensor v) { return push(Op::Leaf, {}, {}, true, std::move(v)); }
  /// Non-differentiable leaf.
  Var constant(Tensor v) { return push(Op::Leaf, {}, {}, false, std::move(v)); }

  const Tensor& value(Var v) const { return node(v).value; }
  Op op(Var v) const { return node(v).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Overwrite a leaf. Downstream values are stale until replay().
  void set_value(Var leaf, Tensor v) {
    Node& n = nodes_.at(leaf.id());
    if (n.op != Op::Leaf) throw Error("invalid_argument", "set_value on non-leaf node");
    if (n.value.shape() != v.shape()) throw Error("dimension_mismatch", "set_value shape change");
    n.value = std::move(v);
  }

  /// Recompute every non-leaf node from its operands, in recorded order.
  void replay() {
    for (Node& n : nodes_)
      if (n.op != Op::Leaf) n.value = compute(n);
  }

  Var record(Op op, std::vector<std::size_t> in, Attr attr = {}) {
    bool rg = false;
    for (std::size_t i : in) rg = rg || nodes_.at(i).requires_grad;
    Node tmp{op, std::move(in), std::move(attr), rg, {}};
    Tensor v = compute(tmp);
    return push(tmp.op, std::move(tmp.in), std::move(tmp.attr), rg, std::move(v));
  }

  /// ∂loss/∂w for each w in `wrt` by reverse accumulation. Parameters the loss
  /// does not depend on get a zero tensor.
  std::vector<Tensor> gradient(Var loss, std::span<const Var> wrt) const {
    const Node& ln = node(loss);
    if (ln.value.size() != 1) throw Error("invalid_argument", "gradient of non-scalar " + shape_str(ln.value.shape()));
    const std::size_t top = loss.id();
    std::vector<Tensor> adj(top + 1);
    std::vector<char> has(top + 1, 0);
    adj[top] = Tensor(ln.value.shape(), 1.0);
    has[top] = 1;
    std::vector<char> keep(top + 1, 0);
    for (const Var& w : wrt)
      if (w.id() <= top) keep[w.id()] = 1;
    for (std::size_t id = top + 1; id-- > 0;) {
      if (!has[id]) continue;
      const Node& n = nodes_[id];
      if (n.op != Op::Leaf) backward(n, adj[id], adj, has);
      if (!keep[id]) adj[id] = Tensor();
    }
    std::vector<Tensor> out;
    out.reserve(wrt.size());
    for (const Var& w : wrt) {
      if (w.tape() != this) throw Error("invalid_argument", "gradient w.r.t. a variable of another tape");
      if (w.id() <= top && has[w.id()])
        out.push_back(adj[w.id()]);
      else
        out.emplace_back(node(w).value.shape(), 0.0);
    }
    return out;
  }

  Var var(std::size_t id) { return Var(this, id); }

 private:
  struct Node {
    Op op;
    std::vector<std::size_t> in;
    Attr attr;
    bool requires_grad;
    Tensor value;
  };

  const Node& node(Var v) const {
    if (v.tape() != this) throw Error("invalid_argument", "variable belongs to another tape");
    return nodes_.at(v.id());
  }

  Var push(Op op, std::vector<std::size_t> in, Attr attr, bool rg, Tensor v) {
    nodes_.push_back(Node{op, std::move(in), std::move(attr), rg, std::move(v)});
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& arg(const Node& n, std::size_t i) const { return nodes_[n.in[i]].value; }

  Tensor compute(const Node& n) const {
    switch (n.op) {
      case Op::Leaf:
        return n.value;
      case Op::MatMul:
        return ops::matmul(arg(n, 0), arg(n, 1));
      case Op::Transpose:
        return ops::transpose(arg(n, 0));
      case Op::Permute01:
        return ops::permute01(arg(n, 0));
      case Op::Reshape:
        return arg(n, 0).reshaped(n.attr.shape);
      case Op::Add:
        return ops::add(arg(n, 0), arg(n, 1));
      case Op::AddSuffix:
        return ops::add_suffix(arg(n, 0), arg(n, 1));
      case Op::MulSuffix:
        return ops::mul_suffix(arg(n, 0), arg(n, 1));
      case Op::Affine:
        return ops::affine(arg(n, 0), n.attr.k, n.attr.c);
      case Op::ScaleBy:
        return ops::scale_by(arg(n, 0), arg(n, 1));
      case Op::Relu:
        return ops::relu(arg(n, 0));
      case Op::Sigmoid:
        return ops::sigmoid(arg(n, 0));
      case Op::SoftmaxRows:
        return ops::softmax_rows(arg(n, 0));
      case Op::SumLast:
        return ops::sum_last(arg(n, 0));
      case Op::Sum:
        return ops::sum(arg(n, 0));
      case Op::BceWithLogits:
        return ops::bce_with_logits(arg(n, 0), arg(n, 1), arg(n, 2));
      case Op::Slice0:
        return ops::slice0(arg(n, 0), n.attr.begin, n.attr.end);
      case Op::Stack0: {
        std::vector<const Tensor*> parts;
        for (std::size_t i : n.in) parts.push_back(&nodes_[i].value);
        return ops::stack0(parts);
      }
    }
    throw Error("internal", "unknown op");
  }

  // Accumulator for operand `i` of `n`, or nullptr if it needs no gradient.
  Tensor* slot(const Node& n, std::size_t i, std::vector<Tensor>& adj, std::vector<char>& has) const {
    const std::size_t id = n.in[i];
    if (!nodes_[id].requires_grad) return nullptr;
    if (!has[id]) {
      adj[id] = Tensor(nodes_[id].value.shape(), 0.0);
      has[id] = 1;
    }
    return &adj[id];
  }

  void backward(const Node& n, const Tensor& g, std::vector<Tensor>& adj, std::vector<char>& has) const {
    switch (n.op) {
      case Op::Leaf:
        return;
      case Op::MatMul: {
        const Tensor& a = arg(n, 0);
        const Tensor& b = arg(n, 1);
        const auto d = ops::detail::matmul_dims(a.shape(), b.shape());
        Tensor* ga = slot(n, 0, adj, has);
        Tensor* gb = slot(n, 1, adj, has);
        if (d.a_batched && !d.b_batched) {
          const std::size_t rows = d.batch * d.m;
          if (ga) kernel::gemm_nt(g.data().data(), b.data().data(), ga->data().data(), rows, d.n, d.k);
          if (gb) kernel::gemm_tn(a.data().data(), g.data().data(), gb->data().data(), d.k, rows, d.n);
          return;
        }
        for (std::size_t bi = 0; bi < d.batch; ++bi) {
          const std::size_t ao = d.a_batched ? bi * d.m * d.k : 0;
          const std::size_t bo = d.b_batched ? bi * d.k * d.n : 0;
          const double* gp = g.data().data() + bi * d.m * d.n;
          if (ga) kernel::gemm_nt(gp, b.data().data() + bo, ga->data().data() + ao, d.m, d.n, d.k);
          if (gb) kernel::gemm_tn(a.data().data() + ao, gp, gb->data().data() + bo, d.k, d.m, d.n);
        }
        return;
      }
      case Op::Transpose:
        if (Tensor* ga = slot(n, 0, adj, has)) *ga = ops::add(*ga, ops::transpose(g));
        return;
      case Op::Permute01:
        if (Tensor* ga = slot(n, 0, adj, has)) *ga = ops::add(*ga, ops::permute01(g));
        return;
      case Op::Reshape:
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        return;
      case Op::Add:
        for (std::size_t k = 0; k < 2; ++k)
          if (Tensor* gx = slot(n, k, adj, has))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
        return;
      case Op::AddSuffix: {
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (Tensor* gb = slot(n, 1, adj, has)) {
          const std::size_t inner = gb->size();
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % inner] += g[i];
        }
        return;
      }
      case Op::MulSuffix: {
        const Tensor& a = arg(n, 0);
        const Tensor& b = arg(n, 1);
        const std::size_t inner = b.size();
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b[i % inner];
        if (Tensor* gb = slot(n, 1, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % inner] += g[i] * a[i];
        return;
      }
      case Op::Affine:
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += n.attr.k * g[i];
        return;
      case Op::ScaleBy: {
        const Tensor& a = arg(n, 0);
        const double s = arg(n, 1).item();
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
        if (Tensor* gs = slot(n, 1, adj, has)) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * a[i];
          (*gs)[0] += acc;
        }
        return;
      }
      case Op::Relu: {
        const Tensor& a = arg(n, 0);
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i)
            if (a[i] > 0.0) (*ga)[i] += g[i];
        return;
      }
      case Op::Sigmoid:
        if (Tensor* ga = slot(n, 0, adj, has))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
        return;
      case Op::SoftmaxRows: {
        Tensor* ga = slot(n, 0, adj, has);
        if (!ga) return;
        const Tensor& y = n.value;
        const std::size_t cols = y.dim(y.rank() - 1);
        const std::size_t rows = y.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t o = r * cols;
          double dot = 0.0;
          for (std::size_t j = 0; j < cols; ++j) dot += g[o + j] * y[o + j];
          for (std::size_t j = 0; j < cols; ++j) (*ga)[o + j] += y[o + j] * (g[o + j] - dot);
        }
        return;
      }
      case Op::SumLast: {
        Tensor* ga = slot(n, 0, adj, has);
        if (!ga) return;
        const Tensor& a = arg(n, 0);
        const std::size_t cols = a.dim(a.rank() - 1);
        for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += g[i / cols];
        return;
      }
      case Op::Sum:
        if (Tensor* ga = slot(n, 0, adj, has))
          for (double& v : ga->data()) v += g[0];
        return;
      case Op::BceWithLogits: {
        Tensor* gz = slot(n, 0, adj, has);
        if (!gz) return;
        const Tensor& z = arg(n, 0);
        const Tensor& y = arg(n, 1);
        const Tensor& m = arg(n, 2);
        double count = 0.0;
        for (double v : m.data()) count += v;
        if (count == 0.0) return;
        const double scale = g[0] / count;
        for (std::size_t i = 0; i < z.size(); ++i)
          if (m[i] != 0.0) (*gz)[i] += scale * m[i] * (ops::sigmoid(z[i]) - y[i]);
        return;
      }
      case Op::Slice0: {
        Tensor* ga = slot(n, 0, adj, has);
        if (!ga) return;
        const Tensor& a = arg(n, 0);
        const std::size_t inner = a.dim(0) ? a.size() / a.dim(0) : 0;
        const std::size_t off = n.attr.begin * inner;
        for (std::size_t i = 0; i < g.size(); ++i) (*ga)[off + i] += g[i];
        return;
      }
      case Op::Stack0: {
        const std::size_t inner = n.in.empty() ? 0 : g.size() / n.in.size();
        for (std::size_t k = 0; k < n.in.size(); ++k)
          if (Tensor* gx = slot(n, k, adj, has))
            for (std::size_t i = 0; i < inner; ++i) (*gx)[i] += g[k * inner + i];
        return;
      }
    }
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const {
  assert(tape_);
  return tape_->value(*this);
}

// ---------------------------------------------------------------------------
// Recording front-end
// ---------------------------------------------------------------------------

namespace detail {
inline Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw Error("invalid_argument", "operands live on different tapes");
  return *a.tape();
}
inline Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw Error("invalid_argument", "unbound variable");
  return *a.tape();
}
}  // namespace detail

inline Var matmul(Var a, Var b) { return detail::same_tape(a, b).record(Op::MatMul, {a.id(), b.id()}); }
inline Var transpose(Var a) { return detail::tape_of(a).record(Op::Transpose, {a.id()}); }
inline Var permute01(Var a) { return detail::tape_of(a).record(Op::Permute01, {a.id()}); }
inline Var reshape(Var a, Shape s) {
  if (shape_size(s) != a.value().size())
    throw Error("dimension_mismatch", "reshape " + shape_str(a.shape()) + " -> " + shape_str(s));
  Tape::Attr at;
  at.shape = std::move(s);
  return detail::tape_of(a).record(Op::Reshape, {a.id()}, std::move(at));
}
inline Var add(Var a, Var b) { return detail::same_tape(a, b).record(Op::Add, {a.id(), b.id()}); }
inline Var add_suffix(Var a, Var bias) { return detail::same_tape(a, bias).record(Op::AddSuffix, {a.id(), bias.id()}); }
inline Var mul_suffix(Var a, Var b) { return detail::same_tape(a, b).record(Op::MulSuffix, {a.id(), b.id()}); }
inline Var affine(Var a, double k, double c) {
  Tape::Attr at;
  at.k = k;
  at.c = c;
  return detail::tape_of(a).record(Op::Affine, {a.id()}, std::move(at));
}
inline Var scale(Var a, double k) { return affine(a, k, 0.0); }
inline Var scale_by(Var a, Var s) {
  if (s.value().size() != 1) throw Error("dimension_mismatch", "scale_by expects a scalar factor");
  return detail::same_tape(a, s).record(Op::ScaleBy, {a.id(), s.id()});
}
inline Var relu(Var a) { return detail::tape_of(a).record(Op::Relu, {a.id()}); }
inline Var sigmoid(Var a) { return detail::tape_of(a).record(Op::Sigmoid, {a.id()}); }
inline Var softmax_rows(Var a) { return detail::tape_of(a).record(Op::SoftmaxRows, {a.id()}); }
inline Var sum_last(Var a) { return detail::tape_of(a).record(Op::SumLast, {a.id()}); }
inline Var sum(Var a) { return detail::tape_of(a).record(Op::Sum, {a.id()}); }
inline Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }
inline Var bce_with_logits(Var logits, Var labels, Var mask) {
  detail::same_tape(logits, labels);
  return detail::same_tape(logits, mask).record(Op::BceWithLogits, {logits.id(), labels.id(), mask.id()});
}
inline Var slice0(Var a, std::size_t begin, std::size_t end) {
  Tape::Attr at;
  at.begin = begin;
  at.end = end;
  return detail::tape_of(a).record(Op::Slice0, {a.id()}, std::move(at));
}
inline Var stack0(std::span<const Var> parts) {
  if (parts.empty()) throw Error("dimension_mismatch", "stack0 of zero variables");
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    detail::same_tape(parts.front(), p);
    ids.push_back(p.id());
  }
  return parts.front().tape()->record(Op::Stack0, std::move(ids));
}

}  // namespace mlad
