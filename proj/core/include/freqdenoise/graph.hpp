#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "freqdenoise/conv.hpp"
#include "freqdenoise/errors.hpp"
#include "freqdenoise/fft.hpp"
#include "freqdenoise/tensor.hpp"

namespace freqdenoise {

enum class EwKind { Add, Sub, Mul, DivEps, Div };
enum class ReduceKind { Sum, Mean, SumSquares };

template <class T>
struct Var {
  std::uint32_t id = UINT32_MAX;
};

// Gradients keyed by tracked (leaf) tensor identity. Every leaf of the
// graph gets an entry; leaves the loss never touched map to zeros.
template <class T>
class GradientMap {
 public:
  const Tensor<T>& at(Var<T> v) const {
    auto it = grads_.find(v.id);
    if (it == grads_.end()) {
      throw InvalidGraphError("no gradient recorded for this variable");
    }
    return it->second;
  }
  bool contains(Var<T> v) const { return grads_.count(v.id) != 0; }
  std::size_t size() const { return grads_.size(); }
  void insert(Var<T> v, Tensor<T> g) { grads_.emplace(v.id, std::move(g)); }

 private:
  std::unordered_map<std::uint32_t, Tensor<T>> grads_;
};

// Reverse-mode tape over the fixed operation set the denoising model needs.
// Nodes are appended in execution order; every node's inputs precede it, so
// one reverse sweep computes all gradients. Tensors are immutable, the tape
// is append-only, and a single Graph instance must stay confined to one
// worker at a time.
template <class T>
class Graph {
 public:
  using scalar_type = T;

  explicit Graph(ConvPolicy conv_policy = ConvPolicy::Direct)
      : conv_policy_(conv_policy) {}

  ConvPolicy conv_policy() const { return conv_policy_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var<T> leaf(Tensor<T> value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
  }

  const Tensor<T>& value(Var<T> v) const { return node(v).value; }

  // ---- operations --------------------------------------------------------

  Var<T> conv1d_same(Var<T> input, Var<T> kernels) {
    const Tensor<T>& in = node(input).value;
    const Tensor<T>& ker = node(kernels).value;
    if (in.rank() != 2 || ker.rank() != 3) {
      throw DimensionError("conv1d_same expects input [C_in,N], kernels "
                           "[C_out,C_in,K]");
    }
    if (ker.dim(1) != in.dim(0)) {
      throw DimensionError("conv1d_same channel mismatch: input C_in " +
                           std::to_string(in.dim(0)) + " vs kernels C_in " +
                           std::to_string(ker.dim(1)));
    }
    const std::size_t n = in.dim(1);
    const std::size_t k = ker.dim(2);
    if (k == 0 || n == 0 || k > 2 * n - 1) {
      throw DimensionError("conv1d_same kernel length " + std::to_string(k) +
                           " outside [1, 2N-1] for N=" + std::to_string(n));
    }
    return make(Op::Conv1dSame, {input.id, kernels.id});
  }

  Var<T> bias_add(Var<T> x, Var<T> bias) {
    const Tensor<T>& xv = node(x).value;
    const Tensor<T>& bv = node(bias).value;
    if (xv.rank() != 2 || bv.rank() != 1 || bv.dim(0) != xv.dim(0)) {
      throw DimensionError("bias_add expects x [C,N] and bias [C]");
    }
    return make(Op::BiasAdd, {x.id, bias.id});
  }

  Var<T> tanh_act(Var<T> x) { return make(Op::Tanh, {x.id}); }
  Var<T> elu_act(Var<T> x) { return make(Op::Elu, {x.id}); }

  Var<T> elementwise(Var<T> a, Var<T> b, EwKind kind, T eps = T(0)) {
    const Tensor<T>& av = node(a).value;
    const Tensor<T>& bv = node(b).value;
    if (!av.same_shape(bv)) {
      throw DimensionError("elementwise operands must share a shape, got " +
                           shape_string(av) + " vs " + shape_string(bv));
    }
    if (kind == EwKind::DivEps && !(eps > T(0))) {
      throw DimensionError("div_eps requires eps > 0");
    }
    Node n;
    n.op = Op::Elementwise;
    n.ew = kind;
    n.scalar = eps;
    n.in = {a.id, b.id};
    return emit(std::move(n));
  }

  Var<T> concat_channels(std::span<const Var<T>> parts) {
    if (parts.empty()) throw DimensionError("concat of zero parts");
    std::size_t trailing = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const Tensor<T>& p = node(parts[i]).value;
      if (p.rank() != 2) {
        throw DimensionError("concat_channels expects rank-2 parts [C,F]");
      }
      if (i == 0) {
        trailing = p.dim(1);
      } else if (p.dim(1) != trailing) {
        throw DimensionError("concat_channels trailing length mismatch");
      }
    }
    Node n;
    n.op = Op::Concat;
    for (Var<T> v : parts) n.in.push_back(v.id);
    return emit(std::move(n));
  }

  Var<T> reshape(Var<T> x, std::vector<std::size_t> shape) {
    std::size_t prod = Tensor<T>::checked_size(shape);
    if (prod != node(x).value.size()) {
      throw DimensionError("reshape to incompatible element count");
    }
    Node n;
    n.op = Op::Reshape;
    n.in = {x.id};
    n.shape = std::move(shape);
    return emit(std::move(n));
  }

  Var<T> scale(Var<T> x, T c) {
    Node n;
    n.op = Op::Scale;
    n.scalar = c;
    n.in = {x.id};
    return emit(std::move(n));
  }

  Var<T> sqrt_elem(Var<T> x) {
    for (T v : node(x).value.data()) {
      if (v < T(0)) throw Error("sqrt_elem of negative value");
    }
    return make(Op::Sqrt, {x.id});
  }

  Var<T> logcosh_elem(Var<T> x) { return make(Op::LogCosh, {x.id}); }

  std::pair<Var<T>, Var<T>> rfft(Var<T> x) {
    require_fft_length(last_dim(node(x).value));
    Var<T> re = make(Op::RfftRe, {x.id});
    Var<T> im = make(Op::RfftIm, {x.id});
    return {re, im};
  }

  // Assembles the half-spectrum pair (boundary imaginary bins forced to
  // zero, with zero gradient to them) and inverse-transforms each row.
  Var<T> irfft(Var<T> re, Var<T> im) {
    const Tensor<T>& rv = node(re).value;
    const Tensor<T>& iv = node(im).value;
    if (!rv.same_shape(iv)) {
      throw DimensionError("irfft halves must share a shape");
    }
    const std::size_t f = last_dim(rv);
    if (f < 3) throw DimensionError("irfft needs at least 3 bins");
    require_fft_length(2 * (f - 1));
    return make(Op::Irfft, {re.id, im.id});
  }

  Var<T> psd(Var<T> x) {
    require_fft_length(last_dim(node(x).value));
    return make(Op::Psd, {x.id});
  }

  Var<T> reduce(Var<T> x, ReduceKind kind) {
    if (node(x).value.size() == 0) {
      throw DimensionError("reduce of empty tensor");
    }
    Node n;
    n.op = Op::Reduce;
    n.red = kind;
    n.in = {x.id};
    return emit(std::move(n));
  }

  // ---- reverse pass ------------------------------------------------------

  GradientMap<T> backward(Var<T> loss) const {
    if (loss.id >= nodes_.size()) {
      throw InvalidGraphError("loss is not a node of this graph");
    }
    if (nodes_[loss.id].value.size() != 1) {
      throw InvalidGraphError("backward requires a scalar loss node");
    }
    std::vector<std::vector<T>> grad(nodes_.size());
    grad[loss.id].assign(1, T(1));
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      if (grad[i].empty() || nodes_[i].op == Op::Leaf) continue;
      backprop_node(static_cast<std::uint32_t>(i), grad);
    }
    GradientMap<T> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].op != Op::Leaf) continue;
      const Tensor<T>& v = nodes_[i].value;
      if (!grad[i].empty()) {
        out.insert(Var<T>{static_cast<std::uint32_t>(i)},
                   Tensor<T>::wrap(v.shape(), std::move(grad[i])));
      } else {
        out.insert(Var<T>{static_cast<std::uint32_t>(i)},
                   Tensor<T>::zeros(v.shape()));
      }
    }
    return out;
  }

  // Re-executes the recorded operations from the leaves up and returns the
  // recomputed value of `out`. Bit-identical to the original execution.
  Tensor<T> replay(Var<T> out) const {
    if (out.id >= nodes_.size()) {
      throw InvalidGraphError("variable is not a node of this graph");
    }
    std::vector<Tensor<T>> vals(out.id + 1);
    for (std::size_t i = 0; i <= out.id; ++i) {
      const Node& n = nodes_[i];
      if (n.op == Op::Leaf) {
        vals[i] = n.value;
      } else {
        std::vector<Tensor<T>> ins;
        ins.reserve(n.in.size());
        for (std::uint32_t j : n.in) vals.at(j);
        for (std::uint32_t j : n.in) ins.push_back(vals[j]);
        vals[i] = eval_op(n, ins);
      }
    }
    return vals[out.id];
  }

 private:
  enum class Op {
    Leaf,
    Conv1dSame,
    BiasAdd,
    Tanh,
    Elu,
    Elementwise,
    Concat,
    Reshape,
    Scale,
    Sqrt,
    LogCosh,
    RfftRe,
    RfftIm,
    Irfft,
    Psd,
    Reduce,
  };

  struct Node {
    Op op = Op::Leaf;
    EwKind ew = EwKind::Add;
    ReduceKind red = ReduceKind::Sum;
    T scalar = T(0);
    std::vector<std::size_t> shape;  // Reshape target
    std::vector<std::uint32_t> in;
    Tensor<T> value;
  };

  static std::size_t last_dim(const Tensor<T>& t) {
    return t.dim(t.rank() - 1);
  }

  const Node& node(Var<T> v) const {
    if (v.id >= nodes_.size()) {
      throw InvalidGraphError("variable does not belong to this graph");
    }
    return nodes_[v.id];
  }

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return {static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var<T> make(Op op, std::vector<std::uint32_t> in) {
    Node n;
    n.op = op;
    n.in = std::move(in);
    return emit(std::move(n));
  }

  Var<T> emit(Node n) {
    std::vector<Tensor<T>> ins;
    ins.reserve(n.in.size());
    for (std::uint32_t j : n.in) ins.push_back(nodes_.at(j).value);
    n.value = eval_op(n, ins);
    return push(std::move(n));
  }

  // Single forward evaluator shared by operation recording and replay().
  Tensor<T> eval_op(const Node& n, const std::vector<Tensor<T>>& in) const {
    switch (n.op) {
      case Op::Leaf:
        return n.value;
      case Op::Conv1dSame: {
        const Tensor<T>& x = in[0];
        const Tensor<T>& ker = in[1];
        const std::size_t cin = x.dim(0), len = x.dim(1);
        const std::size_t cout = ker.dim(0), k = ker.dim(2);
        std::vector<T> out(cout * len);
        detail::conv1d_same(x.raw(), cin, len, ker.raw(), cout, k, out.data(),
                            conv_policy_);
        return Tensor<T>::wrap({cout, len}, std::move(out));
      }
      case Op::BiasAdd: {
        const Tensor<T>& x = in[0];
        const Tensor<T>& b = in[1];
        const std::size_t c = x.dim(0), len = x.dim(1);
        std::vector<T> out(x.data().begin(), x.data().end());
        for (std::size_t i = 0; i < c; ++i) {
          const T bv = b.at(i);
          for (std::size_t t = 0; t < len; ++t) out[i * len + t] += bv;
        }
        return Tensor<T>::wrap(x.shape(), std::move(out));
      }
      case Op::Tanh: {
        std::vector<T> out(in[0].size());
        const auto d = in[0].data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(d[i]);
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::Elu: {
        std::vector<T> out(in[0].size());
        const auto d = in[0].data();
        for (std::size_t i = 0; i < out.size(); ++i) {
          out[i] = d[i] >= T(0) ? d[i] : std::expm1(d[i]);
        }
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::Elementwise: {
        const auto a = in[0].data();
        const auto b = in[1].data();
        std::vector<T> out(a.size());
        switch (n.ew) {
          case EwKind::Add:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
            break;
          case EwKind::Sub:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
            break;
          case EwKind::Mul:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
            break;
          case EwKind::DivEps:
            for (std::size_t i = 0; i < out.size(); ++i) {
              out[i] = a[i] / (b[i] + n.scalar);
            }
            break;
          case EwKind::Div:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
            break;
        }
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::Concat: {
        std::size_t rows = 0;
        const std::size_t f = in[0].dim(1);
        for (const auto& p : in) rows += p.dim(0);
        std::vector<T> out;
        out.reserve(rows * f);
        for (const auto& p : in) {
          out.insert(out.end(), p.data().begin(), p.data().end());
        }
        return Tensor<T>::wrap({rows, f}, std::move(out));
      }
      case Op::Reshape:
        return in[0].reshaped(n.shape);
      case Op::Scale: {
        std::vector<T> out(in[0].size());
        const auto d = in[0].data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = d[i] * n.scalar;
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::Sqrt: {
        std::vector<T> out(in[0].size());
        const auto d = in[0].data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(d[i]);
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::LogCosh: {
        std::vector<T> out(in[0].size());
        const auto d = in[0].data();
        for (std::size_t i = 0; i < out.size(); ++i) {
          out[i] = stable_logcosh(d[i]);
        }
        return Tensor<T>::wrap(in[0].shape(), std::move(out));
      }
      case Op::RfftRe:
      case Op::RfftIm: {
        const Tensor<T>& x = in[0];
        const std::size_t len = last_dim(x);
        const std::size_t rows = x.size() / len;
        const std::size_t f = len / 2 + 1;
        std::vector<T> re(rows * f), im(rows * f);
        detail::rfft_rows(x.raw(), rows, len, re.data(), im.data());
        std::vector<std::size_t> shape = x.shape();
        shape.back() = f;
        return Tensor<T>::wrap(std::move(shape),
                               n.op == Op::RfftRe ? std::move(re)
                                                  : std::move(im));
      }
      case Op::Irfft: {
        const Tensor<T>& re = in[0];
        const Tensor<T>& im = in[1];
        const std::size_t f = last_dim(re);
        const std::size_t rows = re.size() / f;
        const std::size_t len = 2 * (f - 1);
        std::vector<T> out(rows * len);
        detail::irfft_rows(re.raw(), im.raw(), rows, f, out.data());
        std::vector<std::size_t> shape = re.shape();
        shape.back() = len;
        return Tensor<T>::wrap(std::move(shape), std::move(out));
      }
      case Op::Psd: {
        const Tensor<T>& x = in[0];
        const std::size_t len = last_dim(x);
        const std::size_t rows = x.size() / len;
        const std::size_t f = len / 2 + 1;
        std::vector<T> out(rows * f);
        detail::psd_rows(x.raw(), rows, len, out.data());
        std::vector<std::size_t> shape = x.shape();
        shape.back() = f;
        return Tensor<T>::wrap(std::move(shape), std::move(out));
      }
      case Op::Reduce: {
        const auto d = in[0].data();
        double acc = 0.0;
        switch (n.red) {
          case ReduceKind::Sum:
          case ReduceKind::Mean:
            for (T v : d) acc += static_cast<double>(v);
            if (n.red == ReduceKind::Mean) {
              acc /= static_cast<double>(d.size());
            }
            break;
          case ReduceKind::SumSquares:
            for (T v : d) {
              acc += static_cast<double>(v) * static_cast<double>(v);
            }
            break;
        }
        return Tensor<T>::scalar(static_cast<T>(acc));
      }
    }
    throw InvalidGraphError("unknown operation");
  }

  // log(cosh(x)) without overflow for large |x| and without cancellation
  // for tiny |x| (cosh(x)-1 via expm1 keeps the quadratic regime exact).
  static T stable_logcosh(T x) {
    const T a = std::abs(x);
    if (a < T(0.5)) {
      return std::log1p((std::expm1(a) + std::expm1(-a)) / T(2));
    }
    return a + std::log1p(std::exp(T(-2) * a)) -
           static_cast<T>(0.6931471805599453);
  }

  void ensure(std::vector<std::vector<T>>& grad, std::uint32_t id) const {
    if (grad[id].empty()) grad[id].assign(nodes_[id].value.size(), T(0));
  }

  void backprop_node(std::uint32_t id,
                     std::vector<std::vector<T>>& grad) const {
    const Node& n = nodes_[id];
    const std::vector<T>& g = grad[id];
    switch (n.op) {
      case Op::Leaf:
        return;
      case Op::Conv1dSame: {
        const Tensor<T>& x = nodes_[n.in[0]].value;
        const Tensor<T>& ker = nodes_[n.in[1]].value;
        const std::size_t cin = x.dim(0), len = x.dim(1);
        const std::size_t cout = ker.dim(0), k = ker.dim(2);
        ensure(grad, n.in[0]);
        ensure(grad, n.in[1]);
        std::vector<T> gin(cin * len);
        detail::conv1d_same_grad_input(g.data(), ker.raw(), cin, len, cout, k,
                                       gin.data());
        add_into(grad[n.in[0]], gin);
        std::vector<T> gker(cout * cin * k);
        detail::conv1d_same_grad_kernels(g.data(), x.raw(), cin, len, cout, k,
                                         gker.data());
        add_into(grad[n.in[1]], gker);
        return;
      }
      case Op::BiasAdd: {
        const Tensor<T>& x = nodes_[n.in[0]].value;
        const std::size_t c = x.dim(0), len = x.dim(1);
        ensure(grad, n.in[0]);
        add_into(grad[n.in[0]], g);
        ensure(grad, n.in[1]);
        for (std::size_t i = 0; i < c; ++i) {
          double acc = 0.0;
          for (std::size_t t = 0; t < len; ++t) {
            acc += static_cast<double>(g[i * len + t]);
          }
          grad[n.in[1]][i] += static_cast<T>(acc);
        }
        return;
      }
      case Op::Tanh: {
        ensure(grad, n.in[0]);
        const auto y = n.value.data();
        auto& gx = grad[n.in[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * (T(1) - y[i] * y[i]);
        }
        return;
      }
      case Op::Elu: {
        ensure(grad, n.in[0]);
        const auto x = nodes_[n.in[0]].value.data();
        const auto y = n.value.data();
        auto& gx = grad[n.in[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          // derivative at exactly 0 is defined as 1
          gx[i] += x[i] >= T(0) ? g[i] : g[i] * (y[i] + T(1));
        }
        return;
      }
      case Op::Elementwise: {
        const auto a = nodes_[n.in[0]].value.data();
        const auto b = nodes_[n.in[1]].value.data();
        ensure(grad, n.in[0]);
        ensure(grad, n.in[1]);
        auto& ga = grad[n.in[0]];
        auto& gb = grad[n.in[1]];
        switch (n.ew) {
          case EwKind::Add:
            for (std::size_t i = 0; i < g.size(); ++i) {
              ga[i] += g[i];
              gb[i] += g[i];
            }
            break;
          case EwKind::Sub:
            for (std::size_t i = 0; i < g.size(); ++i) {
              ga[i] += g[i];
              gb[i] -= g[i];
            }
            break;
          case EwKind::Mul:
            for (std::size_t i = 0; i < g.size(); ++i) {
              ga[i] += g[i] * b[i];
              gb[i] += g[i] * a[i];
            }
            break;
          case EwKind::DivEps:
          case EwKind::Div: {
            const T eps = n.ew == EwKind::DivEps ? n.scalar : T(0);
            const auto y = n.value.data();
            for (std::size_t i = 0; i < g.size(); ++i) {
              const T d = b[i] + eps;
              ga[i] += g[i] / d;
              gb[i] -= g[i] * y[i] / d;
            }
            break;
          }
        }
        return;
      }
      case Op::Concat: {
        std::size_t row0 = 0;
        const std::size_t f = n.value.dim(1);
        for (std::uint32_t src : n.in) {
          const Tensor<T>& p = nodes_[src].value;
          ensure(grad, src);
          auto& gp = grad[src];
          const std::size_t count = p.dim(0) * f;
          for (std::size_t i = 0; i < count; ++i) {
            gp[i] += g[row0 * f + i];
          }
          row0 += p.dim(0);
        }
        return;
      }
      case Op::Reshape: {
        ensure(grad, n.in[0]);
        add_into(grad[n.in[0]], g);
        return;
      }
      case Op::Scale: {
        ensure(grad, n.in[0]);
        auto& gx = grad[n.in[0]];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.scalar;
        return;
      }
      case Op::Sqrt: {
        ensure(grad, n.in[0]);
        const auto y = n.value.data();
        auto& gx = grad[n.in[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] / (T(2) * y[i]);
        }
        return;
      }
      case Op::LogCosh: {
        ensure(grad, n.in[0]);
        const auto x = nodes_[n.in[0]].value.data();
        auto& gx = grad[n.in[0]];
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i] * std::tanh(x[i]);
        }
        return;
      }
      case Op::RfftRe:
      case Op::RfftIm: {
        const Tensor<T>& x = nodes_[n.in[0]].value;
        const std::size_t len = last_dim(x);
        const std::size_t rows = x.size() / len;
        const std::size_t f = len / 2 + 1;
        std::vector<T> zero(rows * f, T(0));
        std::vector<T> gx(rows * len);
        if (n.op == Op::RfftRe) {
          detail::rfft_adjoint_rows(g.data(), zero.data(), rows, f, gx.data());
        } else {
          detail::rfft_adjoint_rows(zero.data(), g.data(), rows, f, gx.data());
        }
        ensure(grad, n.in[0]);
        add_into(grad[n.in[0]], gx);
        return;
      }
      case Op::Irfft: {
        const std::size_t len = last_dim(n.value);
        const std::size_t rows = n.value.size() / len;
        const std::size_t f = len / 2 + 1;
        std::vector<T> re(rows * f), im(rows * f);
        detail::rfft_rows(g.data(), rows, len, re.data(), im.data());
        ensure(grad, n.in[0]);
        ensure(grad, n.in[1]);
        auto& gre = grad[n.in[0]];
        auto& gim = grad[n.in[1]];
        const T inv_n = T(1) / static_cast<T>(len);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t k = 0; k < f; ++k) {
            const bool boundary = (k == 0 || k == f - 1);
            const T w = boundary ? inv_n : T(2) * inv_n;
            gre[r * f + k] += w * re[r * f + k];
            // boundary imaginary bins are forced to zero in the forward
            // pass, so their gradient is defined as zero
            if (!boundary) gim[r * f + k] += w * im[r * f + k];
          }
        }
        return;
      }
      case Op::Psd: {
        const Tensor<T>& x = nodes_[n.in[0]].value;
        const std::size_t len = last_dim(x);
        const std::size_t rows = x.size() / len;
        const std::size_t f = len / 2 + 1;
        std::vector<T> re(rows * f), im(rows * f);
        detail::rfft_rows(x.raw(), rows, len, re.data(), im.data());
        const T two_over_n = T(2) / static_cast<T>(len);
        for (std::size_t i = 0; i < rows * f; ++i) {
          re[i] *= g[i] * two_over_n;
          im[i] *= g[i] * two_over_n;
        }
        std::vector<T> gx(rows * len);
        detail::rfft_adjoint_rows(re.data(), im.data(), rows, f, gx.data());
        ensure(grad, n.in[0]);
        add_into(grad[n.in[0]], gx);
        return;
      }
      case Op::Reduce: {
        const Tensor<T>& x = nodes_[n.in[0]].value;
        ensure(grad, n.in[0]);
        auto& gx = grad[n.in[0]];
        const T g0 = g[0];
        switch (n.red) {
          case ReduceKind::Sum:
            for (auto& v : gx) v += g0;
            break;
          case ReduceKind::Mean: {
            const T s = g0 / static_cast<T>(x.size());
            for (auto& v : gx) v += s;
            break;
          }
          case ReduceKind::SumSquares: {
            const auto d = x.data();
            for (std::size_t i = 0; i < gx.size(); ++i) {
              gx[i] += T(2) * d[i] * g0;
            }
            break;
          }
        }
        return;
      }
    }
  }

  static void add_into(std::vector<T>& dst, std::span<const T> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  static void add_into(std::vector<T>& dst, const std::vector<T>& src) {
    add_into(dst, std::span<const T>(src.data(), src.size()));
  }

  std::vector<Node> nodes_;
  ConvPolicy conv_policy_;
};

}  // namespace freqdenoise
