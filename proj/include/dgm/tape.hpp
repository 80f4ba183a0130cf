#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dgm/error.hpp"
#include "dgm/params.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

// Reverse-mode tape over tensor-level operations. Builders compute forward
// values eagerly (delegating to the plain tensor kernels) and record enough
// structure for backward(). Parameter leaves are memoized per Param, so a
// parameter reused at many sites (the graph maps are applied every time step)
// accumulates its gradient additively across all uses.
template <typename Real>
class Tape {
 public:
  using Id = std::int32_t;

  Id constant(Tensor<Real> v) { return push(Op::Constant, -1, -1, -1, std::move(v)); }

  Id param(Param<Real>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Id id = push(Op::Parameter, -1, -1, -1, p.value);
    param_nodes_[&p] = id;
    return id;
  }

  Id add(Id a, Id b) { return push(Op::Add, a, b, -1, dgm::add(val(a), val(b))); }
  Id sub(Id a, Id b) { return push(Op::Sub, a, b, -1, dgm::sub(val(a), val(b))); }
  Id hadamard(Id a, Id b) { return push(Op::Hadamard, a, b, -1, dgm::hadamard(val(a), val(b))); }

  Id scale(Id a, Real s) {
    Id id = push(Op::Scale, a, -1, -1, dgm::scale(val(a), s));
    nodes_[id].scalar = s;
    return id;
  }

  Id one_minus(Id a) {
    Tensor<Real> v = val(a);
    for (int i = 0; i < v.size(); ++i) v[i] = Real(1) - v[i];
    return push(Op::OneMinus, a, -1, -1, std::move(v));
  }

  // matrix [M x A] plus vector [A] broadcast over rows
  Id add_row_vector(Id m, Id v) {
    const Tensor<Real>& mv = val(m);
    const Tensor<Real>& vv = val(v);
    check(vv.cols() == 1 && vv.rows() == mv.cols(), "add_row_vector: length mismatch");
    Tensor<Real> out = mv;
    for (int i = 0; i < mv.rows(); ++i)
      for (int j = 0; j < mv.cols(); ++j) out(i, j) += vv[j];
    return push(Op::AddRowVec, m, v, -1, std::move(out));
  }

  Id matmul(Id a, Id b) { return push(Op::MatMulNN, a, b, -1, dgm::matmul(val(a), val(b))); }
  Id matmul_nt(Id a, Id b) { return push(Op::MatMulNT, a, b, -1, dgm::matmul_nt(val(a), val(b))); }
  Id matmul_tn(Id a, Id b) { return push(Op::MatMulTN, a, b, -1, dgm::matmul_tn(val(a), val(b))); }

  // y = W x + b for a column-shaped x
  Id linear(const LinearMap<Real>& map, Id x) {
    Id w = param(*map.weight_param());
    Id b = param(*map.bias_param());
    const Tensor<Real>& xv = val(x);
    check(xv.cols() == 1 && xv.rows() == map.in_dim(), "linear: input length mismatch");
    return push(Op::Linear, x, w, b, map.apply(xv));
  }

  // Y = X W^T + b per row, for a row-batch X [N x in]
  Id linear_rows(const LinearMap<Real>& map, Id x) {
    Id w = param(*map.weight_param());
    Id b = param(*map.bias_param());
    const Tensor<Real>& xv = val(x);
    check(xv.cols() == map.in_dim(), "linear_rows: input width mismatch");
    Tensor<Real> out = dgm::matmul_nt(xv, map.weight());
    for (int i = 0; i < out.rows(); ++i)
      for (int j = 0; j < out.cols(); ++j) out(i, j) += map.bias()[j];
    return push(Op::LinearRows, x, w, b, std::move(out));
  }

  Id sigmoid(Id a) { return push(Op::Sigmoid, a, -1, -1, dgm::sigmoid(val(a))); }
  Id tanh(Id a) { return push(Op::Tanh, a, -1, -1, dgm::tanh_t(val(a))); }
  Id relu(Id a) { return push(Op::Relu, a, -1, -1, dgm::relu(val(a))); }

  Id softmax_vector(Id a) {
    check(val(a).cols() == 1, "softmax_vector: expects a column");
    return push(Op::SoftmaxCols, a, -1, -1, dgm::softmax_vector(val(a)));
  }

  Id softmax_columns(Id a) { return push(Op::SoftmaxCols, a, -1, -1, dgm::softmax_columns(val(a))); }

  Id dot(Id a, Id b) {
    return push(Op::Dot, a, b, -1, Tensor<Real>::scalar(dgm::dot(val(a), val(b))));
  }

  Id concat(Id a, Id b) {
    const Tensor<Real>& av = val(a);
    const Tensor<Real>& bv = val(b);
    check(av.cols() == 1 && bv.cols() == 1, "concat: expects columns");
    Tensor<Real> out = Tensor<Real>::vector(av.rows() + bv.rows());
    for (int i = 0; i < av.rows(); ++i) out[i] = av[i];
    for (int i = 0; i < bv.rows(); ++i) out[av.rows() + i] = bv[i];
    return push(Op::Concat, a, b, -1, std::move(out));
  }

  // -log softmax(logits)[label], computed via log-sum-exp
  Id cross_entropy(Id logits, int label) {
    const Tensor<Real>& lv = val(logits);
    check(lv.cols() == 1, "cross_entropy: logits must be a column");
    check(label >= 0 && label < lv.rows(), "cross_entropy: label out of range");
    Real mx = lv[0];
    for (int i = 1; i < lv.size(); ++i) mx = std::max(mx, lv[i]);
    Real sum = 0;
    for (int i = 0; i < lv.size(); ++i) sum += std::exp(lv[i] - mx);
    Real loss = mx + std::log(sum) - lv[label];
    Id id = push(Op::CrossEntropy, logits, -1, -1, Tensor<Real>::scalar(loss));
    nodes_[id].label = label;
    return id;
  }

  const Tensor<Real>& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  // Gradient of the last backward() root w.r.t. node id (zeros if untouched).
  Tensor<Real> grad(Id id) const {
    const Tensor<Real>& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) return detail::like(value(id));
    return g;
  }

  void backward(Id root) {
    check(!nodes_.empty(), "backward: empty tape");
    check(root >= 0 && static_cast<std::size_t>(root) < nodes_.size(), "backward: bad root");
    check(value(root).size() == 1, "backward: root is not a scalar");
    grads_.assign(nodes_.size(), Tensor<Real>());
    grad_ref(root)[0] = Real(1);
    for (Id i = root; i >= 0; --i) {
      if (grads_[static_cast<std::size_t>(i)].empty()) continue;
      propagate(i);
    }
  }

  // Adds this tape's parameter gradients into buffers aligned with the store.
  void accumulate_param_grads(const ParameterStore<Real>& store, Gradients<Real>& out) const {
    for (const auto& [p, id] : param_nodes_) {
      const Tensor<Real>& g = grads_[static_cast<std::size_t>(id)];
      if (g.empty()) continue;
      Tensor<Real>& acc = out.at(store.index_of(p));
      for (int i = 0; i < acc.size(); ++i) acc[i] += g[i];
    }
  }

  Tensor<Real> grad_of(const Param<Real>& p) const {
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end() || grads_[static_cast<std::size_t>(it->second)].empty()) {
      Tensor<Real> z = p.value;
      z.fill(Real(0));
      return z;
    }
    return grads_[static_cast<std::size_t>(it->second)];
  }

  std::size_t node_count() const { return nodes_.size(); }

  void reset() {
    nodes_.clear();
    grads_.clear();
    param_nodes_.clear();
  }

 private:
  enum class Op : std::uint8_t {
    Constant,
    Parameter,
    Add,
    Sub,
    Hadamard,
    Scale,
    OneMinus,
    AddRowVec,
    MatMulNN,
    MatMulNT,
    MatMulTN,
    Linear,
    LinearRows,
    Sigmoid,
    Tanh,
    Relu,
    SoftmaxCols,
    Dot,
    Concat,
    CrossEntropy,
  };

  struct Node {
    Op op;
    Id a, b, c;
    Tensor<Real> value;
    Real scalar = Real(0);
    int label = 0;
  };

  Id push(Op op, Id a, Id b, Id c, Tensor<Real> v) {
    nodes_.push_back(Node{op, a, b, c, std::move(v)});
    return static_cast<Id>(nodes_.size() - 1);
  }

  const Tensor<Real>& val(Id id) const {
    check(id >= 0 && static_cast<std::size_t>(id) < nodes_.size(), "tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)].value;
  }

  Tensor<Real>& grad_ref(Id id) {
    Tensor<Real>& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g = detail::like(nodes_[static_cast<std::size_t>(id)].value);
    return g;
  }

  void propagate(Id i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    // Inputs always precede node i, so gy never aliases an operand gradient.
    const Tensor<Real>& gy = grads_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Constant:
      case Op::Parameter:
        break;
      case Op::Add: {
        axpy(grad_ref(n.a), gy, Real(1));
        axpy(grad_ref(n.b), gy, Real(1));
        break;
      }
      case Op::Sub: {
        axpy(grad_ref(n.a), gy, Real(1));
        axpy(grad_ref(n.b), gy, Real(-1));
        break;
      }
      case Op::Hadamard: {
        Tensor<Real>& ga = grad_ref(n.a);
        Tensor<Real>& gb = grad_ref(n.b);
        const Tensor<Real>& av = val(n.a);
        const Tensor<Real>& bv = val(n.b);
        for (int k = 0; k < gy.size(); ++k) {
          ga[k] += gy[k] * bv[k];
          gb[k] += gy[k] * av[k];
        }
        break;
      }
      case Op::Scale:
        axpy(grad_ref(n.a), gy, n.scalar);
        break;
      case Op::OneMinus:
        axpy(grad_ref(n.a), gy, Real(-1));
        break;
      case Op::AddRowVec: {
        axpy(grad_ref(n.a), gy, Real(1));
        Tensor<Real>& gb = grad_ref(n.b);
        for (int r = 0; r < gy.rows(); ++r)
          for (int c = 0; c < gy.cols(); ++c) gb[c] += gy(r, c);
        break;
      }
      case Op::MatMulNN: {
        axpy(grad_ref(n.a), dgm::matmul_nt(gy, val(n.b)), Real(1));
        axpy(grad_ref(n.b), dgm::matmul_tn(val(n.a), gy), Real(1));
        break;
      }
      case Op::MatMulNT: {
        axpy(grad_ref(n.a), dgm::matmul(gy, val(n.b)), Real(1));
        axpy(grad_ref(n.b), dgm::matmul_tn(gy, val(n.a)), Real(1));
        break;
      }
      case Op::MatMulTN: {
        axpy(grad_ref(n.a), dgm::matmul_nt(val(n.b), gy), Real(1));
        axpy(grad_ref(n.b), dgm::matmul(val(n.a), gy), Real(1));
        break;
      }
      case Op::Linear: {
        const Tensor<Real>& xv = val(n.a);
        const Tensor<Real>& wv = val(n.b);
        Tensor<Real>& gx = grad_ref(n.a);
        Tensor<Real>& gw = grad_ref(n.b);
        Tensor<Real>& gb = grad_ref(n.c);
        for (int o = 0; o < wv.rows(); ++o) {
          Real gyo = gy[o];
          gb[o] += gyo;
          for (int j = 0; j < wv.cols(); ++j) {
            gx[j] += wv(o, j) * gyo;
            gw(o, j) += gyo * xv[j];
          }
        }
        break;
      }
      case Op::LinearRows: {
        const Tensor<Real>& xv = val(n.a);
        const Tensor<Real>& wv = val(n.b);
        axpy(grad_ref(n.a), dgm::matmul(gy, wv), Real(1));
        axpy(grad_ref(n.b), dgm::matmul_tn(gy, xv), Real(1));
        Tensor<Real>& gb = grad_ref(n.c);
        for (int r = 0; r < gy.rows(); ++r)
          for (int c = 0; c < gy.cols(); ++c) gb[c] += gy(r, c);
        break;
      }
      case Op::Sigmoid: {
        Tensor<Real>& ga = grad_ref(n.a);
        for (int k = 0; k < gy.size(); ++k) {
          Real y = n.value[k];
          ga[k] += gy[k] * y * (Real(1) - y);
        }
        break;
      }
      case Op::Tanh: {
        Tensor<Real>& ga = grad_ref(n.a);
        for (int k = 0; k < gy.size(); ++k) {
          Real y = n.value[k];
          ga[k] += gy[k] * (Real(1) - y * y);
        }
        break;
      }
      case Op::Relu: {
        Tensor<Real>& ga = grad_ref(n.a);
        const Tensor<Real>& xv = val(n.a);
        for (int k = 0; k < gy.size(); ++k)
          if (xv[k] > Real(0)) ga[k] += gy[k];
        break;
      }
      case Op::SoftmaxCols: {
        Tensor<Real>& ga = grad_ref(n.a);
        const Tensor<Real>& y = n.value;
        for (int c = 0; c < y.cols(); ++c) {
          Real inner = 0;
          for (int r = 0; r < y.rows(); ++r) inner += y(r, c) * gy(r, c);
          for (int r = 0; r < y.rows(); ++r) ga(r, c) += y(r, c) * (gy(r, c) - inner);
        }
        break;
      }
      case Op::Dot: {
        Real s = gy[0];
        axpy(grad_ref(n.a), val(n.b), s);
        axpy(grad_ref(n.b), val(n.a), s);
        break;
      }
      case Op::Concat: {
        Tensor<Real>& ga = grad_ref(n.a);
        Tensor<Real>& gb = grad_ref(n.b);
        for (int k = 0; k < ga.size(); ++k) ga[k] += gy[k];
        for (int k = 0; k < gb.size(); ++k) gb[k] += gy[ga.size() + k];
        break;
      }
      case Op::CrossEntropy: {
        Tensor<Real>& ga = grad_ref(n.a);
        Tensor<Real> p = dgm::softmax_vector(val(n.a));
        Real s = gy[0];
        for (int k = 0; k < p.size(); ++k) ga[k] += s * (p[k] - (k == n.label ? Real(1) : Real(0)));
        break;
      }
    }
  }

  static void axpy(Tensor<Real>& acc, const Tensor<Real>& x, Real s) {
    check(acc.size() == x.size(), "tape backward: shape mismatch");
    for (int k = 0; k < acc.size(); ++k) acc[k] += s * x[k];
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<Real>> grads_;
  std::unordered_map<const Param<Real>*, Id> param_nodes_;
};

}  // namespace dgm
