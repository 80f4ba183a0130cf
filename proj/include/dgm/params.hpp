#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "dgm/error.hpp"
#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

// One named learnable tensor together with its momentum buffer.
template <typename Real>
struct Param {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> velocity;
};

// Affine map y = W x + b. A handle over two params owned by a ParameterStore.
template <typename Real>
class LinearMap {
 public:
  LinearMap() = default;
  LinearMap(std::string name, Param<Real>* w, Param<Real>* b)
      : name_(std::move(name)), w_(w), b_(b) {}

  const std::string& name() const { return name_; }
  Tensor<Real>& weight() { return w_->value; }
  const Tensor<Real>& weight() const { return w_->value; }
  Tensor<Real>& bias() { return b_->value; }
  const Tensor<Real>& bias() const { return b_->value; }
  Param<Real>* weight_param() const { return w_; }
  Param<Real>* bias_param() const { return b_; }
  int in_dim() const { return w_->value.cols(); }
  int out_dim() const { return w_->value.rows(); }

  // y = W x + b on plain tensors; the traced form lives on the tape.
  Tensor<Real> apply(const Tensor<Real>& x) const {
    check(x.size() == in_dim(), "linear_apply: input length mismatch");
    Tensor<Real> y = Tensor<Real>::vector(out_dim());
    for (int i = 0; i < out_dim(); ++i) {
      Real s = b_->value[i];
      for (int j = 0; j < in_dim(); ++j) s += w_->value(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  std::string name_;
  Param<Real>* w_ = nullptr;
  Param<Real>* b_ = nullptr;
};

template <typename Real>
Tensor<Real> linear_apply(const LinearMap<Real>& map, const Tensor<Real>& x) {
  return map.apply(x);
}

// Ordered, uniquely named collection of learnable tensors. Insertion order is
// the canonical order for optimizer steps, gradient buffers and checkpoints.
template <typename Real>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Param<Real>& add(const std::string& name, Tensor<Real> value) {
    check(by_name_.find(name) == by_name_.end(), "ParameterStore: duplicate name");
    params_.push_back(Param<Real>{name, std::move(value), {}});
    Param<Real>& p = params_.back();
    p.velocity = p.value;
    p.velocity.fill(Real(0));
    by_name_[name] = &p;
    return p;
  }

  // Adds "<name>.weight" (out x in, Glorot-uniform) and "<name>.bias" (zeros).
  LinearMap<Real> add_linear(const std::string& name, int out_dim, int in_dim, Rng& rng) {
    Tensor<Real> w = Tensor<Real>::matrix(out_dim, in_dim);
    double bound = std::sqrt(6.0 / (in_dim + out_dim));
    for (int i = 0; i < w.size(); ++i) w[i] = static_cast<Real>(rng.uniform(-bound, bound));
    Param<Real>& wp = add(name + ".weight", std::move(w));
    Param<Real>& bp = add(name + ".bias", Tensor<Real>::vector(out_dim));
    return LinearMap<Real>(name, &wp, &bp);
  }

  LinearMap<Real> add_linear_zero(const std::string& name, int out_dim, int in_dim) {
    Param<Real>& wp = add(name + ".weight", Tensor<Real>::matrix(out_dim, in_dim));
    Param<Real>& bp = add(name + ".bias", Tensor<Real>::vector(out_dim));
    return LinearMap<Real>(name, &wp, &bp);
  }

  Param<Real>* find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }

  std::size_t entry_count() const { return params_.size(); }

  // Total scalar count across all tensors.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  Param<Real>& at(std::size_t i) { return params_[i]; }
  const Param<Real>& at(std::size_t i) const { return params_[i]; }

  std::size_t index_of(const Param<Real>* p) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (&params_[i] == p) return i;
    throw ContractError("ParameterStore: foreign param");
  }

 private:
  std::deque<Param<Real>> params_;  // deque keeps element addresses stable
  std::unordered_map<std::string, Param<Real>*> by_name_;
};

// Gradient buffers aligned with a store's entry order.
template <typename Real>
class Gradients {
 public:
  explicit Gradients(const ParameterStore<Real>& store) {
    grads_.reserve(store.entry_count());
    for (const auto& p : store) {
      Tensor<Real> g = p.value;
      g.fill(Real(0));
      grads_.push_back(std::move(g));
    }
  }

  Tensor<Real>& at(std::size_t i) { return grads_[i]; }
  const Tensor<Real>& at(std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero() {
    for (auto& g : grads_) g.fill(Real(0));
  }

  void scale_all(Real s) {
    for (auto& g : grads_)
      for (int i = 0; i < g.size(); ++i) g[i] *= s;
  }

 private:
  std::vector<Tensor<Real>> grads_;
};

// Copies every parameter whose name and shape both match from src into dst,
// resetting the copied entries' momentum. Returns the number of tensors
// copied. Lets a model warm-start from a relative trained under a config that
// shares components (extra parts keep their fresh initialization).
template <typename Real>
std::size_t copy_matching_parameters(ParameterStore<Real>& dst, const ParameterStore<Real>& src) {
  std::size_t copied = 0;
  for (const auto& s : src) {
    Param<Real>* d = dst.find(s.name);
    if (d == nullptr || !d->value.same_shape(s.value)) continue;
    d->value = s.value;
    d->velocity.fill(Real(0));
    ++copied;
  }
  return copied;
}

// Rescales the whole gradient set so its global L2 norm is at most max_norm.
// Returns the norm before clipping. Recurrent unrolls occasionally throw huge
// gradients; without a ceiling one bad batch can destroy the parameters.
template <typename Real>
Real clip_gradient_norm(Gradients<Real>& grads, Real max_norm) {
  check(max_norm > Real(0), "clip_gradient_norm: max_norm must be positive");
  Real sq = 0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Tensor<Real>& g = grads.at(i);
    for (int k = 0; k < g.size(); ++k) sq += g[k] * g[k];
  }
  const Real norm = std::sqrt(sq);
  if (norm > max_norm) grads.scale_all(max_norm / norm);
  return norm;
}

// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v
template <typename Real>
void sgd_momentum_step(ParameterStore<Real>& store, const Gradients<Real>& grads, Real lr,
                       Real momentum, Real weight_decay) {
  check(lr >= Real(0), "sgd_momentum_step: lr must be nonnegative");
  check(grads.size() == store.entry_count(), "sgd_momentum_step: gradient count mismatch");
  std::size_t i = 0;
  for (auto& p : store) {
    const Tensor<Real>& g = grads.at(i++);
    check(g.same_shape(p.value), "sgd_momentum_step: gradient shape mismatch");
    for (int k = 0; k < p.value.size(); ++k) {
      Real d = g[k] + weight_decay * p.value[k];
      p.velocity[k] = momentum * p.velocity[k] + d;
      p.value[k] -= lr * p.velocity[k];
    }
  }
}

}  // namespace dgm
