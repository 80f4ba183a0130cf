#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "dgm/error.hpp"

namespace dgm {

// Dense row-major value of rank 0, 1 or 2. A scalar is 1x1, a vector is n x 1.
// Rank is carried explicitly so shape contracts can be enforced, but storage
// and arithmetic treat everything as a matrix.
template <typename Real>
class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(Real v) {
    Tensor t;
    t.rank_ = 0;
    t.rows_ = t.cols_ = 1;
    t.data_.assign(1, v);
    return t;
  }

  static Tensor vector(int n) {
    check(n >= 1, "Tensor::vector: length must be >= 1");
    Tensor t;
    t.rank_ = 1;
    t.rows_ = n;
    t.cols_ = 1;
    t.data_.assign(static_cast<std::size_t>(n), Real(0));
    return t;
  }

  static Tensor vector(std::initializer_list<Real> vals) {
    Tensor t = vector(static_cast<int>(vals.size()));
    std::copy(vals.begin(), vals.end(), t.data_.begin());
    return t;
  }

  static Tensor matrix(int rows, int cols) {
    check(rows >= 1 && cols >= 1, "Tensor::matrix: dims must be >= 1");
    Tensor t;
    t.rank_ = 2;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_.assign(static_cast<std::size_t>(rows) * cols, Real(0));
    return t;
  }

  static Tensor matrix(int rows, int cols, std::initializer_list<Real> vals) {
    Tensor t = matrix(rows, cols);
    check(vals.size() == t.data_.size(), "Tensor::matrix: value count mismatch");
    std::copy(vals.begin(), vals.end(), t.data_.begin());
    return t;
  }

  int rank() const { return rank_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool empty() const { return data_.empty(); }

  Real& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  Real operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  Real& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  Real value() const {
    check(size() == 1, "Tensor::value: not a scalar");
    return data_[0];
  }

  std::vector<Real>& data() { return data_; }
  const std::vector<Real>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (Real v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int rank_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Real> data_;
};

namespace detail {
template <typename Real>
Tensor<Real> like(const Tensor<Real>& t) {
  Tensor<Real> r = t;
  r.fill(Real(0));
  return r;
}
}  // namespace detail

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.same_shape(b), "add: shape mismatch");
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.same_shape(b), "sub: shape mismatch");
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

template <typename Real>
Tensor<Real> hadamard(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.same_shape(b), "hadamard: shape mismatch");
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= b[i];
  return r;
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real s) {
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= s;
  return r;
}

// C = A * B
template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.cols() == b.rows(), "matmul: inner dims mismatch");
  Tensor<Real> c = Tensor<Real>::matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      Real aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// C = A * B^T
template <typename Real>
Tensor<Real> matmul_nt(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.cols() == b.cols(), "matmul_nt: inner dims mismatch");
  Tensor<Real> c = Tensor<Real>::matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      Real s = 0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

// C = A^T * B
template <typename Real>
Tensor<Real> matmul_tn(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.rows() == b.rows(), "matmul_tn: inner dims mismatch");
  Tensor<Real> c = Tensor<Real>::matrix(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k)
    for (int i = 0; i < a.cols(); ++i) {
      Real aki = a(k, i);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  Tensor<Real> r = Tensor<Real>::matrix(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
  return r;
}

template <typename Real>
Real dot(const Tensor<Real>& a, const Tensor<Real>& b) {
  check(a.size() == b.size(), "dot: length mismatch");
  Real s = 0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// --- activations ---

template <typename Real>
Real sigmoid_scalar(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& a) {
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] = sigmoid_scalar(r[i]);
  return r;
}

template <typename Real>
Tensor<Real> tanh_t(const Tensor<Real>& a) {
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] = std::tanh(r[i]);
  return r;
}

template <typename Real>
Tensor<Real> relu(const Tensor<Real>& a) {
  Tensor<Real> r = a;
  for (int i = 0; i < r.size(); ++i) r[i] = r[i] > Real(0) ? r[i] : Real(0);
  return r;
}

// Max-subtracted softmax over a vector.
template <typename Real>
Tensor<Real> softmax_vector(const Tensor<Real>& a) {
  check(a.size() >= 1, "softmax_vector: empty input");
  Tensor<Real> r = a;
  Real mx = r[0];
  for (int i = 1; i < r.size(); ++i) mx = std::max(mx, r[i]);
  Real sum = 0;
  for (int i = 0; i < r.size(); ++i) {
    r[i] = std::exp(r[i] - mx);
    sum += r[i];
  }
  for (int i = 0; i < r.size(); ++i) r[i] /= sum;
  return r;
}

// Softmax over the rows within each column (normalizes every column to sum 1).
template <typename Real>
Tensor<Real> softmax_columns(const Tensor<Real>& a) {
  check(a.rows() >= 1, "softmax_columns: empty input");
  Tensor<Real> r = a;
  for (int j = 0; j < a.cols(); ++j) {
    Real mx = a(0, j);
    for (int i = 1; i < a.rows(); ++i) mx = std::max(mx, a(i, j));
    Real sum = 0;
    for (int i = 0; i < a.rows(); ++i) {
      Real e = std::exp(a(i, j) - mx);
      r(i, j) = e;
      sum += e;
    }
    for (int i = 0; i < a.rows(); ++i) r(i, j) /= sum;
  }
  return r;
}

// L1 column normalization for nonnegative weights. An all-zero column stays
// all-zero (the node receives no message that step).
template <typename Real>
Tensor<Real> l1_normalize_columns(const Tensor<Real>& a) {
  Tensor<Real> r = a;
  for (int j = 0; j < a.cols(); ++j) {
    Real sum = 0;
    for (int i = 0; i < a.rows(); ++i) {
      check(a(i, j) >= Real(0), "l1_normalize_columns: negative entry");
      sum += a(i, j);
    }
    if (sum > Real(0))
      for (int i = 0; i < a.rows(); ++i) r(i, j) /= sum;
  }
  return r;
}

enum class Activation { Sigmoid, Tanh, Relu, SoftmaxVector };

template <typename Real>
Tensor<Real> activation(Activation kind, const Tensor<Real>& a) {
  switch (kind) {
    case Activation::Sigmoid: return sigmoid(a);
    case Activation::Tanh: return tanh_t(a);
    case Activation::Relu: return relu(a);
    case Activation::SoftmaxVector: return softmax_vector(a);
  }
  throw ContractError("activation: unknown kind");
}

}  // namespace dgm
