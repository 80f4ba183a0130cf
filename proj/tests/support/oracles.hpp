#pragma once

// Naive reference implementations used as oracles. Everything here is written
// as plain nested loops over raw tensors, independent of the tape and of the
// library's matrix kernels, so agreement is meaningful. Summation runs in
// ascending index order to match the library's fixed reduction order.

#include <cmath>
#include <vector>

#include "dgm/box.hpp"
#include "dgm/params.hpp"
#include "dgm/proposal.hpp"
#include "dgm/tensor.hpp"

namespace oracle {

using dgm::Box;
using dgm::Tensor;

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  auto out = Tensor<Real>::matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Real acc = 0;
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

// out = a * b^T
template <typename Real>
Tensor<Real> matmul_nt(const Tensor<Real>& a, const Tensor<Real>& b) {
  auto out = Tensor<Real>::matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      Real acc = 0;
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  return out;
}

// out = a^T * b
template <typename Real>
Tensor<Real> matmul_tn(const Tensor<Real>& a, const Tensor<Real>& b) {
  auto out = Tensor<Real>::matrix(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Real acc = 0;
      for (int k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      out(i, j) = acc;
    }
  return out;
}

template <typename Real>
Tensor<Real> softmax_columns(const Tensor<Real>& a) {
  auto out = Tensor<Real>::matrix(a.rows(), a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    Real hi = a(0, j);
    for (int i = 1; i < a.rows(); ++i) hi = std::max(hi, a(i, j));
    Real total = 0;
    for (int i = 0; i < a.rows(); ++i) total += std::exp(a(i, j) - hi);
    for (int i = 0; i < a.rows(); ++i) out(i, j) = std::exp(a(i, j) - hi) / total;
  }
  return out;
}

template <typename Real>
Tensor<Real> l1_normalize_columns(const Tensor<Real>& a) {
  auto out = Tensor<Real>::matrix(a.rows(), a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    Real total = 0;
    for (int i = 0; i < a.rows(); ++i) total += a(i, j);
    for (int i = 0; i < a.rows(); ++i) out(i, j) = total == Real(0) ? Real(0) : a(i, j) / total;
  }
  return out;
}

// Applies y = W x + b to every row of x (rows are feature vectors).
template <typename Real>
Tensor<Real> linear_rows(const Tensor<Real>& w, const Tensor<Real>& bias, const Tensor<Real>& x) {
  auto out = Tensor<Real>::matrix(x.rows(), w.rows());
  for (int r = 0; r < x.rows(); ++r)
    for (int o = 0; o < w.rows(); ++o) {
      Real acc = bias[o];
      for (int k = 0; k < w.cols(); ++k) acc += w(o, k) * x(r, k);
      out(r, o) = acc;
    }
  return out;
}

template <typename Real>
Tensor<Real> linear_vec(const Tensor<Real>& w, const Tensor<Real>& bias, const Tensor<Real>& x) {
  auto out = Tensor<Real>::vector(w.rows());
  for (int o = 0; o < w.rows(); ++o) {
    Real acc = bias[o];
    for (int k = 0; k < w.cols(); ++k) acc += w(o, k) * x[k];
    out[o] = acc;
  }
  return out;
}

template <typename Real>
Real sigmoid(Real v) {
  return v >= Real(0) ? Real(1) / (Real(1) + std::exp(-v))
                      : std::exp(v) / (Real(1) + std::exp(v));
}

// Raw weight view of one of the library's linear maps.
template <typename Real>
struct MapRef {
  const Tensor<Real>& w;
  const Tensor<Real>& b;
  explicit MapRef(const dgm::LinearMap<Real>& m)
      : w(m.weight_param()->value), b(m.bias_param()->value) {}
};

// gate = sig(Wm x + Wmh xhat) per row; out = gate.x + (1-gate).xhat
template <typename Real>
Tensor<Real> gated_merge_rows(const Tensor<Real>& x, const Tensor<Real>& xhat,
                              const MapRef<Real>& merge, const MapRef<Real>& merge_hat) {
  const auto a = oracle::linear_rows(merge.w, merge.b, x);
  const auto b = oracle::linear_rows(merge_hat.w, merge_hat.b, xhat);
  auto out = Tensor<Real>::matrix(x.rows(), x.cols());
  for (int i = 0; i < out.size(); ++i) {
    const Real gate = oracle::sigmoid(a[i] + b[i]);
    out[i] = gate * x[i] + (Real(1) - gate) * xhat[i];
  }
  return out;
}

template <typename Real>
struct VisualMaps {
  MapRef<Real> h, g, phi, merge, merge_hat;
};

template <typename Real>
Tensor<Real> visual_cross_update(const Tensor<Real>& nodes, const Tensor<Real>& proposals,
                                 const VisualMaps<Real>& m) {
  const auto hb = oracle::linear_rows(m.h.w, m.h.b, proposals);
  const auto gx = oracle::linear_rows(m.g.w, m.g.b, nodes);
  const auto norm = oracle::softmax_columns(oracle::matmul_nt(hb, gx));
  const auto inflow = oracle::matmul_tn(norm, hb);
  return oracle::gated_merge_rows(nodes, inflow, m.merge, m.merge_hat);
}

template <typename Real>
Tensor<Real> visual_self_update(const Tensor<Real>& nodes, const VisualMaps<Real>& m,
                                int rounds = 1) {
  Tensor<Real> x = nodes;
  for (int r = 0; r < rounds; ++r) {
    const auto phix = oracle::linear_rows(m.phi.w, m.phi.b, x);
    const auto norm = oracle::softmax_columns(oracle::matmul_nt(phix, phix));
    const auto inflow = oracle::matmul_tn(norm, phix);
    x = oracle::gated_merge_rows(x, inflow, m.merge, m.merge_hat);
  }
  return x;
}

template <typename Real>
Tensor<Real> iou_matrix(const std::vector<Box<Real>>& rows, const std::vector<Box<Real>>& cols) {
  auto out = Tensor<Real>::matrix(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<int>(n), static_cast<int>(c)) = dgm::iou(rows[n], cols[c]);
  return out;
}

template <typename Real>
struct LocationMaps {
  MapRef<Real> p, psi;
};

template <typename Real>
struct LocationStep {
  Tensor<Real> nodes;
  std::vector<Box<Real>> boxes;
};

template <typename Real>
LocationStep<Real> location_cross_update(const Tensor<Real>& nodes,
                                         const std::vector<Box<Real>>& node_boxes,
                                         const Tensor<Real>& proposals,
                                         const std::vector<Box<Real>>& proposal_boxes,
                                         const LocationMaps<Real>& m) {
  const auto norm = oracle::l1_normalize_columns(oracle::iou_matrix(proposal_boxes, node_boxes));
  const auto pb = oracle::linear_rows(m.p.w, m.p.b, proposals);
  const auto inflow = oracle::matmul_tn(norm, pb);
  LocationStep<Real> out{Tensor<Real>::matrix(nodes.rows(), nodes.cols()), node_boxes};
  for (int i = 0; i < nodes.size(); ++i)
    out.nodes[i] = std::max(Real(0), nodes[i] + inflow[i]);
  for (int c = 0; c < norm.cols(); ++c) {
    Real total = 0;
    for (int n = 0; n < norm.rows(); ++n) total += norm(n, c);
    if (total == Real(0)) continue;
    Real mx1 = 0, my1 = 0, mx2 = 0, my2 = 0;
    for (int n = 0; n < norm.rows(); ++n) {
      const auto& b = proposal_boxes[static_cast<std::size_t>(n)];
      mx1 += norm(n, c) * b.x1;
      my1 += norm(n, c) * b.y1;
      mx2 += norm(n, c) * b.x2;
      my2 += norm(n, c) * b.y2;
    }
    auto& b = out.boxes[static_cast<std::size_t>(c)];
    b = Box<Real>{(b.x1 + mx1) / 2, (b.y1 + my1) / 2, (b.x2 + mx2) / 2, (b.y2 + my2) / 2};
  }
  return out;
}

template <typename Real>
Tensor<Real> location_self_update(const Tensor<Real>& nodes,
                                  const std::vector<Box<Real>>& node_boxes,
                                  const LocationMaps<Real>& m, int rounds = 1) {
  Tensor<Real> x = nodes;
  for (int r = 0; r < rounds; ++r) {
    const auto norm = oracle::l1_normalize_columns(oracle::iou_matrix(node_boxes, node_boxes));
    const auto psix = oracle::linear_rows(m.psi.w, m.psi.b, x);
    const auto inflow = oracle::matmul_tn(norm, psix);
    for (int i = 0; i < x.size(); ++i) x[i] = std::max(Real(0), x[i] + inflow[i]);
  }
  return x;
}

template <typename Real>
struct AttendOut {
  Tensor<Real> alpha;
  Tensor<Real> query;
};

template <typename Real>
AttendOut<Real> attend(const Tensor<Real>& nodes, const Tensor<Real>& query,
                       const MapRef<Real>& wq, const MapRef<Real>& wn,
                       const MapRef<Real>& score) {
  const auto qpart = oracle::linear_vec(wq.w, wq.b, query);
  const auto npart = oracle::linear_rows(wn.w, wn.b, nodes);
  const int m = nodes.rows(), d = nodes.cols();
  auto raw = Tensor<Real>::matrix(m, 1);
  for (int i = 0; i < m; ++i) {
    Real acc = score.b[0];
    for (int k = 0; k < d; ++k) acc += score.w(0, k) * std::tanh(npart(i, k) + qpart[k]);
    raw(i, 0) = acc;
  }
  const auto alpha = oracle::softmax_columns(raw);
  auto out = Tensor<Real>::vector(d);
  for (int k = 0; k < d; ++k) {
    Real acc = 0;
    for (int i = 0; i < m; ++i) acc += alpha(i, 0) * nodes(i, k);
    out[k] = acc;
  }
  return {alpha, out};
}

template <typename Real>
Tensor<Real> classify(const Tensor<Real>& x, const MapRef<Real>& hidden, const MapRef<Real>& out) {
  auto h = oracle::linear_vec(hidden.w, hidden.b, x);
  for (int i = 0; i < h.size(); ++i) h[i] = std::max(Real(0), h[i]);
  return oracle::linear_vec(out.w, out.b, h);
}

}  // namespace oracle
