#pragma once

#include <string>

#include "dgm/params.hpp"
#include "dgm/proposal.hpp"
#include "dgm/rng.hpp"
#include "dgm/tape.hpp"

namespace dgm {

// Additive attention over graph nodes, queried by a running summary vector.
template <typename Real>
struct AttentionParams {
  LinearMap<Real> query;  // W_g, applied to the query
  LinearMap<Real> node;   // W_h, applied to each node state
  LinearMap<Real> score;  // W_o, row map from the joint embedding to a logit

  static AttentionParams make(ParameterStore<Real>& store, const std::string& prefix, int d,
                              Rng& rng) {
    AttentionParams p;
    p.query = store.add_linear(prefix + ".query", d, d, rng);
    p.node = store.add_linear(prefix + ".node", d, d, rng);
    p.score = store.add_linear(prefix + ".score", 1, d, rng);
    return p;
  }
};

template <typename Real>
struct AttendResult {
  typename Tape<Real>::Id attention;  // M x 1, sums to one
  typename Tape<Real>::Id query;      // D x 1 refreshed summary
};

// e_m = tanh(Wg q + Wh x_m); alpha = softmax(Wo e); q' = sum_m alpha_m x_m.
template <typename Real>
AttendResult<Real> attend(Tape<Real>& tape, const AttentionParams<Real>& params,
                          typename Tape<Real>::Id query, typename Tape<Real>::Id nodes) {
  auto joint = tape.tanh(
      tape.add_row_vector(tape.linear_rows(params.node, nodes), tape.linear(params.query, query)));
  auto alpha = tape.softmax_vector(tape.linear_rows(params.score, joint));
  auto refreshed = tape.matmul_tn(nodes, alpha);
  return {alpha, refreshed};
}

// Two-layer classifier head. Dropout keeps expectation by scaling survivors.
template <typename Real>
struct HeadParams {
  LinearMap<Real> hidden;
  LinearMap<Real> out;
  Real dropout = 0;

  static HeadParams make(ParameterStore<Real>& store, const std::string& prefix, int in_dim,
                         int num_classes, Rng& rng, Real dropout = 0) {
    check(dropout >= 0 && dropout < 1, "HeadParams: dropout must lie in [0, 1)");
    HeadParams p;
    p.hidden = store.add_linear(prefix + ".hidden", in_dim, in_dim, rng);
    p.out = store.add_linear(prefix + ".out", num_classes, in_dim, rng);
    p.dropout = dropout;
    return p;
  }
};

template <typename Real>
typename Tape<Real>::Id classify(Tape<Real>& tape, const HeadParams<Real>& head,
                                 typename Tape<Real>::Id x, bool training = false,
                                 Rng* rng = nullptr) {
  auto h = tape.relu(tape.linear(head.hidden, x));
  if (training && head.dropout > 0) {
    check(rng != nullptr, "classify: dropout needs an rng");
    const auto& hv = tape.value(h);
    auto mask = Tensor<Real>::matrix(hv.rows(), hv.cols());
    const Real keep = Real(1) - head.dropout;
    for (int i = 0; i < mask.size(); ++i)
      mask[i] = rng->uniform() < double(keep) ? Real(1) / keep : Real(0);
    h = tape.hadamard(h, tape.constant(mask));
  }
  return tape.linear(head.out, h);
}

// Blends the final summary with a whole-sequence feature for clip-level output.
template <typename Real>
struct FusionParams {
  LinearMap<Real> fuse;

  static FusionParams make(ParameterStore<Real>& store, const std::string& prefix, int query_dim,
                           int global_dim, Rng& rng) {
    FusionParams p;
    p.fuse = store.add_linear(prefix + ".fuse", query_dim, query_dim + global_dim, rng);
    return p;
  }
};

template <typename Real>
typename Tape<Real>::Id fuse_global(Tape<Real>& tape, const FusionParams<Real>& params,
                                    typename Tape<Real>::Id query,
                                    typename Tape<Real>::Id global_feature) {
  return tape.relu(tape.linear(params.fuse, tape.concat(query, global_feature)));
}

// The query starts as the coordinate-wise max over the first frame's proposals.
template <typename Real>
Tensor<Real> init_query(const FrameProposals<Real>& frame) {
  return max_pool_features(frame);
}

}  // namespace dgm
