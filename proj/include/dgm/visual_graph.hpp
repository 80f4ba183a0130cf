#pragma once

#include <string>

#include "dgm/graph_core.hpp"
#include "dgm/params.hpp"
#include "dgm/tape.hpp"

namespace dgm {

// Maps of the appearance-similarity variant. The merge gate is shared between
// the cross-frame update and the internal update, which swaps h for phi but
// keeps the same absorb strategy.
template <typename Real>
struct VisualGraphParams {
  LinearMap<Real> h;          // proposal transform
  LinearMap<Real> g;          // node transform (affinity only)
  LinearMap<Real> phi;        // node transform for the internal update
  LinearMap<Real> merge;      // W_m, gate on current state
  LinearMap<Real> merge_hat;  // W_m_hat, gate on incoming message

  static VisualGraphParams make(ParameterStore<Real>& store, const std::string& prefix, int d,
                                Rng& rng) {
    VisualGraphParams p;
    p.h = store.add_linear(prefix + ".h", d, d, rng);
    p.g = store.add_linear(prefix + ".g", d, d, rng);
    p.phi = store.add_linear(prefix + ".phi", d, d, rng);
    p.merge = store.add_linear(prefix + ".merge", d, d, rng);
    p.merge_hat = store.add_linear(prefix + ".merge_hat", d, d, rng);
    return p;
  }
};

// Bilinear affinity: entry (n, m) = h(b_n) . g(x_m).
template <typename Real>
typename Tape<Real>::Id visual_affinity(Tape<Real>& tape, typename Tape<Real>::Id proposals,
                                        typename Tape<Real>::Id nodes, const LinearMap<Real>& h,
                                        const LinearMap<Real>& g) {
  return tape.matmul_nt(tape.linear_rows(h, proposals), tape.linear_rows(g, nodes));
}

// Elementwise convex blend gated by the node state and incoming message:
//   gate = sig(Wm x + Wm_hat xhat); out = gate.x + (1 - gate).xhat
template <typename Real>
typename Tape<Real>::Id gated_merge(Tape<Real>& tape, typename Tape<Real>::Id x,
                                    typename Tape<Real>::Id xhat, const LinearMap<Real>& merge,
                                    const LinearMap<Real>& merge_hat) {
  auto gate = tape.sigmoid(tape.add(tape.linear(merge, x), tape.linear(merge_hat, xhat)));
  return tape.add(tape.hadamard(gate, x), tape.hadamard(tape.one_minus(gate), xhat));
}

// Row-batched form of gated_merge over all nodes at once.
template <typename Real>
typename Tape<Real>::Id gated_merge_rows(Tape<Real>& tape, typename Tape<Real>::Id x,
                                         typename Tape<Real>::Id xhat,
                                         const LinearMap<Real>& merge,
                                         const LinearMap<Real>& merge_hat) {
  auto gate =
      tape.sigmoid(tape.add(tape.linear_rows(merge, x), tape.linear_rows(merge_hat, xhat)));
  return tape.add(tape.hadamard(gate, x), tape.hadamard(tape.one_minus(gate), xhat));
}

// One cross-frame message pass: softmax-normalized bilinear weights gate how
// much each proposal's h-feature flows into each node, then nodes absorb the
// inflow through the merge gate.
template <typename Real>
void visual_cross_update(Tape<Real>& tape, HiddenGraphState<Real>& state,
                         const FrameProposals<Real>& frame, const VisualGraphParams<Real>& params) {
  auto proposals = tape.constant(feature_matrix(frame));
  auto hb = tape.linear_rows(params.h, proposals);
  auto gx = tape.linear_rows(params.g, state.node_features);
  auto raw = tape.matmul_nt(hb, gx);                 // N x M
  auto norm = tape.softmax_columns(raw);             // per-node softmax over proposals
  auto inflow = tape.matmul_tn(norm, hb);            // M x D
  state.node_features =
      gated_merge_rows(tape, state.node_features, inflow, params.merge, params.merge_hat);
  state.cross_weights = tape.value(norm);
}

// Internal update over the complete directed graph with self-connections.
// Normalization runs over the source node per target column, so the edge
// matrix is directed even though the raw dot products are symmetric.
template <typename Real>
void visual_self_update(Tape<Real>& tape, HiddenGraphState<Real>& state,
                        const VisualGraphParams<Real>& params, int internal_rounds = 1) {
  check(state.node_count >= 1, "visual_self_update: empty graph");
  for (int round = 0; round < internal_rounds; ++round) {
    auto phix = tape.linear_rows(params.phi, state.node_features);
    auto raw = tape.matmul_nt(phix, phix);           // (k, m) = phi(x_k) . phi(x_m)
    auto norm = tape.softmax_columns(raw);
    auto inflow = tape.matmul_tn(norm, phix);
    state.node_features =
        gated_merge_rows(tape, state.node_features, inflow, params.merge, params.merge_hat);
    state.self_weights = tape.value(norm);
  }
}

}  // namespace dgm
