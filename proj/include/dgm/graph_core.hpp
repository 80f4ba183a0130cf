#pragma once

#include <vector>

#include "dgm/box.hpp"
#include "dgm/proposal.hpp"
#include "dgm/tape.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

enum class GraphVariant { Visual, Location };

struct GraphVariantConfig {
  GraphVariant variant = GraphVariant::Visual;
  int proposals_per_frame = 20;  // N
  int nodes = 5;                 // M
  int feat_dim = 1024;           // D
  int internal_rounds = 1;       // self-update repetitions per step

  void validate() const {
    check(nodes >= 1, "GraphVariantConfig: nodes must be >= 1");
    check(proposals_per_frame >= 1, "GraphVariantConfig: proposals must be >= 1");
    check(nodes <= proposals_per_frame, "GraphVariantConfig: nodes must not exceed proposals");
    check(feat_dim >= 1, "GraphVariantConfig: feat_dim must be >= 1");
    check(internal_rounds >= 1, "GraphVariantConfig: internal_rounds must be >= 1");
  }
};

// The persistent hidden graph carried across time steps. Node features live on
// the tape (they participate in backward); boxes exist only for the location
// variant, and the weight matrices are kept purely for inspection — they are
// recomputed from scratch every step.
template <typename Real>
struct HiddenGraphState {
  typename Tape<Real>::Id node_features = -1;  // M x D on the owning tape
  std::vector<Box<Real>> node_boxes;           // location variant only
  Tensor<Real> cross_weights;                  // last normalized N x M
  Tensor<Real> self_weights;                   // last normalized M x M
  int node_count = 0;
};

enum class NormalizeMode { Softmax, L1 };

// Column-normalizes an N x M incoming-weight matrix (per hidden-graph node).
template <typename Real>
Tensor<Real> normalize_incoming(const Tensor<Real>& raw, NormalizeMode mode) {
  return mode == NormalizeMode::Softmax ? softmax_columns(raw) : l1_normalize_columns(raw);
}

// Row m of the result is the weighted sum over proposals n of transformed
// features, with weights taken from column m.
template <typename Real>
Tensor<Real> aggregate_messages(const Tensor<Real>& norm_weights,
                                const Tensor<Real>& transformed) {
  check(norm_weights.rows() == transformed.rows(), "aggregate_messages: shape mismatch");
  return matmul_tn(norm_weights, transformed);
}

// Nodes take the features (and boxes) of the top-M proposals of an already
// top-N-selected frame.
template <typename Real>
HiddenGraphState<Real> init_hidden_graph(Tape<Real>& tape, const FrameProposals<Real>& top_frame,
                                         int node_count, bool with_boxes) {
  check(node_count >= 1, "init_hidden_graph: need at least one node");
  if (node_count > static_cast<int>(top_frame.proposals.size()))
    throw ContractError("init_hidden_graph: node count exceeds proposals per frame");
  int d = top_frame.proposals.front().feature.size();
  Tensor<Real> feats = Tensor<Real>::matrix(node_count, d);
  HiddenGraphState<Real> state;
  state.node_count = node_count;
  for (int m = 0; m < node_count; ++m) {
    const auto& p = top_frame.proposals[static_cast<std::size_t>(m)];
    for (int j = 0; j < d; ++j) feats(m, j) = p.feature[j];
    if (with_boxes) state.node_boxes.push_back(p.box);
  }
  state.node_features = tape.constant(std::move(feats));
  return state;
}

}  // namespace dgm
