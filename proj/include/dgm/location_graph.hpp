#pragma once

#include <string>
#include <vector>

#include "dgm/box.hpp"
#include "dgm/graph_core.hpp"
#include "dgm/params.hpp"
#include "dgm/tape.hpp"

namespace dgm {

// Maps of the spatial-overlap variant. Edge weights come from box geometry,
// not from learned affinities, so only the message transforms are trained.
template <typename Real>
struct LocationGraphParams {
  LinearMap<Real> p;    // proposal transform for the cross-frame message
  LinearMap<Real> psi;  // node transform for the internal update

  static LocationGraphParams make(ParameterStore<Real>& store, const std::string& prefix, int d,
                                  Rng& rng) {
    LocationGraphParams params;
    params.p = store.add_linear(prefix + ".p", d, d, rng);
    params.psi = store.add_linear(prefix + ".psi", d, d, rng);
    return params;
  }
};

// Raw overlap affinity: entry (n, m) = IoU(box_n, node_box_m).
template <typename Real>
Tensor<Real> overlap_affinity(const std::vector<Box<Real>>& proposal_boxes,
                              const std::vector<Box<Real>>& node_boxes) {
  check(!proposal_boxes.empty() && !node_boxes.empty(), "overlap_affinity: empty box set");
  const int rows = static_cast<int>(proposal_boxes.size());
  const int cols = static_cast<int>(node_boxes.size());
  auto raw = Tensor<Real>::matrix(rows, cols);
  for (int n = 0; n < rows; ++n)
    for (int m = 0; m < cols; ++m)
      raw(n, m) = iou(proposal_boxes[static_cast<std::size_t>(n)],
                      node_boxes[static_cast<std::size_t>(m)]);
  return raw;
}

// Each node drifts halfway toward the weighted mean of the boxes that sent it
// messages. A node with no overlapping proposals keeps its box.
template <typename Real>
void shift_coordinates(std::vector<Box<Real>>& node_boxes,
                       const std::vector<Box<Real>>& proposal_boxes, const Tensor<Real>& weights) {
  check(weights.rows() == static_cast<int>(proposal_boxes.size()) &&
            weights.cols() == static_cast<int>(node_boxes.size()),
        "shift_coordinates: weight shape mismatch");
  for (int m = 0; m < weights.cols(); ++m) {
    Real total = 0;
    for (int n = 0; n < weights.rows(); ++n) total += weights(n, m);
    if (total == Real(0)) continue;
    Box<Real> mean{0, 0, 0, 0};
    for (int n = 0; n < weights.rows(); ++n) {
      const Real w = weights(n, m);
      const Box<Real>& src = proposal_boxes[static_cast<std::size_t>(n)];
      mean.x1 += w * src.x1;
      mean.y1 += w * src.y1;
      mean.x2 += w * src.x2;
      mean.y2 += w * src.y2;
    }
    Box<Real>& b = node_boxes[static_cast<std::size_t>(m)];
    b.x1 = (b.x1 + mean.x1) / Real(2);
    b.y1 = (b.y1 + mean.y1) / Real(2);
    b.x2 = (b.x2 + mean.x2) / Real(2);
    b.y2 = (b.y2 + mean.y2) / Real(2);
  }
}

// One cross-frame pass: overlap weights (L1-normalized per node, held constant
// for the backward pass) aggregate transformed proposal features, nodes absorb
// the inflow additively through a ReLU, and node boxes drift toward the
// proposals that fed them.
template <typename Real>
void location_cross_update(Tape<Real>& tape, HiddenGraphState<Real>& state,
                           const FrameProposals<Real>& frame,
                           const LocationGraphParams<Real>& params) {
  check(static_cast<int>(state.node_boxes.size()) == state.node_count,
        "location_cross_update: state carries no boxes");
  std::vector<Box<Real>> proposal_boxes;
  proposal_boxes.reserve(frame.proposals.size());
  for (const auto& rp : frame.proposals) proposal_boxes.push_back(rp.box);

  const auto norm = l1_normalize_columns(overlap_affinity(proposal_boxes, state.node_boxes));
  auto weights = tape.constant(norm);
  auto pb = tape.linear_rows(params.p, tape.constant(feature_matrix(frame)));
  auto inflow = tape.matmul_tn(weights, pb);  // M x D
  state.node_features = tape.relu(tape.add(state.node_features, inflow));
  state.cross_weights = norm;
  shift_coordinates(state.node_boxes, proposal_boxes, norm);
}

// Internal update: node-to-node overlap weights aggregate psi-transformed node
// features. Boxes stay put; only the cross-frame pass moves them.
template <typename Real>
void location_self_update(Tape<Real>& tape, HiddenGraphState<Real>& state,
                          const LocationGraphParams<Real>& params, int internal_rounds = 1) {
  check(static_cast<int>(state.node_boxes.size()) == state.node_count,
        "location_self_update: state carries no boxes");
  for (int round = 0; round < internal_rounds; ++round) {
    const auto norm = l1_normalize_columns(overlap_affinity(state.node_boxes, state.node_boxes));
    auto weights = tape.constant(norm);
    auto psix = tape.linear_rows(params.psi, state.node_features);
    auto inflow = tape.matmul_tn(weights, psix);
    state.node_features = tape.relu(tape.add(state.node_features, inflow));
    state.self_weights = norm;
  }
}

}  // namespace dgm
