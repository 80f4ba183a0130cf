#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dgm/model.hpp"
#include "dgm/proposal.hpp"
#include "dgm/readout.hpp"
#include "dgm/text.hpp"

namespace dgm {

// Everything a consumer can observe about one processed stream.
template <typename Real>
struct PredictionTrace {
  std::vector<Tensor<Real>> logits;      // one K-vector per frame
  std::vector<Tensor<Real>> queries;     // one D-vector per frame
  std::vector<Tensor<Real>> attentions;  // one M-vector per frame (empty for the baseline)
  std::optional<Tensor<Real>> clip_logits;  // whole-clip output, set by the static path

  std::size_t length() const { return logits.size(); }
  static int argmax(const Tensor<Real>& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
      if (v[i] > v[best]) best = i;
    return best;
  }
};

// Owns the evolving graph and query for exactly one stream. Parameters are
// shared and never written. In inference mode the tape is squashed back to
// constants after every frame so memory stays flat over arbitrarily long
// streams; in training mode the whole unrolled computation is kept so the
// harness can differentiate through time.
template <typename Real>
class StreamingEngine {
 public:
  using Id = typename Tape<Real>::Id;

  enum class Mode { Inference, Training };

  StreamingEngine(const Model<Real>& model, Mode mode = Mode::Inference)
      : model_(model), mode_(mode) {
    check(model.config.variant != ModelVariant::Baseline,
          "StreamingEngine: the recurrent baseline runs through baseline_forward");
    model.config.validate();
  }

  int steps_taken() const { return steps_; }
  Tape<Real>& tape() { return tape_; }
  const HiddenGraphState<Real>& state() const { return state_; }
  const std::vector<Id>& step_logit_ids() const { return step_logit_ids_; }

  // Feeds the next frame and returns this step's logits. The first call
  // initializes the graph from the frame and reads it out with the pooled
  // query; later calls run the full cross/self/attend/classify loop.
  const Tensor<Real>& step(const FrameProposals<Real>& frame, bool training_dropout = false,
                           Rng* dropout_rng = nullptr) {
    check(!frame.proposals.empty(), "engine: empty frame");
    for (const auto& rp : frame.proposals)
      check(rp.feature.size() == model_.config.feat_dim, "engine: feature dim mismatch");
    const auto selected = top_k_by_score(frame, model_.config.proposals_per_frame);

    if (steps_ == 0) {
      const bool with_boxes = model_.config.variant == ModelVariant::Location;
      state_ = init_hidden_graph(tape_, selected, model_.config.nodes, with_boxes);
      query_ = tape_.constant(init_query(selected));
    } else {
      if (model_.config.variant == ModelVariant::Visual) {
        visual_cross_update(tape_, state_, selected, *model_.visual);
        visual_self_update(tape_, state_, *model_.visual, model_.config.internal_rounds);
      } else {
        location_cross_update(tape_, state_, selected, *model_.location);
        location_self_update(tape_, state_, *model_.location, model_.config.internal_rounds);
      }
    }

    auto read = attend(tape_, *model_.attention, query_, state_.node_features);
    query_ = read.query;
    Id logits = classify(tape_, model_.head, read.query, training_dropout, dropout_rng);

    ++steps_;
    trace_.logits.push_back(tape_.value(logits));
    trace_.queries.push_back(tape_.value(query_));
    trace_.attentions.push_back(tape_.value(read.attention));
    if (mode_ == Mode::Training)
      step_logit_ids_.push_back(logits);
    else
      compact();
    return trace_.logits.back();
  }

  // Whole-clip output: blend the final query with a sequence-level feature.
  // Only meaningful after at least one step.
  Id finish_static(const Tensor<Real>& global_feature, bool training_dropout = false,
                   Rng* dropout_rng = nullptr) {
    check(steps_ >= 1, "finish_static: no frames consumed");
    check(model_.fusion.has_value(), "finish_static: model built without a fusion stage");
    check(global_feature.size() == model_.config.resolved_global_dim(),
          "finish_static: global feature dim mismatch");
    auto fused = fuse_global(tape_, *model_.fusion, query_, tape_.constant(global_feature));
    Id logits = classify(tape_, model_.head, fused, training_dropout, dropout_rng);
    trace_.clip_logits = tape_.value(logits);
    return logits;
  }

  const PredictionTrace<Real>& trace() const { return trace_; }

  // Canonical text form of the mutable state; equal strings mean equal state.
  std::string dump_state() const {
    std::ostringstream out;
    out << "steps " << steps_ << "\n";
    const auto& x = tape_.value(state_.node_features);
    out << "nodes " << x.rows() << " " << x.cols() << "\n";
    for (int i = 0; i < x.size(); ++i) out << format_real(x[i]) << "\n";
    out << "boxes " << state_.node_boxes.size() << "\n";
    for (const auto& b : state_.node_boxes)
      out << format_real(b.x1) << " " << format_real(b.y1) << " " << format_real(b.x2) << " "
          << format_real(b.y2) << "\n";
    const auto& q = tape_.value(query_);
    out << "query " << q.size() << "\n";
    for (int i = 0; i < q.size(); ++i) out << format_real(q[i]) << "\n";
    return out.str();
  }

 private:
  // Re-seeds a fresh tape with the current state as constants. Inference only:
  // gradients cannot flow across a compaction point.
  void compact() {
    const auto nodes = tape_.value(state_.node_features);
    const auto query = tape_.value(query_);
    tape_.reset();
    state_.node_features = tape_.constant(nodes);
    query_ = tape_.constant(query);
  }

  const Model<Real>& model_;
  Mode mode_;
  Tape<Real> tape_;
  HiddenGraphState<Real> state_;
  Id query_ = -1;
  int steps_ = 0;
  PredictionTrace<Real> trace_;
  std::vector<Id> step_logit_ids_;
};

template <typename Real>
StreamingEngine<Real> engine_init(const Model<Real>& model, const FrameProposals<Real>& first_frame,
                                  typename StreamingEngine<Real>::Mode mode =
                                      StreamingEngine<Real>::Mode::Inference) {
  StreamingEngine<Real> engine(model, mode);
  engine.step(first_frame);
  return engine;
}

template <typename Real>
PredictionTrace<Real> run_streaming(const Model<Real>& model, const ProposalStream<Real>& stream) {
  check(!stream.frames.empty(), "run_streaming: empty stream");
  StreamingEngine<Real> engine(model);
  for (const auto& frame : stream.frames) engine.step(frame);
  return engine.trace();
}

// Stand-in sequence-level feature when a stream carries none: the mean of
// every proposal feature in the stream.
template <typename Real>
Tensor<Real> surrogate_global_feature(const ProposalStream<Real>& stream) {
  check(!stream.frames.empty(), "surrogate_global_feature: empty stream");
  auto acc = Tensor<Real>::vector(stream.feat_dim);
  long count = 0;
  for (const auto& frame : stream.frames)
    for (const auto& rp : frame.proposals) {
      for (int i = 0; i < acc.size(); ++i) acc[i] += rp.feature[i];
      ++count;
    }
  for (int i = 0; i < acc.size(); ++i) acc[i] /= Real(count);
  return acc;
}

// Clip-level logits: stream the frames, then fuse the final query with the
// given sequence-level feature.
template <typename Real>
Tensor<Real> run_static(const Model<Real>& model, const ProposalStream<Real>& stream,
                        const Tensor<Real>& global_feature) {
  check(!stream.frames.empty(), "run_static: empty stream");
  StreamingEngine<Real> engine(model);
  for (const auto& frame : stream.frames) engine.step(frame);
  auto logits = engine.finish_static(global_feature);
  return engine.tape().value(logits);
}

}  // namespace dgm
