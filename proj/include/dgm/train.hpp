#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <vector>

#include "dgm/dataset.hpp"
#include "dgm/engine.hpp"
#include "dgm/lstm.hpp"
#include "dgm/model.hpp"

namespace dgm {

struct TrainConfig {
  ModelConfig model;
  double lr = 0.00125;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int epochs = 1;
  int batch_size = 8;
  std::uint64_t seed = 0;
  bool final_step_loss_only = false;  // default supervises every step of the trace

  void validate() const {
    model.validate();
    check(lr >= 0, "TrainConfig: lr must be nonnegative");
    check(momentum >= 0 && momentum < 1, "TrainConfig: momentum must lie in [0, 1)");
    check(weight_decay >= 0, "TrainConfig: weight_decay must be nonnegative");
    check(epochs >= 1, "TrainConfig: epochs must be positive");
    check(batch_size >= 1, "TrainConfig: batch_size must be positive");
  }
};

struct Metrics {
  std::vector<double> per_step_top1;
  double final_top1 = 0;
  double final_top5 = 0;
  std::vector<double> loss_history;  // one entry per optimizer step
};

// Line format consumed by plotting scripts: "<step> <split> <name> <value>".
inline void write_metric_record(std::ostream& out, long step, std::string_view split,
                                std::string_view name, double value) {
  out << step << ' ' << split << ' ' << name << ' ' << format_real(value) << '\n';
}

// Mean-pooled features of the top-N proposals, the recurrent baseline's input.
template <typename Real>
Tensor<Real> pooled_frame_feature(const FrameProposals<Real>& frame, int top_n) {
  return mean_pool_features(top_k_by_score(frame, top_n));
}

// Recurrent baseline: pooled frame feature -> one cell step -> classify h_t.
// When `loss_ids` is given the per-step logits stay on the tape for training.
template <typename Real>
PredictionTrace<Real> baseline_forward_on_tape(const Model<Real>& model,
                                               const ProposalStream<Real>& stream,
                                               Tape<Real>& tape,
                                               std::vector<typename Tape<Real>::Id>* loss_ids,
                                               bool training_dropout = false,
                                               Rng* dropout_rng = nullptr) {
  check(model.config.variant == ModelVariant::Baseline, "baseline_forward: wrong variant");
  check(!stream.frames.empty(), "baseline_forward: empty stream");
  check(stream.feat_dim == model.config.feat_dim, "baseline_forward: feature dim mismatch");
  const int hidden = model.config.lstm_hidden;
  PredictionTrace<Real> trace;
  LstmState<Real> state{tape.constant(Tensor<Real>::vector(hidden)),
                        tape.constant(Tensor<Real>::vector(hidden))};
  typename Tape<Real>::Id last_h = state.h;
  for (const auto& frame : stream.frames) {
    auto x = tape.constant(pooled_frame_feature(frame, model.config.proposals_per_frame));
    state = lstm_cell_step(tape, *model.lstm, x, state);
    last_h = state.h;
    auto logits = classify(tape, model.head, state.h, training_dropout, dropout_rng);
    trace.logits.push_back(tape.value(logits));
    trace.queries.push_back(tape.value(state.h));
    trace.attentions.push_back(Tensor<Real>{});
    if (loss_ids) loss_ids->push_back(logits);
  }
  if (model.config.static_mode) {
    const auto global = stream.global_feature ? *stream.global_feature
                                              : surrogate_global_feature(stream);
    auto fused = fuse_global(tape, *model.fusion, last_h, tape.constant(global));
    auto logits = classify(tape, model.head, fused, training_dropout, dropout_rng);
    trace.clip_logits = tape.value(logits);
    if (loss_ids) loss_ids->push_back(logits);
  }
  return trace;
}

template <typename Real>
PredictionTrace<Real> baseline_forward(const Model<Real>& model,
                                       const ProposalStream<Real>& stream) {
  Tape<Real> tape;
  return baseline_forward_on_tape(model, stream, tape, nullptr);
}

namespace detail {

// Global-norm ceiling applied to each batch gradient before the optimizer
// step. Unrolled graph updates occasionally produce gradient spikes several
// orders of magnitude above the healthy range.
constexpr double kMaxGradientNorm = 5.0;

// Mean cross-entropy over every per-step prediction, built on the tape.
template <typename Real>
typename Tape<Real>::Id mean_step_loss(Tape<Real>& tape,
                                       const std::vector<typename Tape<Real>::Id>& logit_ids,
                                       int label) {
  check(!logit_ids.empty(), "mean_step_loss: no predictions");
  typename Tape<Real>::Id total = tape.cross_entropy(logit_ids.front(), label);
  for (std::size_t i = 1; i < logit_ids.size(); ++i)
    total = tape.add(total, tape.cross_entropy(logit_ids[i], label));
  return tape.scale(total, Real(1) / Real(logit_ids.size()));
}

// Loss for one labeled stream. With `grads` set, runs backward on the sample
// tape and adds parameter gradients into the accumulator.
template <typename Real>
Real stream_loss(const Model<Real>& model, const ProposalStream<Real>& stream,
                 const TrainConfig& cfg, Gradients<Real>* grads, Rng* dropout_rng) {
  check(stream.label.has_value(), "train: unlabeled stream");
  check(stream.num_classes == model.config.num_classes, "train: class count mismatch");
  const bool training = grads != nullptr;
  const int label = *stream.label;

  const auto finish = [&](Tape<Real>& tape, typename Tape<Real>::Id loss) {
    const Real value = tape.value(loss).value();
    if (grads) {
      tape.backward(loss);
      tape.accumulate_param_grads(model.store, *grads);
    }
    return value;
  };

  // One tape per sample; gradients of shared parameters add up across samples.
  if (model.config.variant == ModelVariant::Baseline) {
    Tape<Real> tape;
    std::vector<typename Tape<Real>::Id> ids;
    baseline_forward_on_tape(model, stream, tape, &ids, training && model.head.dropout > 0,
                             dropout_rng);
    typename Tape<Real>::Id loss;
    if (model.config.static_mode) {
      loss = tape.cross_entropy(ids.back(), label);
    } else if (cfg.final_step_loss_only) {
      loss = tape.cross_entropy(ids.back(), label);
    } else {
      loss = mean_step_loss(tape, ids, label);
    }
    return finish(tape, loss);
  }

  StreamingEngine<Real> engine(model, StreamingEngine<Real>::Mode::Training);
  for (const auto& frame : stream.frames)
    engine.step(frame, training && model.head.dropout > 0, dropout_rng);
  auto& tape = engine.tape();
  typename Tape<Real>::Id loss;
  if (model.config.static_mode) {
    const auto global = stream.global_feature ? *stream.global_feature
                                              : surrogate_global_feature(stream);
    auto logits = engine.finish_static(global, training && model.head.dropout > 0, dropout_rng);
    loss = tape.cross_entropy(logits, label);
  } else if (cfg.final_step_loss_only) {
    loss = tape.cross_entropy(engine.step_logit_ids().back(), label);
  } else {
    loss = mean_step_loss(tape, engine.step_logit_ids(), label);
  }
  return finish(tape, loss);
}

}  // namespace detail

template <typename Real>
struct TrainResult {
  Model<Real> model;
  Metrics metrics;
};

// SGD with momentum over the train split. Batches accumulate sample gradients
// in ascending index order and apply one optimizer step, so runs are
// deterministic for a fixed (config, dataset).
template <typename Real>
TrainResult<Real> train_model(const Dataset<Real>& data, const TrainConfig& cfg,
                              std::ostream* metrics_out = nullptr) {
  cfg.validate();
  check(!data.train.empty(), "train_model: empty train split");
  for (const auto& s : data.train) {
    check(s.feat_dim == cfg.model.feat_dim, "train_model: stream feature dim mismatch");
    check(!s.frames.empty(), "train_model: empty stream in train split");
    check(s.label.has_value(), "train_model: unlabeled training stream");
  }

  TrainResult<Real> result{build_model<Real>(cfg.model, cfg.seed), {}};
  Model<Real>& model = result.model;
  Gradients<Real> grads(model.store);
  Rng dropout_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
  const int n = static_cast<int>(data.train.size());
  long opt_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int stop = std::min(n, start + cfg.batch_size);
      grads.zero();
      Real batch_loss = 0;
      for (int i = start; i < stop; ++i)
        batch_loss += detail::stream_loss(model, data.train[static_cast<std::size_t>(i)], cfg,
                                          &grads, &dropout_rng);
      const Real inv = Real(1) / Real(stop - start);
      grads.scale_all(inv);
      batch_loss *= inv;
      clip_gradient_norm(grads, Real(detail::kMaxGradientNorm));
      sgd_momentum_step(model.store, grads, Real(cfg.lr), Real(cfg.momentum),
                        Real(cfg.weight_decay));
      result.metrics.loss_history.push_back(double(batch_loss));
      ++opt_step;
      if (metrics_out)
        write_metric_record(*metrics_out, opt_step, "train", "loss", double(batch_loss));
    }
  }
  return result;
}

// Accuracy of a trace (or of the whole-clip output in static mode) against
// labels, aggregated over a labeled dataset split.
template <typename Real>
Metrics evaluate(const Model<Real>& model, const std::vector<ProposalStream<Real>>& streams) {
  check(!streams.empty(), "evaluate: empty split");
  Metrics metrics;
  std::vector<long> step_correct;
  long final_top1 = 0, final_top5 = 0;

  for (const auto& stream : streams) {
    check(stream.label.has_value(), "evaluate: unlabeled stream");
    const int label = *stream.label;
    PredictionTrace<Real> trace;
    if (model.config.variant == ModelVariant::Baseline) {
      trace = baseline_forward(model, stream);
    } else {
      trace = run_streaming(model, stream);
      if (model.config.static_mode)
        trace.clip_logits =
            run_static(model, stream,
                       stream.global_feature ? *stream.global_feature
                                             : surrogate_global_feature(stream));
    }
    if (step_correct.size() < trace.length()) step_correct.resize(trace.length(), 0);
    for (std::size_t t = 0; t < trace.length(); ++t)
      if (PredictionTrace<Real>::argmax(trace.logits[t]) == label) ++step_correct[t];

    const Tensor<Real>& final_logits =
        trace.clip_logits ? *trace.clip_logits : trace.logits.back();
    if (PredictionTrace<Real>::argmax(final_logits) == label) ++final_top1;
    int better = 0;
    const Real own = final_logits[label];
    for (int k = 0; k < final_logits.size(); ++k)
      if (final_logits[k] > own) ++better;
    if (better < 5) ++final_top5;
  }

  const double denom = double(streams.size());
  for (long c : step_correct) metrics.per_step_top1.push_back(double(c) / denom);
  metrics.final_top1 = double(final_top1) / denom;
  metrics.final_top5 = double(final_top5) / denom;
  return metrics;
}

}  // namespace dgm
