#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dgm/graph_core.hpp"
#include "dgm/location_graph.hpp"
#include "dgm/lstm.hpp"
#include "dgm/readout.hpp"
#include "dgm/visual_graph.hpp"

namespace dgm {

enum class ModelVariant { Visual, Location, Baseline };

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::Visual: return "visual";
    case ModelVariant::Location: return "location";
    case ModelVariant::Baseline: return "baseline";
  }
  throw ContractError("variant_name: unknown variant");
}

inline ModelVariant parse_variant(const std::string& name) {
  if (name == "visual") return ModelVariant::Visual;
  if (name == "location") return ModelVariant::Location;
  if (name == "baseline") return ModelVariant::Baseline;
  throw ContractError("unknown model variant: " + name);
}

struct ModelConfig {
  ModelVariant variant = ModelVariant::Visual;
  int feat_dim = 1024;
  int num_classes = 2;
  int proposals_per_frame = 20;
  int nodes = 5;
  int internal_rounds = 1;
  bool static_mode = false;  // fuse a whole-sequence feature into one clip-level output
  int global_dim = 0;        // 0 means same as feat_dim
  double dropout = 0;
  int lstm_hidden = 0;  // baseline only

  int resolved_global_dim() const { return global_dim > 0 ? global_dim : feat_dim; }

  // Width of the summary vector the classifier head consumes.
  int summary_dim() const {
    return variant == ModelVariant::Baseline ? lstm_hidden : feat_dim;
  }

  GraphVariantConfig graph_config() const {
    check(variant != ModelVariant::Baseline, "graph_config: baseline has no graph");
    GraphVariantConfig g;
    g.variant =
        variant == ModelVariant::Visual ? GraphVariant::Visual : GraphVariant::Location;
    g.proposals_per_frame = proposals_per_frame;
    g.nodes = nodes;
    g.feat_dim = feat_dim;
    g.internal_rounds = internal_rounds;
    return g;
  }

  void validate() const {
    check(feat_dim >= 1, "ModelConfig: feat_dim must be positive");
    check(num_classes >= 2, "ModelConfig: need at least two classes");
    check(proposals_per_frame >= 1, "ModelConfig: proposals_per_frame must be positive");
    check(nodes >= 1 && nodes <= proposals_per_frame,
          "ModelConfig: nodes must lie in [1, proposals_per_frame]");
    check(internal_rounds >= 1, "ModelConfig: internal_rounds must be positive");
    check(dropout >= 0 && dropout < 1, "ModelConfig: dropout must lie in [0, 1)");
    check(global_dim >= 0, "ModelConfig: global_dim must be nonnegative");
    if (variant == ModelVariant::Baseline)
      check(lstm_hidden >= 1, "ModelConfig: baseline needs lstm_hidden >= 1");
  }
};

// A model owns its parameter store; the component handles point into it.
template <typename Real>
struct Model {
  ModelConfig config;
  ParameterStore<Real> store;
  std::optional<VisualGraphParams<Real>> visual;
  std::optional<LocationGraphParams<Real>> location;
  std::optional<AttentionParams<Real>> attention;
  std::optional<LstmParams<Real>> lstm;
  std::optional<FusionParams<Real>> fusion;
  HeadParams<Real> head;

  std::size_t parameter_count() const { return store.parameter_count(); }
};

template <typename Real>
Model<Real> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model<Real> model;
  model.config = config;
  Rng rng(seed);
  const int d = config.feat_dim;

  switch (config.variant) {
    case ModelVariant::Visual:
      model.visual = VisualGraphParams<Real>::make(model.store, "visual", d, rng);
      model.attention = AttentionParams<Real>::make(model.store, "attend", d, rng);
      break;
    case ModelVariant::Location:
      model.location = LocationGraphParams<Real>::make(model.store, "location", d, rng);
      model.attention = AttentionParams<Real>::make(model.store, "attend", d, rng);
      break;
    case ModelVariant::Baseline:
      model.lstm = LstmParams<Real>::make(model.store, "lstm", d, config.lstm_hidden, rng);
      break;
  }
  if (config.static_mode)
    model.fusion = FusionParams<Real>::make(model.store, "fusion", config.summary_dim(),
                                            config.resolved_global_dim(), rng);
  model.head = HeadParams<Real>::make(model.store, "head", config.summary_dim(),
                                      config.num_classes, rng, Real(config.dropout));
  return model;
}

// Smallest hidden width whose recurrent baseline lands closest to the graph
// model's parameter count. Count grows monotonically with width, so a binary
// search brackets the target and the nearer neighbor wins.
inline int baseline_hidden_for_parity(const ModelConfig& graph_config) {
  check(graph_config.variant != ModelVariant::Baseline,
        "baseline_hidden_for_parity: pass the graph model's config");
  const auto count_for = [&](int hidden) {
    ModelConfig c = graph_config;
    c.variant = ModelVariant::Baseline;
    c.lstm_hidden = hidden;
    return build_model<float>(c, 0).parameter_count();
  };
  const std::size_t target = build_model<float>(graph_config, 0).parameter_count();
  int lo = 1, hi = 1;
  while (count_for(hi) < target) {
    lo = hi;
    hi *= 2;
  }
  while (lo + 1 < hi) {
    const int mid = lo + (hi - lo) / 2;
    (count_for(mid) < target ? lo : hi) = mid;
  }
  const auto gap = [&](int h) {
    const std::size_t c = count_for(h);
    return c > target ? c - target : target - c;
  };
  return gap(lo) <= gap(hi) ? lo : hi;
}

}  // namespace dgm
