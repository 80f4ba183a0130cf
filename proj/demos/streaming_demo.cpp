// Feeds one synthetic proposal stream through a freshly initialized visual
// model and prints the per-frame prediction as it firms up.

#include <cstdio>

#include "dgm/dgm.hpp"

int main() {
  dgm::SyntheticTaskSpec spec;
  spec.frames = 6;
  dgm::Rng rng(7);
  const auto stream = dgm::generate_scene<float>(spec, dgm::InteractionClass::Chase, 2, rng).stream;

  dgm::ModelConfig config;
  config.feat_dim = spec.feat_dim;
  config.num_classes = static_cast<int>(spec.classes.size());
  config.proposals_per_frame = spec.proposals;
  config.nodes = spec.nodes;
  auto model = dgm::build_model<float>(config, 42);

  dgm::StreamingEngine<float> engine(model);
  for (const auto& frame : stream.frames) {
    const auto& logits = engine.step(frame);
    std::printf("frame %d predicted %d logits", frame.frame_index,
                dgm::PredictionTrace<float>::argmax(logits));
    for (int k = 0; k < logits.size(); ++k) std::printf(" %+.4f", double(logits[k]));
    std::printf("\n");
  }
  std::printf("label was %d\n\n%s", *stream.label, engine.dump_state().c_str());
  return 0;
}
