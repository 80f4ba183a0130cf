#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dgm/box.hpp"
#include "dgm/proposal.hpp"
#include "dgm/rng.hpp"
#include "dgm/text.hpp"

namespace dgm {

// Two tracked objects act out one of five motion programs; extra objects and
// distractor boxes are scenery. The class is decided purely by the geometry of
// the first two tracks, so labels can be re-derived and checked.
enum class InteractionClass { Approach, Depart, Chase, Swap, Static };

inline const char* interaction_name(InteractionClass c) {
  switch (c) {
    case InteractionClass::Approach: return "approach";
    case InteractionClass::Depart: return "depart";
    case InteractionClass::Chase: return "chase";
    case InteractionClass::Swap: return "swap";
    case InteractionClass::Static: return "static";
  }
  throw ContractError("interaction_name: unknown class");
}

inline InteractionClass parse_interaction(const std::string& name) {
  if (name == "approach") return InteractionClass::Approach;
  if (name == "depart") return InteractionClass::Depart;
  if (name == "chase") return InteractionClass::Chase;
  if (name == "swap") return InteractionClass::Swap;
  if (name == "static") return InteractionClass::Static;
  throw ContractError("unknown interaction class: " + name);
}

struct SyntheticTaskSpec {
  std::vector<InteractionClass> classes = {InteractionClass::Approach, InteractionClass::Depart,
                                           InteractionClass::Chase, InteractionClass::Swap,
                                           InteractionClass::Static};
  int objects = 2;      // tracked objects per scene, the first two interact
  int distractors = 4;  // untracked random proposals per frame
  int frames = 8;
  int feat_dim = 16;
  int identity_dim = 12;  // leading feature dims; the trailing 4 carry box velocity
  double noise_sigma = 0.05;
  int proposals = 6;  // model-facing selection width N
  int nodes = 3;      // model-facing graph size M

  void validate() const {
    check(classes.size() >= 2, "SyntheticTaskSpec: need at least two classes");
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (std::size_t j = i + 1; j < classes.size(); ++j)
        check(classes[i] != classes[j], "SyntheticTaskSpec: duplicate class");
    check(objects >= 2 && objects <= 4, "SyntheticTaskSpec: objects must lie in [2, 4]");
    check(distractors >= 0, "SyntheticTaskSpec: distractors must be nonnegative");
    check(frames >= 2, "SyntheticTaskSpec: need at least two frames");
    check(identity_dim >= 1, "SyntheticTaskSpec: identity_dim must be positive");
    check(feat_dim == identity_dim + 4,
          "SyntheticTaskSpec: feat_dim must equal identity_dim + 4 (velocity coords)");
    check(noise_sigma >= 0, "SyntheticTaskSpec: noise_sigma must be nonnegative");
    check(nodes >= 1 && proposals >= nodes,
          "SyntheticTaskSpec: need proposals >= nodes >= 1");
  }
};

namespace detail {

// Geometry constants shared by the generator and the label classifier. The
// programs keep clear margins around every threshold so classification of
// generated scenes is exact.
constexpr double kIouHigh = 0.3;    // "overlapping"
constexpr double kIouLow = 0.05;    // "separated"
constexpr double kDispSmall = 0.05; // a track that barely moved
constexpr double kDispLarge = 0.2;  // a track that clearly traveled
constexpr double kPairTol = 0.06;   // endpoint-exchange tolerance
constexpr double kJitter = 0.002;   // static wobble per coordinate per frame
constexpr double kVelocityScale = 5;

template <typename Real>
std::array<double, 2> box_center(const Box<Real>& b) {
  return {(double(b.x1) + double(b.x2)) / 2, (double(b.y1) + double(b.y2)) / 2};
}

inline double center_dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace detail

// Recovers the class from the two interacting tracks. Throws when the geometry
// matches no program; the generator guarantees its outputs always classify.
template <typename Real>
InteractionClass infer_interaction_class(const std::vector<Box<Real>>& a,
                                         const std::vector<Box<Real>>& b) {
  using namespace detail;
  check(a.size() == b.size() && a.size() >= 2, "infer_interaction_class: need two tracks, T >= 2");
  const auto a0 = box_center(a.front()), aT = box_center(a.back());
  const auto b0 = box_center(b.front()), bT = box_center(b.back());
  const double iou0 = double(iou(a.front(), b.front()));
  const double iouT = double(iou(a.back(), b.back()));
  const double disp_a = center_dist(a0, aT), disp_b = center_dist(b0, bT);

  if (center_dist(aT, b0) < kPairTol && center_dist(bT, a0) < kPairTol && disp_a > kDispLarge)
    return InteractionClass::Swap;
  if (iou0 < kIouLow && iouT > kIouHigh) return InteractionClass::Approach;
  if (iou0 > kIouHigh && iouT < kIouLow) return InteractionClass::Depart;
  if (disp_a > kDispLarge) {
    const std::array<double, 2> off0 = {b0[0] - a0[0], b0[1] - a0[1]};
    double max_dev = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
      const auto ca = box_center(a[t]), cb = box_center(b[t]);
      const std::array<double, 2> off = {cb[0] - ca[0], cb[1] - ca[1]};
      max_dev = std::max(max_dev, std::hypot(off[0] - off0[0], off[1] - off0[1]));
    }
    if (max_dev < kPairTol) return InteractionClass::Chase;
  }
  if (disp_a < kDispSmall && disp_b < kDispSmall) return InteractionClass::Static;
  throw ContractError("infer_interaction_class: geometry matches no program");
}

template <typename Real>
struct GeneratedScene {
  ProposalStream<Real> stream;
  std::vector<std::vector<Box<Real>>> tracks;  // [object][frame]
  InteractionClass label = InteractionClass::Static;
};

namespace detail {

template <typename Real>
Box<Real> box_at(const std::array<double, 2>& center, double size) {
  Box<Real> b{Real(center[0] - size / 2), Real(center[1] - size / 2), Real(center[0] + size / 2),
              Real(center[1] + size / 2)};
  if (!(b.x1 >= 0 && b.y1 >= 0 && b.x2 <= 1 && b.y2 <= 1))
    throw ContractError("synthetic generation: object does not fit in the unit frame");
  return b;
}

inline std::array<double, 2> lerp(const std::array<double, 2>& p, const std::array<double, 2>& q,
                                  double t) {
  return {p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t};
}

// Center paths for the interacting pair, frame by frame.
inline void pair_paths(InteractionClass label, Rng& rng, int frames,
                       std::vector<std::array<double, 2>>& a,
                       std::vector<std::array<double, 2>>& b) {
  const auto jitter = [&] { return rng.uniform(-kJitter, kJitter); };
  a.resize(static_cast<std::size_t>(frames));
  b.resize(static_cast<std::size_t>(frames));
  const double denom = frames - 1;
  switch (label) {
    case InteractionClass::Approach: {
      const std::array<double, 2> a0 = {0.20 + rng.uniform(-0.02, 0.02),
                                        0.5 + rng.uniform(-0.05, 0.05)};
      const std::array<double, 2> b0 = {0.80 + rng.uniform(-0.02, 0.02),
                                        0.5 + rng.uniform(-0.05, 0.05)};
      const std::array<double, 2> meet = {(a0[0] + b0[0]) / 2, (a0[1] + b0[1]) / 2};
      for (int t = 0; t < frames; ++t) {
        a[static_cast<std::size_t>(t)] = lerp(a0, meet, t / denom);
        b[static_cast<std::size_t>(t)] = lerp(b0, meet, t / denom);
      }
      break;
    }
    case InteractionClass::Depart: {
      const std::array<double, 2> start = {0.5 + rng.uniform(-0.03, 0.03),
                                           0.5 + rng.uniform(-0.03, 0.03)};
      const std::array<double, 2> ea = {0.2 + rng.uniform(-0.03, 0.03),
                                        0.2 + rng.uniform(-0.03, 0.03)};
      const std::array<double, 2> eb = {0.8 + rng.uniform(-0.03, 0.03),
                                        0.8 + rng.uniform(-0.03, 0.03)};
      for (int t = 0; t < frames; ++t) {
        a[static_cast<std::size_t>(t)] = lerp(start, ea, t / denom);
        b[static_cast<std::size_t>(t)] = lerp(start, eb, t / denom);
      }
      break;
    }
    case InteractionClass::Chase: {
      const bool along_x = rng.uniform() < 0.5;
      const double lead0 = 0.40 + rng.uniform(0, 0.03);
      const double side = rng.uniform(0.3, 0.7);
      const double travel = 0.32, gap = 0.28;
      for (int t = 0; t < frames; ++t) {
        const double lead = lead0 + travel * (t / denom);
        const double tail = lead - gap;
        a[static_cast<std::size_t>(t)] = along_x ? std::array<double, 2>{lead, side}
                                                 : std::array<double, 2>{side, lead};
        b[static_cast<std::size_t>(t)] = along_x ? std::array<double, 2>{tail, side}
                                                 : std::array<double, 2>{side, tail};
      }
      break;
    }
    case InteractionClass::Swap: {
      // Vertical exchange. Keeping each program on its own axis (approach
      // horizontal, swap vertical, depart diagonal) leaves the classes
      // separable from motion alone.
      const std::array<double, 2> pa = {0.5 + rng.uniform(-0.015, 0.015),
                                        0.25 + rng.uniform(-0.015, 0.015)};
      const std::array<double, 2> pb = {0.5 + rng.uniform(-0.015, 0.015),
                                        0.75 + rng.uniform(-0.015, 0.015)};
      for (int t = 0; t < frames; ++t) {
        a[static_cast<std::size_t>(t)] = lerp(pa, pb, t / denom);
        b[static_cast<std::size_t>(t)] = lerp(pb, pa, t / denom);
      }
      break;
    }
    case InteractionClass::Static: {
      const std::array<double, 2> pa = {0.3 + rng.uniform(-0.03, 0.03),
                                        0.3 + rng.uniform(-0.03, 0.03)};
      const std::array<double, 2> pb = {0.7 + rng.uniform(-0.03, 0.03),
                                        0.7 + rng.uniform(-0.03, 0.03)};
      for (int t = 0; t < frames; ++t) {
        a[static_cast<std::size_t>(t)] = {pa[0] + jitter(), pa[1] + jitter()};
        b[static_cast<std::size_t>(t)] = {pb[0] + jitter(), pb[1] + jitter()};
      }
      break;
    }
  }
}

}  // namespace detail

// One scene: deterministic function of (spec, label, rng state). Objects carry
// a fixed identity embedding plus scaled box velocity in their features;
// distractors are fresh noise every frame.
template <typename Real>
GeneratedScene<Real> generate_scene(const SyntheticTaskSpec& spec, InteractionClass label,
                                    int label_index, Rng& rng) {
  using namespace detail;
  GeneratedScene<Real> scene;
  scene.label = label;

  const std::size_t num_objects = static_cast<std::size_t>(spec.objects);
  std::vector<double> sizes(num_objects);
  for (auto& s : sizes) s = rng.uniform(0.14, 0.18);

  // Center paths: the pair acts the program, extras idle in free corners.
  std::vector<std::vector<std::array<double, 2>>> centers(num_objects);
  pair_paths(label, rng, spec.frames, centers[0], centers[1]);
  const std::array<std::array<double, 2>, 2> corners = {{{0.15, 0.85}, {0.85, 0.15}}};
  for (std::size_t i = 2; i < num_objects; ++i) {
    centers[i].resize(static_cast<std::size_t>(spec.frames));
    for (auto& c : centers[i])
      c = {corners[i - 2][0] + rng.uniform(-kJitter, kJitter),
           corners[i - 2][1] + rng.uniform(-kJitter, kJitter)};
  }

  scene.tracks.resize(num_objects);
  for (std::size_t i = 0; i < num_objects; ++i)
    for (int t = 0; t < spec.frames; ++t)
      scene.tracks[i].push_back(box_at<Real>(centers[i][static_cast<std::size_t>(t)], sizes[i]));
  check(infer_interaction_class(scene.tracks[0], scene.tracks[1]) == label,
        "generate_scene: program produced geometry that misclassifies");

  std::vector<Tensor<Real>> identities;
  for (std::size_t i = 0; i < num_objects; ++i) {
    auto id = Tensor<Real>::vector(spec.identity_dim);
    for (int j = 0; j < id.size(); ++j) id[j] = Real(0.5 * rng.normal());
    identities.push_back(std::move(id));
  }

  auto& stream = scene.stream;
  stream.feat_dim = spec.feat_dim;
  stream.num_classes = static_cast<int>(spec.classes.size());
  check(label_index >= 0 && label_index < stream.num_classes,
        "generate_scene: label index out of range");
  stream.label = label_index;

  for (int t = 0; t < spec.frames; ++t) {
    FrameProposals<Real> frame;
    frame.frame_index = t + 1;
    for (std::size_t i = 0; i < num_objects; ++i) {
      RegionProposal<Real> rp;
      rp.score = Real(rng.uniform(0.7, 0.98));
      rp.box = scene.tracks[i][static_cast<std::size_t>(t)];
      rp.feature = Tensor<Real>::vector(spec.feat_dim);
      for (int j = 0; j < spec.identity_dim; ++j)
        rp.feature[j] = identities[i][j] + Real(spec.noise_sigma * rng.normal());
      const Box<Real>& cur = scene.tracks[i][static_cast<std::size_t>(t)];
      const Box<Real>& prev = scene.tracks[i][static_cast<std::size_t>(t > 0 ? t - 1 : 0)];
      const double vel[4] = {double(cur.x1 - prev.x1), double(cur.y1 - prev.y1),
                             double(cur.x2 - prev.x2), double(cur.y2 - prev.y2)};
      for (int j = 0; j < 4; ++j)
        rp.feature[spec.identity_dim + j] =
            Real(kVelocityScale * vel[j] + spec.noise_sigma * rng.normal());
      frame.proposals.push_back(std::move(rp));
    }
    for (int d = 0; d < spec.distractors; ++d) {
      RegionProposal<Real> rp;
      rp.score = Real(rng.uniform(0.05, 0.55));
      const double size = rng.uniform(0.06, 0.24);
      const std::array<double, 2> c = {rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)};
      rp.box = detail::box_at<Real>(c, size);
      rp.feature = Tensor<Real>::vector(spec.feat_dim);
      for (int j = 0; j < spec.feat_dim; ++j) rp.feature[j] = Real(0.5 * rng.normal());
      frame.proposals.push_back(std::move(rp));
    }
    stream.frames.push_back(std::move(frame));
  }
  return scene;
}

template <typename Real>
struct Dataset {
  std::vector<ProposalStream<Real>> train;
  std::vector<ProposalStream<Real>> test;
};

// Classes cycle so both splits have exact balance; the train split is then
// shuffled so batches mix classes. Byte-identical for identical (spec, seed).
template <typename Real>
Dataset<Real> generate_interaction_dataset(const SyntheticTaskSpec& spec, std::uint64_t seed,
                                           int train_count, int test_count) {
  spec.validate();
  check(train_count >= 1 && test_count >= 0,
        "generate_interaction_dataset: need at least one training stream");
  Dataset<Real> ds;
  Rng rng(seed);
  const auto fill = [&](std::vector<ProposalStream<Real>>& out, int count) {
    for (int i = 0; i < count; ++i) {
      const int label_index = i % static_cast<int>(spec.classes.size());
      out.push_back(generate_scene<Real>(spec, spec.classes[static_cast<std::size_t>(label_index)],
                                         label_index, rng)
                        .stream);
    }
  };
  fill(ds.train, train_count);
  fill(ds.test, test_count);
  rng.shuffle(ds.train);
  return ds;
}

// Task-spec files use the same key/value record shape as stream headers.
inline std::string serialize_task_spec(const SyntheticTaskSpec& spec) {
  std::string out = "classes";
  for (auto c : spec.classes) {
    out += ' ';
    out += interaction_name(c);
  }
  out += '\n';
  const auto kv = [&](const char* key, auto value) {
    out += key;
    out += ' ';
    if constexpr (std::is_floating_point_v<decltype(value)>)
      out += format_real(value);
    else
      out += std::to_string(value);
    out += '\n';
  };
  kv("objects", spec.objects);
  kv("distractors", spec.distractors);
  kv("frames", spec.frames);
  kv("feat_dim", spec.feat_dim);
  kv("identity_dim", spec.identity_dim);
  kv("noise", spec.noise_sigma);
  kv("proposals", spec.proposals);
  kv("nodes", spec.nodes);
  return out;
}

inline SyntheticTaskSpec parse_task_spec(std::string_view text) {
  SyntheticTaskSpec spec;
  LineCursor cursor(text);
  std::string_view line;
  while (cursor.next(line)) {
    const auto tokens = split_tokens(line);
    const std::string key(tokens[0]);
    const auto int_field = [&](int& slot) {
      if (tokens.size() != 2) throw ParseError(cursor.line_number(), key + ": expected one value");
      slot = static_cast<int>(parse_long(tokens[1], cursor.line_number()));
    };
    if (key == "classes") {
      if (tokens.size() < 2) throw ParseError(cursor.line_number(), "classes: expected names");
      spec.classes.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i)
        spec.classes.push_back(parse_interaction(std::string(tokens[i])));
    } else if (key == "objects") {
      int_field(spec.objects);
    } else if (key == "distractors") {
      int_field(spec.distractors);
    } else if (key == "frames") {
      int_field(spec.frames);
    } else if (key == "feat_dim") {
      int_field(spec.feat_dim);
    } else if (key == "identity_dim") {
      int_field(spec.identity_dim);
    } else if (key == "noise") {
      if (tokens.size() != 2) throw ParseError(cursor.line_number(), "noise: expected one value");
      spec.noise_sigma = parse_real<double>(tokens[1], cursor.line_number());
    } else if (key == "proposals") {
      int_field(spec.proposals);
    } else if (key == "nodes") {
      int_field(spec.nodes);
    } else {
      throw ParseError(cursor.line_number(), "unknown task-spec key: " + key);
    }
  }
  spec.validate();
  return spec;
}

}  // namespace dgm
