#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "dgm/synthetic.hpp"

using dgm::InteractionClass;
using dgm::SyntheticTaskSpec;

namespace {

SyntheticTaskSpec quiet_spec() {
  SyntheticTaskSpec spec;
  spec.noise_sigma = 0;
  return spec;
}

}  // namespace

TEST_CASE("identical spec and seed regenerate byte-identical data", "[synthetic]") {
  const SyntheticTaskSpec spec;
  const auto a = dgm::generate_interaction_dataset<float>(spec, 123, 20, 10);
  const auto b = dgm::generate_interaction_dataset<float>(spec, 123, 20, 10);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i)
    CHECK(dgm::serialize_proposal_stream(a.train[i]) == dgm::serialize_proposal_stream(b.train[i]));
  for (std::size_t i = 0; i < a.test.size(); ++i)
    CHECK(dgm::serialize_proposal_stream(a.test[i]) == dgm::serialize_proposal_stream(b.test[i]));

  const auto c = dgm::generate_interaction_dataset<float>(spec, 124, 20, 10);
  CHECK(dgm::serialize_proposal_stream(a.train[0]) != dgm::serialize_proposal_stream(c.train[0]));
}

TEST_CASE("every generated scene classifies back to its label", "[synthetic][property]") {
  const SyntheticTaskSpec spec;
  dgm::Rng rng(201);
  for (int it = 0; it < 250; ++it) {
    const int index = it % static_cast<int>(spec.classes.size());
    const auto scene = dgm::generate_scene<float>(
        spec, spec.classes[static_cast<std::size_t>(index)], index, rng);
    CHECK(dgm::infer_interaction_class(scene.tracks[0], scene.tracks[1]) == scene.label);
    CHECK(scene.stream.label.value() == index);
  }
}

TEST_CASE("class balance is exact in both splits", "[synthetic]") {
  const SyntheticTaskSpec spec;
  const auto ds = dgm::generate_interaction_dataset<float>(spec, 7, 1000, 100);
  std::vector<int> train_hist(5, 0), test_hist(5, 0);
  for (const auto& s : ds.train) ++train_hist[static_cast<std::size_t>(s.label.value())];
  for (const auto& s : ds.test) ++test_hist[static_cast<std::size_t>(s.label.value())];
  for (int k = 0; k < 5; ++k) {
    CHECK(train_hist[static_cast<std::size_t>(k)] == 200);
    CHECK(test_hist[static_cast<std::size_t>(k)] == 20);
  }

  // the test split keeps the cycle; the train split is shuffled away from it
  bool test_cycles = true;
  for (std::size_t i = 0; i < ds.test.size(); ++i)
    test_cycles &= ds.test[i].label.value() == static_cast<int>(i % 5);
  CHECK(test_cycles);
  bool train_cycles = true;
  for (std::size_t i = 0; i < ds.train.size(); ++i)
    train_cycles &= ds.train[i].label.value() == static_cast<int>(i % 5);
  CHECK_FALSE(train_cycles);
}

TEST_CASE("noise-free approach scenes close the gap", "[synthetic]") {
  dgm::Rng rng(202);
  const auto spec = quiet_spec();
  for (int it = 0; it < 50; ++it) {
    const auto scene = dgm::generate_scene<double>(spec, InteractionClass::Approach, 0, rng);
    const auto& a = scene.tracks[0];
    const auto& b = scene.tracks[1];
    CHECK(dgm::iou(a.front(), b.front()) < 0.05);
    CHECK(dgm::iou(a.back(), b.back()) > 0.3);
  }
}

TEST_CASE("noise-free static scenes barely move", "[synthetic]") {
  dgm::Rng rng(203);
  const auto spec = quiet_spec();
  for (int it = 0; it < 50; ++it) {
    const auto scene = dgm::generate_scene<double>(spec, InteractionClass::Static, 4, rng);
    for (int obj = 0; obj < 2; ++obj) {
      const auto& track = scene.tracks[static_cast<std::size_t>(obj)];
      const auto c0 = dgm::detail::box_center(track.front());
      for (const auto& box : track) {
        const auto c = dgm::detail::box_center(box);
        CHECK(dgm::detail::center_dist(c0, c) < 0.01);
      }
    }
  }
}

TEST_CASE("velocity features are scaled box deltas, zero on the first frame", "[synthetic]") {
  dgm::Rng rng(204);
  const auto spec = quiet_spec();
  const auto scene = dgm::generate_scene<float>(spec, InteractionClass::Swap, 3, rng);
  const int id = spec.identity_dim;

  for (int t = 0; t < spec.frames; ++t) {
    const auto& frame = scene.stream.frames[static_cast<std::size_t>(t)];
    for (int obj = 0; obj < spec.objects; ++obj) {
      const auto& rp = frame.proposals[static_cast<std::size_t>(obj)];
      const auto& track = scene.tracks[static_cast<std::size_t>(obj)];
      const auto& cur = track[static_cast<std::size_t>(t)];
      const auto& prev = track[static_cast<std::size_t>(t > 0 ? t - 1 : 0)];
      const double want[4] = {5.0 * double(cur.x1 - prev.x1), 5.0 * double(cur.y1 - prev.y1),
                              5.0 * double(cur.x2 - prev.x2), 5.0 * double(cur.y2 - prev.y2)};
      for (int j = 0; j < 4; ++j) CHECK(rp.feature[id + j] == float(want[j]));
      if (t == 0)
        for (int j = 0; j < 4; ++j) CHECK(rp.feature[id + j] == 0.0f);
    }
  }
}

TEST_CASE("object identities hold still while distractors churn", "[synthetic]") {
  dgm::Rng rng(205);
  const auto spec = quiet_spec();
  const auto scene = dgm::generate_scene<float>(spec, InteractionClass::Chase, 2, rng);

  for (int obj = 0; obj < spec.objects; ++obj) {
    const auto& first = scene.stream.frames[0].proposals[static_cast<std::size_t>(obj)];
    for (const auto& frame : scene.stream.frames) {
      const auto& rp = frame.proposals[static_cast<std::size_t>(obj)];
      for (int j = 0; j < spec.identity_dim; ++j) CHECK(rp.feature[j] == first.feature[j]);
    }
  }
}

TEST_CASE("the interacting pair always wins the score ranking", "[synthetic][property]") {
  dgm::Rng rng(206);
  const SyntheticTaskSpec spec;
  for (int it = 0; it < 100; ++it) {
    const int index = it % 5;
    const auto scene = dgm::generate_scene<float>(
        spec, spec.classes[static_cast<std::size_t>(index)], index, rng);
    for (std::size_t t = 0; t < scene.stream.frames.size(); ++t) {
      const auto top = dgm::top_k_by_score(scene.stream.frames[t], 2);
      for (const auto& rp : top.proposals) {
        const bool is_object = rp.box == scene.tracks[0][t] || rp.box == scene.tracks[1][t];
        CHECK(is_object);
      }
    }
  }
}

TEST_CASE("task specs round-trip through their text form", "[synthetic]") {
  SyntheticTaskSpec spec;
  spec.classes = {InteractionClass::Approach, InteractionClass::Static, InteractionClass::Swap};
  spec.objects = 3;
  spec.distractors = 2;
  spec.frames = 6;
  spec.identity_dim = 8;
  spec.feat_dim = 12;
  spec.noise_sigma = 0.125;
  spec.proposals = 5;
  spec.nodes = 2;

  const auto back = dgm::parse_task_spec(dgm::serialize_task_spec(spec));
  CHECK(back.classes == spec.classes);
  CHECK(back.objects == spec.objects);
  CHECK(back.distractors == spec.distractors);
  CHECK(back.frames == spec.frames);
  CHECK(back.feat_dim == spec.feat_dim);
  CHECK(back.identity_dim == spec.identity_dim);
  CHECK(back.noise_sigma == spec.noise_sigma);
  CHECK(back.proposals == spec.proposals);
  CHECK(back.nodes == spec.nodes);

  CHECK_THROWS_AS(dgm::parse_task_spec("classes approach depart\nwobble 3\n"), dgm::ParseError);
  CHECK_THROWS_AS(dgm::parse_task_spec("classes approach mystery\n"), dgm::ContractError);
}

TEST_CASE("spec validation rejects inconsistent settings", "[synthetic]") {
  SyntheticTaskSpec ok;
  CHECK_NOTHROW(ok.validate());

  auto bad = ok;
  bad.objects = 5;
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);
  bad = ok;
  bad.frames = 1;
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);
  bad = ok;
  bad.feat_dim = 17;
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);
  bad = ok;
  bad.classes = {InteractionClass::Approach, InteractionClass::Approach};
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);
  bad = ok;
  bad.nodes = bad.proposals + 1;
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);
  bad = ok;
  bad.classes = {InteractionClass::Approach};
  CHECK_THROWS_AS(bad.validate(), dgm::ContractError);

  CHECK_THROWS_AS(dgm::generate_interaction_dataset<float>(ok, 1, 0, 5), dgm::ContractError);
}
