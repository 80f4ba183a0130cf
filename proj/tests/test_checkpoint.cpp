#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <unistd.h>

#include "dgm/checkpoint.hpp"
#include "dgm/engine.hpp"
#include "dgm/io.hpp"
#include "dgm/synthetic.hpp"

using dgm::CheckpointError;
using dgm::Model;
using dgm::ModelConfig;
using dgm::ModelVariant;

namespace {

// unique temp path per test case, removed on scope exit
struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const char* tag)
      : path(std::filesystem::temp_directory_path() /
             (std::string("dgm_ckpt_") + tag + "_" + std::to_string(::getpid()) + ".bin")) {}
  ~TempFile() { std::filesystem::remove(path); }
};

ModelConfig round_trip_config() {
  ModelConfig config;
  config.variant = ModelVariant::Visual;
  config.feat_dim = 6;
  config.num_classes = 4;
  config.proposals_per_frame = 4;
  config.nodes = 2;
  config.internal_rounds = 2;
  return config;
}

CheckpointError::Kind load_kind(const std::filesystem::path& path) {
  try {
    dgm::load_checkpoint<float>(path);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  throw std::logic_error("expected the load to fail");
}

}  // namespace

TEST_CASE("checkpoints restore every parameter bit for bit", "[checkpoint]") {
  TempFile file("roundtrip");
  const auto model = dgm::build_model<float>(round_trip_config(), 5);
  dgm::save_checkpoint(model, file.path);
  const auto loaded = dgm::load_checkpoint<float>(file.path);

  CHECK(loaded.config.variant == model.config.variant);
  CHECK(loaded.config.feat_dim == model.config.feat_dim);
  CHECK(loaded.config.internal_rounds == model.config.internal_rounds);
  REQUIRE(loaded.store.entry_count() == model.store.entry_count());
  for (std::size_t e = 0; e < model.store.entry_count(); ++e) {
    const auto& a = model.store.at(e);
    const auto& b = loaded.store.at(e);
    CHECK(a.name == b.name);
    REQUIRE(a.value.size() == b.value.size());
    for (int i = 0; i < a.value.size(); ++i) CHECK(a.value[i] == b.value[i]);
    for (int i = 0; i < b.velocity.size(); ++i) CHECK(b.velocity[i] == 0.0f);
  }
}

TEST_CASE("a reloaded model predicts identically", "[checkpoint]") {
  TempFile file("logits");
  dgm::SyntheticTaskSpec spec;
  spec.frames = 4;
  ModelConfig config;
  config.variant = ModelVariant::Location;
  config.feat_dim = spec.feat_dim;
  config.num_classes = 5;
  config.proposals_per_frame = spec.proposals;
  config.nodes = spec.nodes;

  const auto model = dgm::build_model<float>(config, 9);
  dgm::save_checkpoint(model, file.path);
  const auto loaded = dgm::load_checkpoint<float>(file.path);

  const auto data = dgm::generate_interaction_dataset<float>(spec, 77, 1, 10);
  for (const auto& stream : data.test) {
    const auto a = dgm::run_streaming(model, stream);
    const auto b = dgm::run_streaming(loaded, stream);
    REQUIRE(a.length() == b.length());
    for (std::size_t t = 0; t < a.length(); ++t)
      for (int k = 0; k < 5; ++k) CHECK(a.logits[t][k] == b.logits[t][k]);
  }
}

TEST_CASE("corruption anywhere in the payload is caught", "[checkpoint]") {
  TempFile file("corrupt");
  const auto model = dgm::build_model<float>(round_trip_config(), 13);
  dgm::save_checkpoint(model, file.path);

  const std::string clean = dgm::read_text_file(file.path);
  // flip one bit in the middle of the payload
  const std::size_t header_len = static_cast<unsigned char>(clean[4]) |
                                 (static_cast<unsigned char>(clean[5]) << 8) |
                                 (static_cast<unsigned char>(clean[6]) << 16) |
                                 (static_cast<unsigned char>(clean[7]) << 24);
  const std::size_t payload_start = 8 + header_len;
  const std::size_t payload_end = clean.size() - 4;

  std::string corrupt = clean;
  corrupt[payload_start + (payload_end - payload_start) / 2] ^= 0x10;
  dgm::write_text_file(file.path, corrupt);
  CHECK(load_kind(file.path) == CheckpointError::Kind::BadChecksum);

  // first payload byte and last payload byte too
  corrupt = clean;
  corrupt[payload_start] ^= 0x01;
  dgm::write_text_file(file.path, corrupt);
  CHECK(load_kind(file.path) == CheckpointError::Kind::BadChecksum);

  corrupt = clean;
  corrupt[payload_end - 1] ^= 0x80;
  dgm::write_text_file(file.path, corrupt);
  CHECK(load_kind(file.path) == CheckpointError::Kind::BadChecksum);
}

TEST_CASE("foreign and truncated files are rejected by kind", "[checkpoint]") {
  TempFile file("reject");
  const auto model = dgm::build_model<float>(round_trip_config(), 17);
  dgm::save_checkpoint(model, file.path);
  const std::string clean = dgm::read_text_file(file.path);

  SECTION("wrong magic") {
    std::string bad = clean;
    bad[0] = 'X';
    dgm::write_text_file(file.path, bad);
    CHECK(load_kind(file.path) == CheckpointError::Kind::BadMagic);
  }
  SECTION("empty file") {
    dgm::write_text_file(file.path, "");
    CHECK(load_kind(file.path) == CheckpointError::Kind::Truncated);
  }
  SECTION("cut inside the header") {
    dgm::write_text_file(file.path, clean.substr(0, 20));
    CHECK(load_kind(file.path) == CheckpointError::Kind::Truncated);
  }
  SECTION("cut inside the payload") {
    dgm::write_text_file(file.path, clean.substr(0, clean.size() - 10));
    CHECK(load_kind(file.path) == CheckpointError::Kind::Truncated);
  }
  SECTION("a plain text file") {
    dgm::write_text_file(file.path, "variant visual\nfeat_dim 6\n");
    CHECK(load_kind(file.path) == CheckpointError::Kind::BadMagic);
  }
}

TEST_CASE("the typed loader enforces the expected variant", "[checkpoint]") {
  TempFile file("variant");
  const auto model = dgm::build_model<float>(round_trip_config(), 19);
  dgm::save_checkpoint(model, file.path);

  CHECK_NOTHROW(dgm::load_checkpoint<float>(file.path, ModelVariant::Visual));
  try {
    dgm::load_checkpoint<float>(file.path, ModelVariant::Location);
    FAIL("expected a variant mismatch");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointError::Kind::VariantMismatch);
  }
}

TEST_CASE("inspection summarizes the stored configuration", "[checkpoint]") {
  TempFile file("inspect");
  auto config = round_trip_config();
  config.variant = ModelVariant::Location;
  const auto model = dgm::build_model<float>(config, 23);
  dgm::save_checkpoint(model, file.path);

  const auto text = dgm::inspect_checkpoint(file.path);
  CHECK(text.find("variant location\n") != std::string::npos);
  CHECK(text.find("feat_dim 6\n") != std::string::npos);
  CHECK(text.find("tensors " + std::to_string(model.store.entry_count()) + "\n") !=
        std::string::npos);
  CHECK(text.find("parameters " + std::to_string(model.parameter_count()) + "\n") !=
        std::string::npos);
}

TEST_CASE("missing files surface an io error", "[checkpoint]") {
  CHECK_THROWS_AS(dgm::load_checkpoint<float>("/nonexistent/dgm_checkpoint.bin"), dgm::IoError);
}
