#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgm/io.hpp"
#include "dgm/model.hpp"
#include "dgm/text.hpp"

namespace dgm {
namespace detail {

inline std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xFF));
  out.push_back(char((v >> 8) & 0xFF));
  out.push_back(char((v >> 16) & 0xFF));
  out.push_back(char((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'D', 'G', 'M', '1'};

// Layout: magic, u32 header length, text header (config then the ordered
// parameter manifest), payload of little-endian 32-bit floats in manifest
// order, u32 CRC32 of the payload.
template <typename Real>
void save_checkpoint(const Model<Real>& model, const std::filesystem::path& path) {
  const ModelConfig& c = model.config;
  std::ostringstream header;
  header << "variant " << variant_name(c.variant) << "\n"
         << "feat_dim " << c.feat_dim << "\n"
         << "classes " << c.num_classes << "\n"
         << "proposals " << c.proposals_per_frame << "\n"
         << "nodes " << c.nodes << "\n"
         << "rounds " << c.internal_rounds << "\n"
         << "static " << (c.static_mode ? 1 : 0) << "\n"
         << "global_dim " << c.global_dim << "\n"
         << "dropout " << format_real(c.dropout) << "\n"
         << "lstm_hidden " << c.lstm_hidden << "\n"
         << "params " << model.store.entry_count() << "\n";
  for (const auto& p : model.store)
    header << p.name << " " << p.value.rows() << " " << p.value.cols() << "\n";
  const std::string header_text = header.str();

  std::string payload;
  for (const auto& p : model.store)
    for (int i = 0; i < p.value.size(); ++i)
      detail::put_u32_le(payload, std::bit_cast<std::uint32_t>(float(p.value[i])));

  std::string blob(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32_le(blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;
  blob += payload;
  detail::put_u32_le(blob, detail::crc32_ieee(
                               reinterpret_cast<const unsigned char*>(payload.data()),
                               payload.size()));
  write_text_file(path, blob);
}

template <typename Real>
Model<Real> load_checkpoint(const std::filesystem::path& path) {
  using Kind = CheckpointError::Kind;
  const std::string blob = read_text_file(path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < sizeof kCheckpointMagic + 4)
    throw CheckpointError(Kind::Truncated, "checkpoint shorter than its fixed prelude");
  if (std::memcmp(blob.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw CheckpointError(Kind::BadMagic, "not a model checkpoint (bad magic)");
  const std::size_t header_len = detail::get_u32_le(bytes + 4);
  const std::size_t header_off = sizeof kCheckpointMagic + 4;
  if (blob.size() < header_off + header_len + 4)
    throw CheckpointError(Kind::Truncated, "checkpoint header extends past end of file");

  // Header: fixed config keys, then "params <n>" and n manifest rows.
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> shapes;
  {
    const std::string_view header(blob.data() + header_off, header_len);
    LineCursor cursor(header);
    long declared = -1;
    const auto next_tokens = [&](std::size_t expect) {
      std::string_view line;
      if (!cursor.next(line))
        throw CheckpointError(Kind::ManifestMismatch, "checkpoint header truncated");
      auto tokens = split_tokens(line);
      if (tokens.size() != expect)
        throw CheckpointError(Kind::ManifestMismatch, "malformed checkpoint header line");
      return tokens;
    };
    const auto keyed = [&](const char* key) {
      auto tokens = next_tokens(2);
      if (tokens[0] != key)
        throw CheckpointError(Kind::ManifestMismatch,
                              std::string("expected header key ") + key);
      return std::string(tokens[1]);
    };
    try {
      config.variant = parse_variant(keyed("variant"));
      config.feat_dim = static_cast<int>(std::stol(keyed("feat_dim")));
      config.num_classes = static_cast<int>(std::stol(keyed("classes")));
      config.proposals_per_frame = static_cast<int>(std::stol(keyed("proposals")));
      config.nodes = static_cast<int>(std::stol(keyed("nodes")));
      config.internal_rounds = static_cast<int>(std::stol(keyed("rounds")));
      config.static_mode = std::stol(keyed("static")) != 0;
      config.global_dim = static_cast<int>(std::stol(keyed("global_dim")));
      config.dropout = std::stod(keyed("dropout"));
      config.lstm_hidden = static_cast<int>(std::stol(keyed("lstm_hidden")));
      declared = std::stol(keyed("params"));
      for (long i = 0; i < declared; ++i) {
        auto tokens = next_tokens(3);
        names.emplace_back(tokens[0]);
        shapes.emplace_back(static_cast<int>(std::stol(std::string(tokens[1]))),
                            static_cast<int>(std::stol(std::string(tokens[2]))));
      }
    } catch (const std::invalid_argument&) {
      throw CheckpointError(Kind::ManifestMismatch, "non-numeric field in checkpoint header");
    } catch (const std::out_of_range&) {
      throw CheckpointError(Kind::ManifestMismatch, "out-of-range field in checkpoint header");
    } catch (const ContractError& e) {
      throw CheckpointError(Kind::ManifestMismatch, e.what());
    }
  }

  Model<Real> model = [&] {
    try {
      return build_model<Real>(config, 0);
    } catch (const ContractError& e) {
      throw CheckpointError(Kind::ManifestMismatch, e.what());
    }
  }();
  if (model.store.entry_count() != names.size())
    throw CheckpointError(Kind::ManifestMismatch, "parameter count differs from manifest");
  std::size_t scalars = 0;
  {
    std::size_t i = 0;
    for (const auto& p : model.store) {
      if (p.name != names[i] || p.value.rows() != shapes[i].first ||
          p.value.cols() != shapes[i].second)
        throw CheckpointError(Kind::ManifestMismatch,
                              "manifest entry does not match model structure: " + names[i]);
      scalars += static_cast<std::size_t>(p.value.size());
      ++i;
    }
  }

  const std::size_t payload_off = header_off + header_len;
  const std::size_t payload_len = scalars * 4;
  if (blob.size() != payload_off + payload_len + 4)
    throw CheckpointError(Kind::Truncated, "payload length disagrees with manifest");
  const std::uint32_t stored_crc = detail::get_u32_le(bytes + payload_off + payload_len);
  const std::uint32_t actual_crc = detail::crc32_ieee(bytes + payload_off, payload_len);
  if (stored_crc != actual_crc)
    throw CheckpointError(Kind::BadChecksum, "payload checksum mismatch");

  std::size_t off = payload_off;
  for (auto& p : model.store) {
    for (int i = 0; i < p.value.size(); ++i, off += 4)
      p.value[i] = Real(std::bit_cast<float>(detail::get_u32_le(bytes + off)));
    p.velocity.fill(Real(0));
  }
  return model;
}

template <typename Real>
Model<Real> load_checkpoint(const std::filesystem::path& path, ModelVariant expected) {
  Model<Real> model = load_checkpoint<Real>(path);
  if (model.config.variant != expected)
    throw CheckpointError(CheckpointError::Kind::VariantMismatch,
                          std::string("checkpoint holds a ") +
                              variant_name(model.config.variant) + " model, expected " +
                              variant_name(expected));
  return model;
}

// Human-oriented summary of a checkpoint's header.
inline std::string inspect_checkpoint(const std::filesystem::path& path) {
  auto model = load_checkpoint<float>(path);
  const ModelConfig& c = model.config;
  std::ostringstream out;
  out << "variant " << variant_name(c.variant) << "\n"
      << "feat_dim " << c.feat_dim << "\n"
      << "classes " << c.num_classes << "\n"
      << "proposals " << c.proposals_per_frame << "\n"
      << "nodes " << c.nodes << "\n"
      << "rounds " << c.internal_rounds << "\n"
      << "static " << (c.static_mode ? 1 : 0) << "\n"
      << "lstm_hidden " << c.lstm_hidden << "\n"
      << "tensors " << model.store.entry_count() << "\n"
      << "parameters " << model.parameter_count() << "\n";
  return out.str();
}

}  // namespace dgm
