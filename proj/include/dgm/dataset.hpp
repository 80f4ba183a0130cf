#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include "dgm/io.hpp"
#include "dgm/proposal.hpp"
#include "dgm/synthetic.hpp"

namespace dgm {

// On disk a dataset is a directory of stream files plus "manifest.txt", one
// line per stream: the split tag (train|test) and a path relative to the
// directory.
inline constexpr const char* kManifestName = "manifest.txt";

template <typename Real>
void write_dataset(const std::filesystem::path& dir, const Dataset<Real>& ds) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  const auto dump = [&](const std::vector<ProposalStream<Real>>& streams, const char* split) {
    for (std::size_t i = 0; i < streams.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%s_%05zu.pstream", split, i);
      write_text_file(dir / name, serialize_proposal_stream(streams[i]));
      manifest += split;
      manifest += ' ';
      manifest += name;
      manifest += '\n';
    }
  };
  dump(ds.train, "train");
  dump(ds.test, "test");
  write_text_file(dir / kManifestName, manifest);
}

template <typename Real>
Dataset<Real> load_dataset(const std::filesystem::path& dir) {
  Dataset<Real> ds;
  const std::string manifest = read_text_file(dir / kManifestName);
  LineCursor cursor(manifest);
  std::string_view line;
  while (cursor.next(line)) {
    const auto tokens = split_tokens(line);
    if (tokens.size() != 2)
      throw ParseError(cursor.line_number(), "manifest: expected '<split> <path>'");
    const std::string split(tokens[0]);
    auto stream = parse_proposal_stream<Real>(read_text_file(dir / std::string(tokens[1])));
    if (split == "train")
      ds.train.push_back(std::move(stream));
    else if (split == "test")
      ds.test.push_back(std::move(stream));
    else
      throw ParseError(cursor.line_number(), "manifest: unknown split: " + split);
  }
  return ds;
}

}  // namespace dgm
