#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dgm/box.hpp"
#include "dgm/tensor.hpp"
#include "dgm/text.hpp"

namespace dgm {

// One detector output: confidence, box and region feature.
template <typename Real>
struct RegionProposal {
  Real score = 0;
  Box<Real> box;
  Tensor<Real> feature;
};

template <typename Real>
struct FrameProposals {
  int frame_index = 0;  // 1-based
  std::vector<RegionProposal<Real>> proposals;
};

// An entire input sequence: header plus frames in temporal order. This is the
// artifact's stand-in for a video; the upstream detector is out of the picture.
template <typename Real>
struct ProposalStream {
  int feat_dim = 0;
  int num_classes = 0;
  std::optional<int> label;
  std::optional<Tensor<Real>> global_feature;
  std::vector<FrameProposals<Real>> frames;
};

// Highest k scores, stable on ties by original index, result in score order.
// Underfull frames are padded by repeating the lowest-scored kept proposal so
// downstream matrices keep a fixed shape.
template <typename Real>
FrameProposals<Real> top_k_by_score(const FrameProposals<Real>& frame, int k) {
  check(k >= 1, "top_k_by_score: k must be >= 1");
  check(!frame.proposals.empty(), "top_k_by_score: empty frame");
  // Stable sort: ties keep their original order, so selection under equal
  // scores is reproducible. With distinct scores the selected sequence is a
  // pure function of the proposal multiset.
  std::vector<int> order(frame.proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return frame.proposals[static_cast<std::size_t>(a)].score >
           frame.proposals[static_cast<std::size_t>(b)].score;
  });
  FrameProposals<Real> out;
  out.frame_index = frame.frame_index;
  int keep = std::min<int>(k, static_cast<int>(order.size()));
  for (int i = 0; i < keep; ++i)
    out.proposals.push_back(frame.proposals[static_cast<std::size_t>(order[i])]);
  while (static_cast<int>(out.proposals.size()) < k) out.proposals.push_back(out.proposals.back());
  return out;
}

template <typename Real>
Tensor<Real> max_pool_features(const FrameProposals<Real>& frame) {
  check(!frame.proposals.empty(), "max_pool_features: empty frame");
  Tensor<Real> out = frame.proposals.front().feature;
  for (std::size_t i = 1; i < frame.proposals.size(); ++i) {
    const Tensor<Real>& f = frame.proposals[i].feature;
    check(f.size() == out.size(), "max_pool_features: feature length mismatch");
    for (int d = 0; d < out.size(); ++d) out[d] = std::max(out[d], f[d]);
  }
  return out;
}

template <typename Real>
Tensor<Real> mean_pool_features(const FrameProposals<Real>& frame) {
  check(!frame.proposals.empty(), "mean_pool_features: empty frame");
  Tensor<Real> out = frame.proposals.front().feature;
  for (std::size_t i = 1; i < frame.proposals.size(); ++i)
    for (int d = 0; d < out.size(); ++d) out[d] += frame.proposals[i].feature[d];
  for (int d = 0; d < out.size(); ++d) out[d] /= static_cast<Real>(frame.proposals.size());
  return out;
}

// Proposal features stacked as an N x D row matrix.
template <typename Real>
Tensor<Real> feature_matrix(const FrameProposals<Real>& frame) {
  check(!frame.proposals.empty(), "feature_matrix: empty frame");
  int n = static_cast<int>(frame.proposals.size());
  int d = frame.proposals.front().feature.size();
  Tensor<Real> m = Tensor<Real>::matrix(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = frame.proposals[static_cast<std::size_t>(i)].feature[j];
  return m;
}

// --- stream file format -----------------------------------------------------
//
// Line-delimited UTF-8, whitespace-separated tokens, floats printed with
// shortest round-trip formatting:
//
//   header feat_dim <D> classes <K> [label <L>] [global <G> <v1> ... <vG>]
//   frame <t> <P> { <score> <x1> <y1> <x2> <y2> <f1> ... <fD> } * P
//
// Frames appear in temporal order with strictly increasing 1-based indices.

namespace detail {

template <typename Real>
Box<Real> parse_box(const std::vector<std::string_view>& toks, std::size_t at, std::size_t line) {
  Box<Real> b{parse_real<Real>(toks[at], line), parse_real<Real>(toks[at + 1], line),
              parse_real<Real>(toks[at + 2], line), parse_real<Real>(toks[at + 3], line)};
  if (!b.valid()) throw ParseError(line, "invalid box (need 0 <= x1 <= x2 <= 1, same for y)");
  return b;
}

}  // namespace detail

// Header record alone, no frames. Split out so line-at-a-time consumers (the
// live streaming path) share the exact grammar with whole-file parsing.
template <typename Real>
ProposalStream<Real> parse_stream_header(const std::vector<std::string_view>& toks,
                                         std::size_t ln) {
  if (toks.empty() || toks[0] != "header") throw ParseError(ln, "expected 'header' record");
  ProposalStream<Real> stream;
  std::size_t i = 1;
  auto want = [&](std::size_t more, const char* what) {
    if (i + more > toks.size()) throw ParseError(ln, std::string("truncated header: missing ") + what);
  };
  want(2, "feat_dim");
  if (toks[i] != "feat_dim") throw ParseError(ln, "expected 'feat_dim'");
  stream.feat_dim = static_cast<int>(parse_long(toks[i + 1], ln));
  if (stream.feat_dim < 1) throw ParseError(ln, "feat_dim must be >= 1");
  i += 2;
  want(2, "classes");
  if (toks[i] != "classes") throw ParseError(ln, "expected 'classes'");
  stream.num_classes = static_cast<int>(parse_long(toks[i + 1], ln));
  if (stream.num_classes < 1) throw ParseError(ln, "classes must be >= 1");
  i += 2;
  if (i < toks.size() && toks[i] == "label") {
    want(2, "label value");
    int label = static_cast<int>(parse_long(toks[i + 1], ln));
    if (label < 0 || label >= stream.num_classes) throw ParseError(ln, "label out of range");
    stream.label = label;
    i += 2;
  }
  if (i < toks.size() && toks[i] == "global") {
    want(2, "global length");
    int g = static_cast<int>(parse_long(toks[i + 1], ln));
    if (g < 1) throw ParseError(ln, "global length must be >= 1");
    i += 2;
    want(static_cast<std::size_t>(g), "global values");
    Tensor<Real> gf = Tensor<Real>::vector(g);
    for (int k = 0; k < g; ++k) gf[k] = parse_real<Real>(toks[i + static_cast<std::size_t>(k)], ln);
    stream.global_feature = std::move(gf);
    i += static_cast<std::size_t>(g);
  }
  if (i != toks.size()) throw ParseError(ln, "unexpected trailing tokens in header");
  return stream;
}

// One frame record. `last_index` enforces strictly increasing frame order.
template <typename Real>
FrameProposals<Real> parse_frame_record(const std::vector<std::string_view>& toks, int feat_dim,
                                        int last_index, std::size_t ln) {
  if (toks.empty() || toks[0] != "frame") throw ParseError(ln, "expected 'frame' record");
  if (toks.size() < 3) throw ParseError(ln, "truncated frame record");
  FrameProposals<Real> frame;
  frame.frame_index = static_cast<int>(parse_long(toks[1], ln));
  if (frame.frame_index <= last_index)
    throw ParseError(ln, "frame indices must be strictly increasing and start at >= 1");
  int count = static_cast<int>(parse_long(toks[2], ln));
  if (count < 0) throw ParseError(ln, "negative proposal count");
  std::size_t per = 5 + static_cast<std::size_t>(feat_dim);
  if (toks.size() != 3 + per * static_cast<std::size_t>(count))
    throw ParseError(ln, "frame record token count does not match declared proposals and feat_dim");
  for (int p = 0; p < count; ++p) {
    std::size_t at = 3 + per * static_cast<std::size_t>(p);
    RegionProposal<Real> rp;
    rp.score = parse_real<Real>(toks[at], ln);
    if (rp.score < Real(0) || rp.score > Real(1)) throw ParseError(ln, "score must be in [0,1]");
    rp.box = detail::parse_box<Real>(toks, at + 1, ln);
    rp.feature = Tensor<Real>::vector(feat_dim);
    for (int d = 0; d < feat_dim; ++d)
      rp.feature[d] = parse_real<Real>(toks[at + 5 + static_cast<std::size_t>(d)], ln);
    frame.proposals.push_back(std::move(rp));
  }
  return frame;
}

template <typename Real>
ProposalStream<Real> parse_proposal_stream(std::string_view text) {
  LineCursor cursor(text);
  std::string_view line;
  if (!cursor.next(line)) throw ParseError(1, "empty input, expected header record");
  ProposalStream<Real> stream =
      parse_stream_header<Real>(split_tokens(line), cursor.line_number());
  int last_index = 0;
  while (cursor.next(line)) {
    stream.frames.push_back(parse_frame_record<Real>(split_tokens(line), stream.feat_dim,
                                                     last_index, cursor.line_number()));
    last_index = stream.frames.back().frame_index;
  }
  return stream;
}

template <typename Real>
std::string serialize_proposal_stream(const ProposalStream<Real>& s) {
  std::string out = "header feat_dim " + std::to_string(s.feat_dim) + " classes " +
                    std::to_string(s.num_classes);
  if (s.label) out += " label " + std::to_string(*s.label);
  if (s.global_feature) {
    out += " global " + std::to_string(s.global_feature->size());
    for (int k = 0; k < s.global_feature->size(); ++k)
      out += " " + format_real((*s.global_feature)[k]);
  }
  out += "\n";
  for (const auto& frame : s.frames) {
    out += "frame " + std::to_string(frame.frame_index) + " " +
           std::to_string(frame.proposals.size());
    for (const auto& p : frame.proposals) {
      out += " " + format_real(p.score);
      out += " " + format_real(p.box.x1) + " " + format_real(p.box.y1) + " " +
             format_real(p.box.x2) + " " + format_real(p.box.y2);
      for (int d = 0; d < p.feature.size(); ++d) out += " " + format_real(p.feature[d]);
    }
    out += "\n";
  }
  return out;
}

template <typename Real>
bool operator==(const RegionProposal<Real>& a, const RegionProposal<Real>& b) {
  return a.score == b.score && a.box == b.box && a.feature.data() == b.feature.data();
}

template <typename Real>
bool operator==(const FrameProposals<Real>& a, const FrameProposals<Real>& b) {
  return a.frame_index == b.frame_index && a.proposals == b.proposals;
}

template <typename Real>
bool operator==(const ProposalStream<Real>& a, const ProposalStream<Real>& b) {
  if (a.feat_dim != b.feat_dim || a.num_classes != b.num_classes || a.label != b.label)
    return false;
  if (a.global_feature.has_value() != b.global_feature.has_value()) return false;
  if (a.global_feature && a.global_feature->data() != b.global_feature->data()) return false;
  return a.frames == b.frames;
}

}  // namespace dgm
