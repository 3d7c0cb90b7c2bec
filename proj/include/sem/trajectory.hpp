// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sem/error.hpp"

namespace sem {

enum class SegmentKind { Think, Answer, Search, Result };

constexpr std::array<SegmentKind, 4> kAllSegmentKinds = {
    SegmentKind::Think, SegmentKind::Answer, SegmentKind::Search,
    SegmentKind::Result};

constexpr std::string_view tag_name(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Think: return "think";
    case SegmentKind::Answer: return "answer";
    case SegmentKind::Search: return "search";
    case SegmentKind::Result: return "result";
  }
  return "";
}

inline std::string open_tag(SegmentKind kind) {
  return "<" + std::string(tag_name(kind)) + ">";
}

inline std::string close_tag(SegmentKind kind) {
  return "</" + std::string(tag_name(kind)) + ">";
}

struct Segment {
  SegmentKind kind;
  std::string body;

  bool operator==(const Segment&) const = default;
};

/// A templated response. `filler` is populated by parse() only: filler[i] is
/// the text preceding segments[i] and filler.back() is the trailing text, so
/// filler.size() == segments.size() + 1.
struct Trajectory {
  std::vector<Segment> segments;
  std::vector<std::string> filler;
  std::optional<std::string> raw;
};

struct StructureFlags {
  bool f = false;  // valid overall structure
  bool s = false;  // any search invoked
  bool t = false;  // exactly one think/answer pair and nothing else
  bool u = false;  // every search followed by result, think, answer

  bool operator==(const StructureFlags&) const = default;
};

struct ExtractedAnswers {
  std::string first;
  std::optional<std::string> last;
};

namespace detail {

struct TagToken {
  SegmentKind kind;
  bool closing;
  std::size_t length;
};

inline std::optional<TagToken> match_tag(std::string_view text,
                                         std::size_t pos) {
  if (pos >= text.size() || text[pos] != '<') return std::nullopt;
  const bool closing = pos + 1 < text.size() && text[pos + 1] == '/';
  const std::size_t name_start = pos + (closing ? 2 : 1);
  for (SegmentKind kind : kAllSegmentKinds) {
    const std::string_view name = tag_name(kind);
    if (text.substr(name_start, name.size()) == name &&
        name_start + name.size() < text.size() &&
        text[name_start + name.size()] == '>') {
      return TagToken{kind, closing, name_start + name.size() + 1 - pos};
    }
  }
  return std::nullopt;
}

/// Position of the next tag token at or after `pos`, or npos.
inline std::size_t find_tag(std::string_view text, std::size_t pos,
                            TagToken* token) {
  while ((pos = text.find('<', pos)) != std::string_view::npos) {
    if (auto t = match_tag(text, pos)) {
      *token = *t;
      return pos;
    }
    ++pos;
  }
  return std::string_view::npos;
}

}  // namespace detail

/// True when `text` contains any opening or closing tag of the four kinds.
inline bool contains_tag(std::string_view text) {
  detail::TagToken token{};
  return detail::find_tag(text, 0, &token) != std::string_view::npos;
}

/// Parses template text into segments. Text outside tag pairs is kept as
/// filler. Throws Error with UnclosedTag, MismatchedTag, NestedTag or
/// EmptyTrajectory; the offset points at the offending tag.
inline Trajectory parse(std::string_view text) {
  Trajectory traj;
  traj.raw = std::string(text);

  std::size_t filler_start = 0;
  std::size_t pos = 0;
  detail::TagToken open{};
  while (true) {
    const std::size_t open_pos = detail::find_tag(text, pos, &open);
    if (open_pos == std::string_view::npos) break;
    if (open.closing) {
      throw Error(ErrorCode::MismatchedTag,
                  "closing tag " + close_tag(open.kind) + " without an open tag",
                  open_pos);
    }
    traj.filler.emplace_back(text.substr(filler_start, open_pos - filler_start));

    const std::size_t body_start = open_pos + open.length;
    detail::TagToken inner{};
    const std::size_t inner_pos = detail::find_tag(text, body_start, &inner);
    if (inner_pos == std::string_view::npos) {
      throw Error(ErrorCode::UnclosedTag, open_tag(open.kind) + " is never closed",
                  open_pos);
    }
    if (!inner.closing) {
      throw Error(ErrorCode::NestedTag,
                  open_tag(inner.kind) + " inside " + open_tag(open.kind),
                  inner_pos);
    }
    if (inner.kind != open.kind) {
      throw Error(ErrorCode::MismatchedTag,
                  close_tag(inner.kind) + " closes " + open_tag(open.kind),
                  inner_pos);
    }
    traj.segments.push_back(
        {open.kind, std::string(text.substr(body_start, inner_pos - body_start))});
    pos = inner_pos + inner.length;
    filler_start = pos;
  }
  traj.filler.emplace_back(text.substr(filler_start));

  if (traj.segments.empty()) {
    throw Error(ErrorCode::EmptyTrajectory, "no tagged segment found", 0);
  }
  return traj;
}

/// Canonical form: "<kind>body</kind>" per segment, joined by single newlines.
inline std::string render(const Trajectory& traj) {
  std::string out;
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    const Segment& seg = traj.segments[i];
    if (contains_tag(seg.body)) {
      throw Error(ErrorCode::InvalidSegment,
                  "segment " + std::to_string(i) + " body contains a tag token");
    }
    if (i > 0) out += '\n';
    out += open_tag(seg.kind);
    out += seg.body;
    out += close_tag(seg.kind);
  }
  return out;
}

/// Reassembles the original text from segments and filler. Falls back to the
/// canonical render when the trajectory was not produced by parse().
inline std::string render_source(const Trajectory& traj) {
  if (traj.filler.size() != traj.segments.size() + 1) return render(traj);
  std::string out;
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    out += traj.filler[i];
    out += open_tag(traj.segments[i].kind);
    out += traj.segments[i].body;
    out += close_tag(traj.segments[i].kind);
  }
  out += traj.filler.back();
  return out;
}

/// Flags depend only on the sequence of segment kinds.
inline StructureFlags validate_structure(const Trajectory& traj) {
  using K = SegmentKind;
  std::vector<K> kinds;
  kinds.reserve(traj.segments.size());
  for (const Segment& seg : traj.segments) kinds.push_back(seg.kind);
  const std::size_t n = kinds.size();

  StructureFlags flags;

  // (Think Answer) (Search Result Think Answer)*
  static constexpr std::array<K, 4> kSearchBlock = {K::Search, K::Result,
                                                    K::Think, K::Answer};
  bool valid = n >= 2 && (n - 2) % 4 == 0 && kinds[0] == K::Think &&
               kinds[1] == K::Answer;
  for (std::size_t i = 2; valid && i < n; ++i) {
    valid = kinds[i] == kSearchBlock[(i - 2) % 4];
  }
  flags.f = valid;

  const auto count = [&](K k) { return std::count(kinds.begin(), kinds.end(), k); };
  flags.s = count(K::Search) > 0;
  flags.t = count(K::Think) == 1 && count(K::Answer) == 1 &&
            count(K::Search) == 0 && count(K::Result) == 0;

  if (flags.s && kinds.back() == K::Answer) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < n; ++i) {
      if (kinds[i] != K::Search) continue;
      ok = i + 3 < n && kinds[i + 1] == K::Result && kinds[i + 2] == K::Think &&
           kinds[i + 3] == K::Answer;
    }
    flags.u = ok;
  }
  return flags;
}

/// Content of the first `\boxed{...}` marker, matched by balanced braces.
/// Returns nullopt when there is no marker or its braces never balance.
inline std::optional<std::string> extract_boxed(std::string_view body) {
  static constexpr std::string_view kMarker = "\\boxed{";
  const std::size_t start = body.find(kMarker);
  if (start == std::string_view::npos) return std::nullopt;
  const std::size_t content = start + kMarker.size();
  int depth = 1;
  for (std::size_t i = content; i < body.size(); ++i) {
    if (body[i] == '{') {
      ++depth;
    } else if (body[i] == '}' && --depth == 0) {
      return std::string(body.substr(content, i - content));
    }
  }
  return std::nullopt;
}

inline std::string answer_text(std::string_view body) {
  if (auto boxed = extract_boxed(body)) return *std::move(boxed);
  return std::string(body);
}

/// First answer, plus the last answer when more than one exists.
inline ExtractedAnswers extract_answers(const Trajectory& traj) {
  const Segment* first = nullptr;
  const Segment* last = nullptr;
  std::size_t count = 0;
  for (const Segment& seg : traj.segments) {
    if (seg.kind != SegmentKind::Answer) continue;
    if (!first) first = &seg;
    last = &seg;
    ++count;
  }
  if (!first) throw Error(ErrorCode::NoAnswer, "trajectory has no answer segment");

  ExtractedAnswers out{answer_text(first->body), std::nullopt};
  if (count > 1) out.last = answer_text(last->body);
  return out;
}

/// The answer a reader would take as final: the last one if present.
inline std::string final_answer(const ExtractedAnswers& answers) {
  return answers.last ? *answers.last : answers.first;
}

}  // namespace sem
