// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sem/error.hpp"

namespace sem {

// SQuAD-style answer normalization: lowercase, drop ASCII punctuation, drop
// the articles a/an/the, split on whitespace.
struct NormalizedAnswer {
  std::vector<std::string> tokens;

  std::string joined() const {
    std::string out;
    for (const auto& tok : tokens) {
      if (!out.empty()) out += ' ';
      out += tok;
    }
    return out;
  }

  bool operator==(const NormalizedAnswer&) const = default;
};

namespace detail {

inline bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
inline bool is_ascii_space(unsigned char c) { return c < 128 && std::isspace(c); }

inline bool is_article(std::string_view tok) {
  return tok == "a" || tok == "an" || tok == "the";
}

}  // namespace detail

inline NormalizedAnswer normalize(std::string_view text) {
  NormalizedAnswer out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && !detail::is_article(current)) {
      out.tokens.push_back(std::move(current));
    }
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_ascii_space(c)) {
      flush();
    } else if (!detail::is_ascii_punct(c)) {
      current += c < 128 ? static_cast<char>(std::tolower(c)) : ch;
    }
  }
  flush();
  return out;
}

inline double token_f1(std::string_view pred, std::string_view gold) {
  const auto p = normalize(pred).tokens;
  const auto g = normalize(gold).tokens;
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;

  std::unordered_map<std::string_view, long> gold_counts;
  for (const auto& tok : g) ++gold_counts[tok];
  long overlap = 0;
  for (const auto& tok : p) {
    auto it = gold_counts.find(tok);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

inline bool exact_match(std::string_view pred, std::span<const std::string> golds) {
  if (golds.empty()) throw Error(ErrorCode::EmptyGoldSet, "exact_match needs a gold answer");
  const auto p = normalize(pred);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize(g) == p; });
}

inline double best_f1(std::string_view pred, std::span<const std::string> golds) {
  if (golds.empty()) throw Error(ErrorCode::EmptyGoldSet, "best_f1 needs a gold answer");
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, token_f1(pred, g));
  return best;
}

}  // namespace sem
