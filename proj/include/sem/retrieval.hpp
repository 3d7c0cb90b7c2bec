// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sem/error.hpp"
#include "sem/scoring.hpp"

namespace sem {

struct Document {
  std::string id;
  std::string title;
  std::string body;

  bool operator==(const Document&) const = default;
};

struct Posting {
  std::size_t doc;  // position in Index::documents()
  std::uint32_t tf;
};

struct SearchHit {
  std::string doc_id;
  double score;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Same tokenizer as answer scoring, applied to title and body.
inline std::vector<std::string> document_tokens(const Document& doc) {
  return normalize(doc.title + " " + doc.body).tokens;
}

/// Query terms in first-occurrence order, duplicates removed.
inline std::vector<std::string> query_terms(std::string_view query) {
  std::vector<std::string> terms;
  std::unordered_set<std::string> seen;
  for (auto& tok : normalize(query).tokens) {
    if (seen.insert(tok).second) terms.push_back(std::move(tok));
  }
  return terms;
}

inline double bm25_idf(std::size_t n_docs, std::size_t df) {
  const double n = static_cast<double>(n_docs);
  const double d = static_cast<double>(df);
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

inline double bm25_term(double idf, double tf, double doc_len, double avgdl,
                        const Bm25Params& p) {
  const double norm = avgdl > 0.0 ? doc_len / avgdl : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

/// Immutable in-memory inverted index with BM25 ranking.
class Index {
 public:
  Index() = default;

  static Index build(std::vector<Document> docs, Bm25Params params = {}) {
    Index index;
    index.params_ = params;
    index.docs_ = std::move(docs);
    index.lengths_.reserve(index.docs_.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < index.docs_.size(); ++i) {
      const Document& doc = index.docs_[i];
      if (!index.by_id_.emplace(doc.id, i).second) {
        throw Error(ErrorCode::DuplicateId, "duplicate document id '" + doc.id + "'");
      }
      const auto tokens = document_tokens(doc);
      std::unordered_map<std::string, std::uint32_t> tf;
      std::vector<std::string> order;
      for (const auto& tok : tokens) {
        if (tf[tok]++ == 0) order.push_back(tok);
      }
      for (const auto& term : order) index.postings_[term].push_back({i, tf[term]});
      index.lengths_.push_back(tokens.size());
      total += tokens.size();
    }
    index.avgdl_ = index.docs_.empty()
                       ? 0.0
                       : static_cast<double>(total) / static_cast<double>(index.docs_.size());
    return index;
  }

  std::size_t size() const { return docs_.size(); }
  double avgdl() const { return avgdl_; }
  std::size_t vocabulary_size() const { return postings_.size(); }
  const Bm25Params& params() const { return params_; }
  std::span<const Document> documents() const { return docs_; }
  std::size_t doc_length(std::size_t doc) const { return lengths_.at(doc); }

  const Document* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
  }

  std::span<const Posting> postings(const std::string& term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
  }

  /// Top-k documents by BM25, ties broken by ascending document id. Only
  /// documents sharing at least one term with the query are returned.
  std::vector<SearchHit> search(std::string_view query, std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "search needs k >= 1");
    if (docs_.empty()) return {};

    std::vector<double> scores(docs_.size(), 0.0);
    std::vector<char> seen(docs_.size(), 0);
    std::vector<std::size_t> touched;
    for (const auto& term : query_terms(query)) {
      const auto list = postings(term);
      if (list.empty()) continue;
      const double idf = bm25_idf(docs_.size(), list.size());
      for (const Posting& p : list) {
        if (!seen[p.doc]) {
          seen[p.doc] = 1;
          touched.push_back(p.doc);
        }
        scores[p.doc] += bm25_term(idf, p.tf, static_cast<double>(lengths_[p.doc]),
                                   avgdl_, params_);
      }
    }

    const auto better = [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return docs_[a].id < docs_[b].id;
    };
    const std::size_t keep = std::min(k, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(keep),
                      touched.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      hits.push_back({docs_[touched[i]].id, scores[touched[i]]});
    }
    return hits;
  }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::size_t> lengths_;
  double avgdl_ = 0.0;
  Bm25Params params_;
};

inline Index build_index(std::vector<Document> docs) { return Index::build(std::move(docs)); }

inline std::vector<SearchHit> search(const Index& index, std::string_view query,
                                     std::size_t k) {
  return index.search(query, k);
}

/// "title: body" per hit, newline separated, in rank order.
inline std::string format_result(std::span<const SearchHit> hits, const Index& index) {
  std::string out;
  for (const SearchHit& hit : hits) {
    const Document* doc = index.find(hit.doc_id);
    if (!doc) continue;
    if (!out.empty()) out += '\n';
    out += doc->title;
    out += ": ";
    out += doc->body;
  }
  return out;
}

}  // namespace sem
