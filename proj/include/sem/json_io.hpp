// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sem/error.hpp"
#include "sem/eval.hpp"
#include "sem/retrieval.hpp"
#include "sem/reward.hpp"
#include "sem/simenv.hpp"

namespace sem {

using json = nlohmann::json;

// File names inside a world directory.
inline constexpr const char* kDatasetFile = "dataset.jsonl";
inline constexpr const char* kCorpusFile = "corpus.jsonl";
inline constexpr const char* kKnowledgeFile = "knowledge.jsonl";
inline constexpr const char* kWorldMetaFile = "world.json";

inline json to_json(const StructureFlags& f) {
  return {{"f", int(f.f)}, {"s", int(f.s)}, {"t", int(f.t)}, {"u", int(f.u)}};
}

inline json to_json(const RewardBreakdown& r) {
  json out;
  out["reward"] = r.reward;
  out["flags"] = to_json(r.flags);
  out["f1_a1"] = r.f1_a1 ? json(*r.f1_a1) : json(nullptr);
  out["f1_a2"] = r.f1_a2 ? json(*r.f1_a2) : json(nullptr);
  out["branch"] = std::string(to_string(r.branch));
  return out;
}

inline json to_json(const Metrics& m) {
  return {{"em", m.em},         {"mean_f1", m.mean_f1},       {"sr", m.sr},
          {"sr_known", m.sr_known}, {"sr_unknown", m.sr_unknown}, {"n", m.n}};
}

namespace detail {

/// Calls `fn(object, lineno)` for each non-blank line. Lines that are not JSON
/// objects raise MalformedInput naming the line.
template <class Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw Error(ErrorCode::MalformedInput, "line " + std::to_string(lineno) + ": not a JSON object");
    }
    try {
      fn(obj, lineno);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedInput, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::string required_string(const json& obj, const char* key, std::size_t lineno) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw Error(ErrorCode::MalformedInput,
                "line " + std::to_string(lineno) + ": missing string field '" + key + "'");
  }
  return obj[key].get<std::string>();
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace detail

// Corpus: {"id", "title", "text"} per line.

inline std::vector<Document> read_corpus(std::istream& in) {
  std::vector<Document> docs;
  detail::for_each_jsonl(in, [&](const json& obj, std::size_t lineno) {
    Document d{detail::required_string(obj, "id", lineno),
               detail::required_string(obj, "title", lineno),
               detail::required_string(obj, "text", lineno)};
    if (d.id.empty()) {
      throw Error(ErrorCode::MalformedInput, "line " + std::to_string(lineno) + ": empty id");
    }
    docs.push_back(std::move(d));
  });
  return docs;
}

inline void write_corpus(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) out << json{{"id", d.id}, {"title", d.title}, {"text", d.body}}.dump() << '\n';
}

// Dataset: {"id", "prompt", "golds", "known", "gold_doc_id"} per line.

inline std::vector<Question> read_dataset(std::istream& in) {
  std::vector<Question> questions;
  detail::for_each_jsonl(in, [&](const json& obj, std::size_t lineno) {
    Question q;
    q.id = detail::required_string(obj, "id", lineno);
    q.prompt = detail::required_string(obj, "prompt", lineno);
    q.golds = obj.at("golds").get<std::vector<std::string>>();
    if (q.golds.empty()) {
      throw Error(ErrorCode::MalformedInput, "line " + std::to_string(lineno) + ": empty golds");
    }
    const json& known = obj.at("known");
    q.known = known.is_boolean() ? known.get<bool>() : known.get<int>() != 0;
    if (obj.contains("gold_doc_id") && !obj["gold_doc_id"].is_null()) {
      q.gold_doc_id = obj["gold_doc_id"].get<std::string>();
    }
    questions.push_back(std::move(q));
  });
  return questions;
}

inline void write_dataset(std::ostream& out, std::span<const Question> questions) {
  for (const auto& q : questions) {
    json obj{{"id", q.id}, {"prompt", q.prompt}, {"golds", q.golds}, {"known", q.known ? 1 : 0}};
    obj["gold_doc_id"] = q.gold_doc_id ? json(*q.gold_doc_id) : json(nullptr);
    out << obj.dump() << '\n';
  }
}

// Knowledge: {"id", "answer"} per line.

inline InternalKnowledge read_knowledge(std::istream& in) {
  InternalKnowledge k;
  detail::for_each_jsonl(in, [&](const json& obj, std::size_t lineno) {
    k.answers[detail::required_string(obj, "id", lineno)] =
        detail::required_string(obj, "answer", lineno);
  });
  return k;
}

inline void write_knowledge(std::ostream& out, std::span<const Question> questions,
                            const InternalKnowledge& k) {
  for (const auto& q : questions) {
    out << json{{"id", q.id}, {"answer", k.answer_for(q.id)}}.dump() << '\n';
  }
}

inline void save_world(const std::filesystem::path& dir, const World& world) {
  std::filesystem::create_directories(dir);
  auto dataset = detail::open_out(dir / kDatasetFile);
  write_dataset(dataset, world.questions);
  auto corpus = detail::open_out(dir / kCorpusFile);
  write_corpus(corpus, world.corpus());
  auto knowledge = detail::open_out(dir / kKnowledgeFile);
  write_knowledge(knowledge, world.questions, world.knowledge);
  auto meta = detail::open_out(dir / kWorldMetaFile);
  meta << json{{"seed", world.seed},
               {"label_noise", world.env.label_noise},
               {"fault_rate", world.env.fault_rate},
               {"top_k", world.env.top_k}}
              .dump(2)
       << '\n';
}

inline World load_world(const std::filesystem::path& dir) {
  std::uint64_t seed = 0;
  EnvConfig env;
  if (std::filesystem::exists(dir / kWorldMetaFile)) {
    auto in = detail::open_in(dir / kWorldMetaFile);
    json meta = json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) {
      throw Error(ErrorCode::MalformedInput, (dir / kWorldMetaFile).string() + " is not a JSON object");
    }
    seed = meta.value("seed", std::uint64_t{0});
    env.label_noise = meta.value("label_noise", env.label_noise);
    env.fault_rate = meta.value("fault_rate", env.fault_rate);
    env.top_k = meta.value("top_k", env.top_k);
  }
  auto dataset_in = detail::open_in(dir / kDatasetFile);
  auto corpus_in = detail::open_in(dir / kCorpusFile);
  auto knowledge_in = detail::open_in(dir / kKnowledgeFile);
  return assemble_world(seed, env, read_dataset(dataset_in), read_corpus(corpus_in),
                        read_knowledge(knowledge_in));
}

inline json to_json(const PolicyParams& p) {
  return {{"feature_dim", p.feature_dim()}, {"weights", p.weights}};
}

inline PolicyParams params_from_json(const json& obj) {
  if (!obj.is_object() || !obj.contains("weights") || !obj["weights"].is_array()) {
    throw Error(ErrorCode::MalformedInput, "params need a 'weights' array");
  }
  PolicyParams p(obj["weights"].get<std::vector<double>>());
  if (obj.contains("feature_dim") && obj["feature_dim"].get<std::size_t>() != p.feature_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "feature_dim disagrees with weights");
  }
  if (!p.finite()) throw Error(ErrorCode::MalformedInput, "weights must be finite");
  return p;
}

inline void save_params(const std::filesystem::path& path, const PolicyParams& p) {
  auto out = detail::open_out(path);
  out << to_json(p).dump(2) << '\n';
}

inline PolicyParams load_params(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw Error(ErrorCode::MalformedInput, path.string() + " is not JSON");
  return params_from_json(obj);
}

}  // namespace sem
