// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sem/error.hpp"
#include "sem/scoring.hpp"
#include "sem/simenv.hpp"
#include "sem/trajectory.hpp"

namespace sem {

struct Metrics {
  double em = 0.0;
  double mean_f1 = 0.0;
  double sr = 0.0;
  double sr_known = 0.0;
  double sr_unknown = 0.0;
  std::size_t n = 0;
};

/// Per-question outcome of an evaluation pass.
struct EvalItem {
  std::string question_id;
  bool known;
  Action action;
  std::size_t segments;
  bool exact;
  double f1;
};

struct EvalReport {
  Metrics metrics;
  std::vector<EvalItem> items;
};

/// Greedy evaluation: argmax action per question, final answer is the last
/// answer segment. Consumes no randomness.
template <SearchPolicy P>
EvalReport evaluate_detailed(const P& policy, std::span<const Question> questions,
                             const World& world) {
  if (questions.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  EvalReport report;
  std::size_t exact = 0, searched = 0;
  std::size_t n_known = 0, known_searched = 0, n_unknown = 0, unknown_searched = 0;
  double f1_sum = 0.0;

  for (const Question& q : questions) {
    const RolloutResult r = greedy_rollout(policy, q, world);
    const std::string answer = final_answer(extract_answers(r.traj));
    const bool em = exact_match(answer, q.golds);
    const double f1 = best_f1(answer, q.golds);
    const bool s = validate_structure(r.traj).s;

    exact += em;
    f1_sum += f1;
    searched += s;
    if (q.known) {
      ++n_known;
      known_searched += s;
    } else {
      ++n_unknown;
      unknown_searched += s;
    }
    report.items.push_back({q.id, q.known, r.action, r.traj.segments.size(), em, f1});
  }

  const auto frac = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics& m = report.metrics;
  m.n = questions.size();
  m.em = frac(exact, m.n);
  m.mean_f1 = f1_sum / static_cast<double>(m.n);
  m.sr = frac(searched, m.n);
  m.sr_known = frac(known_searched, n_known);
  m.sr_unknown = frac(unknown_searched, n_unknown);
  return report;
}

template <SearchPolicy P>
Metrics evaluate(const P& policy, std::span<const Question> questions, const World& world) {
  return evaluate_detailed(policy, questions, world).metrics;
}

template <SearchPolicy P>
Metrics evaluate(const P& policy, const World& world) {
  return evaluate(policy, std::span<const Question>(world.questions), world);
}

// ---------------------------------------------------------------------------
// Judges
// ---------------------------------------------------------------------------

struct JudgeVerdict {
  bool correct = false;
  std::optional<std::string> rationale;
};

/// Correctness oracle for free-form answers. Only the token-F1 proxy ships;
/// model-based judges plug in through JudgeRegistry.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeVerdict verdict(std::string_view pred, std::span<const std::string> golds) const = 0;
};

class F1Judge final : public Judge {
 public:
  explicit F1Judge(double threshold = 0.7) : threshold_(threshold) {}

  JudgeVerdict verdict(std::string_view pred, std::span<const std::string> golds) const override {
    const double f1 = best_f1(pred, golds);
    return {f1 >= threshold_, "best token F1 " + std::to_string(f1)};
  }

 private:
  double threshold_;
};

class JudgeRegistry {
 public:
  using Factory = std::function<std::unique_ptr<Judge>()>;

  JudgeRegistry() {
    add("f1", [] { return std::make_unique<F1Judge>(); });
  }

  void add(std::string kind, Factory factory) { factories_[std::move(kind)] = std::move(factory); }

  std::unique_ptr<Judge> make(std::string_view kind) const {
    auto it = factories_.find(std::string(kind));
    if (it == factories_.end()) {
      throw Error(ErrorCode::UnknownJudgeKind, "no judge registered as '" + std::string(kind) + "'");
    }
    return it->second();
  }

 private:
  std::map<std::string, Factory> factories_;
};

inline JudgeVerdict judge(std::string_view pred, std::span<const std::string> golds,
                          std::string_view kind, const JudgeRegistry& registry = {}) {
  if (golds.empty()) throw Error(ErrorCode::EmptyGoldSet, "judge needs a gold answer");
  return registry.make(kind)->verdict(pred, golds);
}

}  // namespace sem
