// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "sem/error.hpp"
#include "sem/scoring.hpp"
#include "sem/trajectory.hpp"

namespace sem {

struct RewardConfig {
  double tau = 0.7;  // F1 threshold for counting the first answer as correct

  void validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "tau must lie in (0, 1]");
    }
  }
};

enum class RewardBranch { ZeroInvalid, DirectAnswer, SearchAnswer, ZeroNoBranch };

constexpr std::string_view to_string(RewardBranch branch) {
  switch (branch) {
    case RewardBranch::ZeroInvalid: return "ZeroInvalid";
    case RewardBranch::DirectAnswer: return "DirectAnswer";
    case RewardBranch::SearchAnswer: return "SearchAnswer";
    case RewardBranch::ZeroNoBranch: return "ZeroNoBranch";
  }
  return "";
}

struct RewardBreakdown {
  double reward = 0.0;
  StructureFlags flags;
  std::optional<double> f1_a1;
  std::optional<double> f1_a2;
  RewardBranch branch = RewardBranch::ZeroInvalid;
};

/// Gated reward:
///   R = f * [ 1{F1(a1) >= tau, s = 0, t = 1} * F1(a1)
///           + 1{F1(a1) <  tau, u = 1}        * F1(a2) ]
/// A correct first answer followed by a search earns nothing; so does any
/// malformed trajectory.
inline RewardBreakdown compute_reward(const Trajectory& traj,
                                      std::span<const std::string> golds,
                                      const RewardConfig& cfg = {}) {
  if (golds.empty()) throw Error(ErrorCode::EmptyGoldSet, "compute_reward needs a gold answer");
  cfg.validate();

  RewardBreakdown out;
  out.flags = validate_structure(traj);
  if (!out.flags.f) {
    out.branch = RewardBranch::ZeroInvalid;
    return out;
  }

  ExtractedAnswers answers;
  try {
    answers = extract_answers(traj);
  } catch (const Error&) {
    throw Error(ErrorCode::Internal, "valid structure without an answer segment");
  }

  const double f1_a1 = best_f1(answers.first, golds);
  out.f1_a1 = f1_a1;
  if (answers.last) out.f1_a2 = best_f1(*answers.last, golds);

  const bool direct = f1_a1 >= cfg.tau && !out.flags.s && out.flags.t;
  const bool searched = f1_a1 < cfg.tau && out.flags.u && out.f1_a2.has_value();
  if (direct) {
    out.reward = f1_a1;
    out.branch = RewardBranch::DirectAnswer;
  } else if (searched) {
    out.reward = *out.f1_a2;
    out.branch = RewardBranch::SearchAnswer;
  } else {
    out.branch = RewardBranch::ZeroNoBranch;
  }
  return out;
}

}  // namespace sem
