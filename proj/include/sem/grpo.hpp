// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sem/error.hpp"
#include "sem/reward.hpp"
#include "sem/scoring.hpp"
#include "sem/simenv.hpp"

namespace sem {

/// A_i = (r_i - mean) / (std + adv_epsilon), population std. Groups whose
/// rewards are all equal get zero advantages.
inline std::vector<double> group_advantages(std::span<const double> rewards,
                                            double adv_epsilon) {
  if (rewards.size() < 2) {
    throw Error(ErrorCode::GroupTooSmall, "a group needs at least two rewards");
  }
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); })) {
    return out;
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double denom = std::sqrt(var / n) + adv_epsilon;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

struct GroupSample {
  double old_logprob;
  std::vector<double> features;
  Action action;
  double reward;
};

struct RolloutGroup {
  std::string question_id;
  std::vector<GroupSample> samples;

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(samples.size());
    for (const auto& s : samples) r.push_back(s.reward);
    return r;
  }
};

/// KL(Bernoulli(logistic(z)) || Bernoulli(logistic(z_ref))).
inline double bernoulli_kl(double z, double z_ref) {
  const double p = logistic(z);
  return p * (log_logistic(z) - log_logistic(z_ref)) +
         (1.0 - p) * (log_logistic(-z) - log_logistic(-z_ref));
}

namespace detail {

inline void check_group(const PolicyParams& params, const RolloutGroup& group,
                        std::span<const double> advantages, const PolicyParams& ref) {
  if (advantages.size() != group.samples.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one advantage per sample required");
  }
  if (ref.feature_dim() != params.feature_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "reference policy dimension differs");
  }
  if (group.samples.empty()) throw Error(ErrorCode::GroupTooSmall, "empty group");
}

}  // namespace detail

/// Clipped surrogate, averaged over the group, minus kl_coef times the mean
/// per-sample KL to the reference policy.
inline double surrogate_objective(const PolicyParams& params, const RolloutGroup& group,
                                  std::span<const double> advantages, double clip_eps,
                                  double kl_coef, const PolicyParams& ref) {
  detail::check_group(params, group, advantages, ref);
  double total = 0.0;
  for (std::size_t i = 0; i < group.samples.size(); ++i) {
    const GroupSample& s = group.samples[i];
    const double z = params.search_logit(s.features);
    const double ratio = std::exp(action_logprob(z, s.action) - s.old_logprob);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    total += std::min(ratio * advantages[i], clipped * advantages[i]);
    if (kl_coef != 0.0) total -= kl_coef * bernoulli_kl(z, ref.search_logit(s.features));
  }
  return total / static_cast<double>(group.samples.size());
}

/// Ascent direction of surrogate_objective in closed form. For the logistic
/// policy grad log pi(a|x) = (a - p) x with a in {0, 1}, and the Bernoulli KL
/// has gradient p (1 - p) (z - z_ref) x.
inline std::vector<double> surrogate_gradient(const PolicyParams& params,
                                              const RolloutGroup& group,
                                              std::span<const double> advantages,
                                              double clip_eps, double kl_coef,
                                              const PolicyParams& ref) {
  detail::check_group(params, group, advantages, ref);
  std::vector<double> grad(params.feature_dim(), 0.0);
  for (std::size_t i = 0; i < group.samples.size(); ++i) {
    const GroupSample& s = group.samples[i];
    const double z = params.search_logit(s.features);
    const double p = logistic(z);
    const double a = s.action == Action::SearchThenAnswer ? 1.0 : 0.0;
    const double ratio = std::exp(action_logprob(z, s.action) - s.old_logprob);
    const double adv = advantages[i];

    // When the clipped branch wins the min it is constant in the weights.
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const bool unclipped_active = ratio * adv <= clipped * adv;
    double coef = unclipped_active ? adv * ratio * (a - p) : 0.0;

    if (kl_coef != 0.0) {
      coef -= kl_coef * p * (1.0 - p) * (z - ref.search_logit(s.features));
    }
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += coef * s.features[j];
  }
  for (double& g : grad) g /= static_cast<double>(group.samples.size());
  return grad;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t group_size = 8;
  std::size_t questions_per_step = 8;
  std::size_t steps = 200;
  double learning_rate = 2.0;
  double clip_eps = 0.2;
  double kl_coef = 0.0;
  double tau = 0.7;
  std::uint64_t seed = 0;
  double adv_epsilon = 1e-6;

  void validate() const {
    const auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (group_size < 2) fail("group_size must be >= 2");
    if (questions_per_step < 1) fail("questions_per_step must be >= 1");
    if (steps < 1) fail("steps must be >= 1");
    if (!(std::isfinite(learning_rate) && learning_rate > 0.0)) fail("learning_rate must be > 0");
    if (!(std::isfinite(clip_eps) && clip_eps > 0.0)) fail("clip_eps must be > 0");
    if (!(std::isfinite(kl_coef) && kl_coef >= 0.0)) fail("kl_coef must be >= 0");
    if (!(std::isfinite(adv_epsilon) && adv_epsilon > 0.0)) fail("adv_epsilon must be > 0");
    RewardConfig{tau}.validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidConfig, "bad value for " + std::string(key));
  }
  return value;
}

}  // namespace detail

/// Flat `key = value` text; '#' starts a comment. Unknown keys are rejected.
inline TrainConfig parse_train_config(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    }
    const auto key = detail::trim(view.substr(0, eq));
    const auto value = detail::trim(view.substr(eq + 1));
    using detail::parse_number;
    if (key == "group_size") cfg.group_size = parse_number<std::size_t>(key, value);
    else if (key == "questions_per_step") cfg.questions_per_step = parse_number<std::size_t>(key, value);
    else if (key == "steps") cfg.steps = parse_number<std::size_t>(key, value);
    else if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
    else if (key == "clip_eps") cfg.clip_eps = parse_number<double>(key, value);
    else if (key == "kl_coef") cfg.kl_coef = parse_number<double>(key, value);
    else if (key == "tau") cfg.tau = parse_number<double>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "adv_epsilon") cfg.adv_epsilon = parse_number<double>(key, value);
    else throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(key) + "'");
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig parse_train_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_train_config(in);
}

struct StepRecord {
  std::size_t step;
  double mean_reward;
  double mean_f1;
  double sr_known;
  double sr_unknown;
  double weight_norm;

  bool operator==(const StepRecord&) const = default;
};

struct TrainingHistory {
  std::vector<StepRecord> records;

  /// Mean of a column over the last `window` records.
  double tail_mean(double StepRecord::*column, std::size_t window) const {
    if (records.empty()) return 0.0;
    const std::size_t n = std::min(window, records.size());
    double sum = 0.0;
    for (std::size_t i = records.size() - n; i < records.size(); ++i) sum += records[i].*column;
    return sum / static_cast<double>(n);
  }
};

inline constexpr std::string_view kCurveHeader =
    "step,mean_reward,mean_f1,sr_known,sr_unknown,weight_norm";

inline void write_curves_csv(std::ostream& out, const TrainingHistory& history) {
  out << kCurveHeader << '\n';
  const auto old_precision = out.precision(10);
  for (const auto& r : history.records) {
    out << r.step << ',' << r.mean_reward << ',' << r.mean_f1 << ',' << r.sr_known << ','
        << r.sr_unknown << ',' << r.weight_norm << '\n';
  }
  out.precision(old_precision);
}

struct TrainResult {
  PolicyParams params;
  TrainingHistory history;
};

/// Final-answer F1, zero when the trajectory carries no answer.
inline double trajectory_f1(const Trajectory& traj, std::span<const std::string> golds) {
  try {
    return best_f1(final_answer(extract_answers(traj)), golds);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoAnswer) throw;
    return 0.0;
  }
}

namespace detail {

/// Cycles through a pool, reshuffling at every pass.
class QuestionCycle {
 public:
  QuestionCycle(std::vector<std::size_t> pool, std::uint64_t seed)
      : pool_(std::move(pool)), rng_(seed) {
    rng_.shuffle(pool_);
  }

  bool empty() const { return pool_.empty(); }

  std::size_t next() {
    if (cursor_ == pool_.size()) {
      rng_.shuffle(pool_);
      cursor_ = 0;
    }
    return pool_[cursor_++];
  }

 private:
  std::vector<std::size_t> pool_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

}  // namespace detail

/// Called after every step with the record just appended.
using StepCallback = std::function<void(const StepRecord&, const PolicyParams&)>;

/// On-policy GRPO: each step samples questions alternating known/unknown,
/// rolls out a group per question, normalizes rewards within each group and
/// takes one ascent step on the averaged surrogate gradient. Deterministic
/// for a fixed (world, cfg).
inline TrainResult train(const World& world, const TrainConfig& cfg,
                         const StepCallback& on_step = {}) {
  cfg.validate();
  if (world.questions.empty()) throw Error(ErrorCode::EmptyDataset, "world has no questions");

  std::vector<std::size_t> known_pool, unknown_pool;
  for (std::size_t i = 0; i < world.questions.size(); ++i) {
    (world.questions[i].known ? known_pool : unknown_pool).push_back(i);
  }
  detail::QuestionCycle known(std::move(known_pool), derive_seed(cfg.seed, "known-pool", 0));
  detail::QuestionCycle unknown(std::move(unknown_pool), derive_seed(cfg.seed, "unknown-pool", 0));

  const std::size_t dim = world.questions.front().features.size();
  TrainResult result{PolicyParams(dim), {}};
  const PolicyParams reference = result.params;
  const RewardConfig reward_cfg{cfg.tau};

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<double> grad(dim, 0.0);
    double reward_sum = 0.0, f1_sum = 0.0;
    std::size_t n_samples = 0, known_rollouts = 0, known_searches = 0;
    std::size_t unknown_rollouts = 0, unknown_searches = 0;

    for (std::size_t j = 0; j < cfg.questions_per_step; ++j) {
      const bool want_known = (j % 2 == 0 && !known.empty()) || unknown.empty();
      const Question& q = world.questions[want_known ? known.next() : unknown.next()];

      RolloutGroup group{q.id, {}};
      group.samples.reserve(cfg.group_size);
      for (std::size_t g = 0; g < cfg.group_size; ++g) {
        Rng rng(derive_seed(cfg.seed, q.id, step * cfg.group_size + g));
        const RolloutResult r = rollout(result.params, q, world, rng);
        const double reward = compute_reward(r.traj, q.golds, reward_cfg).reward;
        group.samples.push_back({r.logprob, q.features, r.action, reward});

        reward_sum += reward;
        f1_sum += trajectory_f1(r.traj, q.golds);
        ++n_samples;
        const bool searched = r.action == Action::SearchThenAnswer;
        if (q.known) {
          ++known_rollouts;
          known_searches += searched;
        } else {
          ++unknown_rollouts;
          unknown_searches += searched;
        }
      }

      const auto advantages = group_advantages(group.rewards(), cfg.adv_epsilon);
      const auto g = surrogate_gradient(result.params, group, advantages, cfg.clip_eps,
                                        cfg.kl_coef, reference);
      for (std::size_t k = 0; k < dim; ++k) grad[k] += g[k];
    }

    double norm_sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      result.params.weights[k] +=
          cfg.learning_rate * grad[k] / static_cast<double>(cfg.questions_per_step);
      norm_sq += result.params.weights[k] * result.params.weights[k];
    }

    const auto ratio = [](std::size_t num, std::size_t den) {
      return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    result.history.records.push_back({step + 1, reward_sum / static_cast<double>(n_samples),
                                      f1_sum / static_cast<double>(n_samples),
                                      ratio(known_searches, known_rollouts),
                                      ratio(unknown_searches, unknown_rollouts),
                                      std::sqrt(norm_sq)});
    if (on_step) on_step(result.history.records.back(), result.params);
  }
  return result;
}

}  // namespace sem
