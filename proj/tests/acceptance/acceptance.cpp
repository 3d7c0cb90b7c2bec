// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

// Standalone acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "sem/eval.hpp"
#include "sem/grpo.hpp"
#include "sem/json_io.hpp"
#include "sem/reward.hpp"
#include "sem/scoring.hpp"

#ifndef SEM_CLI_PATH
#define SEM_CLI_PATH "sem"
#endif

namespace {

using namespace sem;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Reward truth table
// ---------------------------------------------------------------------------

/// Literal transcription of the reward formula over oracle flags and oracle F1.
double oracle_reward(const std::vector<SegmentKind>& kinds, const std::vector<std::string>& bodies,
                     const std::vector<std::string>& golds, double tau) {
  const StructureFlags fl = oracle::flags(kinds);
  if (!fl.f) return 0.0;
  const auto best = [&](const std::string& a) {
    double m = 0.0;
    for (const auto& g : golds) m = std::max(m, oracle::token_f1(a, g));
    return m;
  };
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (kinds[i] == SegmentKind::Answer) answers.push_back(bodies[i]);
  }
  const double f1_a1 = best(answers.front());
  const double f1_a2 = best(answers.back());
  const double direct = (f1_a1 >= tau && !fl.s && fl.t) ? f1_a1 : 0.0;
  const double searched = (f1_a1 < tau && fl.u) ? f1_a2 : 0.0;
  return direct + searched;
}

Outcome reward_truth_table() {
  const std::vector<std::string> golds = {"x y z w", "alpha"};
  const double tau = 0.7;
  // F1 values: 1, 6/7 (>= tau), 2/3 (< tau), 0, 0 (empty), 1 via second gold.
  const std::vector<std::string> variants = {"x y z w", "x y z", "x y", "q", "", "The Alpha."};

  struct Case {
    Trajectory traj;
    std::vector<SegmentKind> kinds;
    std::vector<std::string> bodies;
    double expected;
  };
  std::vector<Case> cases;
  std::set<std::tuple<bool, bool, bool, bool, int>> combos;

  for (int len = 1; len <= 6; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 4;
    for (int code = 0; code < total; ++code) {
      std::vector<SegmentKind> kinds;
      for (int i = 0, c = code; i < len; ++i, c /= 4) kinds.push_back(kAllSegmentKinds[c % 4]);
      const bool has_answer = std::count(kinds.begin(), kinds.end(), SegmentKind::Answer) > 0;
      const std::size_t n_first = has_answer ? variants.size() : 1;
      const std::size_t n_last = has_answer ? variants.size() : 1;
      for (std::size_t v1 = 0; v1 < n_first; ++v1) {
        for (std::size_t v2 = 0; v2 < n_last; ++v2) {
          std::vector<std::string> bodies;
          bool seen_answer = false;
          for (auto k : kinds) {
            if (k == SegmentKind::Answer) {
              bodies.push_back(variants[seen_answer ? v2 : v1]);
              seen_answer = true;
            } else {
              bodies.push_back("body " + std::string(tag_name(k)));
            }
          }
          Case c;
          for (std::size_t i = 0; i < kinds.size(); ++i) c.traj.segments.push_back({kinds[i], bodies[i]});
          c.kinds = kinds;
          c.bodies = bodies;
          c.expected = oracle_reward(kinds, bodies, golds, tau);
          const auto fl = oracle::flags(kinds);
          int above = -1;
          if (has_answer) {
            double m = 0.0;
            for (const auto& g : golds) m = std::max(m, oracle::token_f1(variants[v1], g));
            above = m >= tau;
          }
          combos.insert({fl.f, fl.s, fl.t, fl.u, above});
          cases.push_back(std::move(c));
        }
      }
    }
  }

  std::size_t mismatches = 0;
  const auto start = Clock::now();
  for (const auto& c : cases) {
    if (compute_reward(c.traj, golds, {tau}).reward != c.expected) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  // F1 exactly equal to tau counts as confident.
  const double tie_tau = token_f1("x y", "x y z w");
  Trajectory tie;
  tie.segments = {{SegmentKind::Think, "t"}, {SegmentKind::Answer, "x y"}};
  const bool tie_ok = compute_reward(tie, golds, {tie_tau}).reward == tie_tau;

  std::size_t valid_combos = 0;
  for (const auto& c : combos) valid_combos += std::get<0>(c);
  std::ostringstream d;
  d << cases.size() << " cases, " << mismatches << " mismatches, " << combos.size()
    << " distinct (f,s,t,u,F1>=tau) combos (" << valid_combos << " with f=1), tie at tau "
    << (tie_ok ? "ok" : "WRONG") << ", " << elapsed << " s";
  return {mismatches == 0 && tie_ok && elapsed < 1.0, d.str()};
}

// ---------------------------------------------------------------------------
// Zero-reward rule under adjacent-swap mutations
// ---------------------------------------------------------------------------

Outcome zero_reward_rule() {
  EnvConfig env;
  env.label_noise = 0.0;
  env.fault_rate = 0.0;
  const World w = gen_world(40, 40, 5, env);
  std::mt19937_64 rng(11);
  std::size_t mutated = 0, invalid = 0, failures = 0;

  const auto check = [&](const Trajectory& t, const std::vector<std::string>& golds) {
    ++mutated;
    std::vector<SegmentKind> kinds;
    for (const auto& s : t.segments) kinds.push_back(s.kind);
    const auto flags = validate_structure(t);
    if (flags.f != oracle::flags(kinds).f) ++failures;
    if (!flags.f) {
      ++invalid;
      if (compute_reward(t, golds).reward != 0.0) ++failures;
    }
  };

  for (const auto& q : w.questions) {
    for (Action a : {Action::AnswerDirect, Action::SearchThenAnswer}) {
      const Trajectory base = build_trajectory(q, w, a);
      if (!validate_structure(base).f) ++failures;
      const std::size_t n = base.segments.size();
      for (std::size_t i = 0; i + 1 < n; ++i) {
        Trajectory t = base;
        std::swap(t.segments[i], t.segments[i + 1]);
        check(t, q.golds);
      }
      // Chains of random adjacent swaps.
      for (int chain = 0; chain < 3; ++chain) {
        Trajectory t = base;
        const int steps = 2 + static_cast<int>(rng() % 4);
        for (int s = 0; s < steps; ++s) {
          const std::size_t i = rng() % (n - 1);
          std::swap(t.segments[i], t.segments[i + 1]);
        }
        check(t, q.golds);
      }
    }
  }
  std::ostringstream d;
  d << mutated << " mutations, " << invalid << " with f=0, " << failures << " failures";
  return {failures == 0 && invalid >= 500, d.str()};
}

// ---------------------------------------------------------------------------
// Scoring oracle
// ---------------------------------------------------------------------------

Outcome scoring_oracle() {
  std::mt19937_64 rng(2024);
  const std::vector<std::string> vocab = {"the", "a",     "an",     "The",  "Nashville", "nashville,",
                                          "2003", "draft", "Draft!", "x",    "y",         "z",
                                          "(y)",  "co-op", "it's",   "AN",   "Tennessee", "tennessee."};
  const auto random_text = [&] {
    std::string s;
    const int n = static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      s += vocab[rng() % vocab.size()];
      s += (rng() % 5 == 0) ? "  \t" : " ";
    }
    return s;
  };
  const auto perturb = [&](std::string s) {
    for (char& c : s) {
      if (rng() % 3 == 0) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return (rng() % 2 ? "The " : "") + s + (rng() % 2 ? "." : "");
  };

  std::size_t mismatches = 0, em_cases = 0, em_violations = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::string pred = random_text();
    const std::string gold = i % 4 == 0 ? perturb(pred) : random_text();
    const double got = token_f1(pred, gold);
    const double want = oracle::token_f1(pred, gold);
    worst = std::max(worst, std::abs(got - want));
    if (std::abs(got - want) > 1e-12) ++mismatches;
    const std::vector<std::string> golds = {gold};
    if (exact_match(pred, golds)) {
      ++em_cases;
      if (best_f1(pred, golds) != 1.0) ++em_violations;
    }
  }
  std::ostringstream d;
  d << "1000 pairs, max |diff| " << worst << ", " << mismatches << " mismatches; " << em_cases
    << " exact matches, " << em_violations << " with F1 != 1";
  return {mismatches == 0 && em_violations == 0 && em_cases > 0, d.str()};
}

// ---------------------------------------------------------------------------
// BM25 oracle
// ---------------------------------------------------------------------------

Outcome bm25_oracle() {
  std::mt19937_64 rng(77);
  std::vector<std::string> vocab;
  for (int i = 0; i < 40; ++i) vocab.push_back("w" + std::to_string(i));
  std::vector<Document> docs;
  for (int d = 0; d < 100; ++d) {
    std::string body;
    const int len = 3 + static_cast<int>(rng() % 12);
    // Skewed draws so frequent terms repeat and scores tie.
    for (int i = 0; i < len; ++i) body += vocab[(rng() % 40) * (rng() % 40) / 40] + " ";
    docs.push_back({"doc" + std::to_string(1000 - d), "t" + std::to_string(d % 7), body});
  }
  // A few exact duplicates guarantee tie-breaks are exercised.
  for (int d = 0; d < 5; ++d) docs[90 + d].body = docs[d].body, docs[90 + d].title = docs[d].title;
  const Index index = build_index(docs);

  std::size_t mismatches = 0, ties = 0;
  for (int q = 0; q < 200; ++q) {
    std::string query;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) query += vocab[rng() % vocab.size()] + " ";
    const std::size_t k = q % 2 ? 10 : 100;
    const auto got = index.search(query, k);
    const auto want = oracle::bm25_rank(docs, query, k);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].doc_id == want[i].first && std::abs(got[i].score - want[i].second) < 1e-9;
      if (i > 0 && want[i].second == want[i - 1].second) ++ties;
    }
    if (!same) ++mismatches;
  }
  std::ostringstream d;
  d << "200 queries on 100 docs, " << mismatches << " ranking mismatches, " << ties
    << " tied adjacent pairs checked";
  return {mismatches == 0, d.str()};
}

// ---------------------------------------------------------------------------
// Advantage normalization
// ---------------------------------------------------------------------------

Outcome advantage_normalization() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_mean = 0.0, worst_std = 0.0;
  int groups = 0;
  while (groups < 1000) {
    std::vector<double> r(2 + rng() % 15);
    for (double& x : r) x = u(rng) < 0.5 ? std::round(u(rng)) : u(rng);
    double m = 0.0;
    for (double x : r) m += x;
    m /= static_cast<double>(r.size());
    double var = 0.0;
    for (double x : r) var += (x - m) * (x - m);
    if (std::sqrt(var / static_cast<double>(r.size())) < 1e-3) continue;
    ++groups;
    const auto a = group_advantages(r, 1e-12);
    double am = 0.0, av = 0.0;
    for (double x : a) am += x;
    am /= static_cast<double>(a.size());
    for (double x : a) av += (x - am) * (x - am);
    worst_mean = std::max(worst_mean, std::abs(am));
    worst_std = std::max(worst_std, std::abs(std::sqrt(av / static_cast<double>(a.size())) - 1.0));
  }
  const std::vector<double> one_hot = {1, 0, 0, 0};
  const auto a = group_advantages(one_hot, 1e-6);
  const std::vector<double> want = {1.7321, -0.5774, -0.5774, -0.5774};
  bool vec_ok = true;
  for (std::size_t i = 0; i < 4; ++i) vec_ok &= std::abs(a[i] - want[i]) < 1e-3;
  std::ostringstream d;
  d << "1000 groups, max |mean| " << worst_mean << ", max |std-1| " << worst_std << "; [1,0,0,0] -> ["
    << a[0] << ", " << a[1] << ", " << a[2] << ", " << a[3] << "]";
  return {worst_mean < 1e-9 && worst_std < 1e-6 && vec_ok, d.str()};
}

// ---------------------------------------------------------------------------
// Gradient correctness
// ---------------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double clip = 0.1 + 0.1 * (trial % 3);
    const double kl = trial % 2 ? 0.0 : 0.2;
    PolicyParams params(kFeatureDim), ref(kFeatureDim), old(kFeatureDim);
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      params.weights[j] = normal(rng);
      ref.weights[j] = normal(rng);
      old.weights[j] = params.weights[j] + 0.3 * normal(rng);
    }
    RolloutGroup group{"q", {}};
    std::vector<double> rewards;
    const std::size_t g = 2 + rng() % 9;
    while (group.samples.size() < g) {
      std::vector<double> x = {1.0, static_cast<double>(rng() % 2), normal(rng), normal(rng)};
      const Action a = rng() % 2 ? Action::SearchThenAnswer : Action::AnswerDirect;
      const double old_lp = action_logprob(old.search_logit(x), a);
      const double ratio = std::exp(action_logprob(params.search_logit(x), a) - old_lp);
      // Finite differences are meaningless exactly on a clip kink.
      if (std::abs(ratio - 1.0 + clip) < 1e-3 || std::abs(ratio - 1.0 - clip) < 1e-3) continue;
      const double r = static_cast<double>(rng() % 1000) / 999.0;
      group.samples.push_back({old_lp, x, a, r});
      rewards.push_back(r);
    }
    const auto adv = group_advantages(rewards, 1e-8);
    const auto analytic = surrogate_gradient(params, group, adv, clip, kl, ref);
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& w) {
          return surrogate_objective(PolicyParams(w), group, adv, clip, kl, ref);
        },
        params.weights);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  std::ostringstream d;
  d << "100 instances, max relative error " << worst;
  return {worst < 1e-5, d.str()};
}

// ---------------------------------------------------------------------------
// Learning check
// ---------------------------------------------------------------------------

Outcome learning_check() {
  const TrainConfig cfg;
  // Ceiling: sampled rollouts of the scripted optimal policy on the same worlds.
  double ceiling_sum = 0.0;
  std::size_t ceiling_n = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const World w = gen_world(200, 200, seed);
    for (const auto& q : w.questions) {
      for (std::uint64_t i = 0; i < 8; ++i) {
        Rng rng(derive_seed(seed, q.id, i));
        ceiling_sum += compute_reward(rollout(ScriptedPolicy::search_when_unsure(), q, w, rng).traj, q.golds,
                                      {cfg.tau})
                           .reward;
        ++ceiling_n;
      }
    }
  }
  const double ceiling = ceiling_sum / static_cast<double>(ceiling_n);
  std::cout << "  scripted optimal policy ceiling: mean reward " << ceiling << "\n";

  int passing = 0;
  double slowest = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto start = Clock::now();
    const World w = gen_world(200, 200, seed);
    TrainConfig run = cfg;
    run.seed = seed;
    const auto result = train(w, run);
    const double elapsed = seconds_since(start);
    slowest = std::max(slowest, elapsed);
    const auto& h = result.history;
    const double reward = h.tail_mean(&StepRecord::mean_reward, 20);
    const double sr_unknown = h.tail_mean(&StepRecord::sr_unknown, 20);
    const double sr_known = h.tail_mean(&StepRecord::sr_known, 20);
    const bool ok = reward >= 0.85 && sr_unknown >= 0.9 && sr_known <= 0.1 && elapsed < 60.0;
    passing += ok;
    std::printf("  seed %llu: tail-20 reward %.4f sr_unknown %.4f sr_known %.4f (%.2f s) %s\n",
                static_cast<unsigned long long>(seed), reward, sr_unknown, sr_known, elapsed,
                ok ? "ok" : "below bound");
  }
  std::ostringstream d;
  d << passing << "/10 seeds meet the bound (need 9), ceiling " << ceiling << ", slowest seed " << slowest
    << " s";
  return {passing >= 9, d.str()};
}

// ---------------------------------------------------------------------------
// Behavioral case study
// ---------------------------------------------------------------------------

Outcome behavior_check() {
  EnvConfig env;
  env.label_noise = 0.0;
  env.fault_rate = 0.0;
  const World w = gen_world(200, 200, 1, env);
  const auto result = train(w, TrainConfig{});
  const EvalReport report = evaluate_detailed(result.params, w.questions, w);
  std::size_t known = 0, known_ok = 0, unknown = 0, unknown_ok = 0;
  for (const auto& item : report.items) {
    if (item.known) {
      ++known;
      known_ok += item.segments == 2 && item.action == Action::AnswerDirect;
    } else {
      ++unknown;
      unknown_ok += item.segments == 6 && item.action == Action::SearchThenAnswer;
    }
  }
  // Shape check on one example of each kind.
  bool shapes = true;
  for (const auto& q : w.questions) {
    const auto r = greedy_rollout(result.params, q, w);
    std::vector<SegmentKind> kinds;
    for (const auto& s : r.traj.segments) kinds.push_back(s.kind);
    const auto fl = oracle::flags(kinds);
    if (q.known && r.traj.segments.size() == 2) shapes &= fl.t && !fl.s;
    if (!q.known && r.traj.segments.size() == 6) shapes &= fl.u && fl.s;
  }
  const double known_rate = static_cast<double>(known_ok) / static_cast<double>(known);
  const double unknown_rate = static_cast<double>(unknown_ok) / static_cast<double>(unknown);
  std::ostringstream d;
  d << "known: " << known_ok << "/" << known << " two-segment no-search; unknown: " << unknown_ok << "/"
    << unknown << " six-segment single-search; em " << report.metrics.em;
  return {known_rate >= 0.95 && unknown_rate >= 0.95 && shapes, d.str()};
}

// ---------------------------------------------------------------------------
// CLI smoke test
// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SEM_CLI_PATH + "\" " + args + " >> \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_smoke() {
  const fs::path dir = fs::temp_directory_path() / "sem_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const fs::path world = dir / "world";
  const fs::path out = dir / "run";
  std::ofstream(dir / "train.cfg") << "seed = 3\n";
  std::ofstream(dir / "traj.txt") << "<think>The question is asking for the sum of 1+1.</think>\n"
                                     "<answer>The answer is \\boxed{2}.</answer>\n";
  std::ofstream(dir / "golds.json") << "[\"2\"]";

  const std::vector<std::pair<std::string, std::string>> steps = {
      {"gen-data", "gen-data --known 10 --unknown 10 --seed 7 --out \"" + world.string() + "\""},
      {"ingest", "ingest --corpus \"" + (world / kCorpusFile).string() + "\""},
      {"train", "train --config \"" + (dir / "train.cfg").string() + "\" --world \"" + world.string() +
                    "\" --out \"" + out.string() + "\""},
      {"eval", "eval --params \"" + (out / "params.json").string() + "\" --world \"" + world.string() + "\""},
      {"score", "score --trajectory \"" + (dir / "traj.txt").string() + "\" --golds \"" +
                    (dir / "golds.json").string() + "\" --tau 0.7"},
      {"report", "report --curves \"" + (out / "curves.csv").string() + "\" --out \"" +
                     (dir / "curves.svg").string() + "\""},
  };
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;
  for (const auto& [name, args] : steps) {
    const int code = run_cli(args, log);
    d << name << "=" << code << " ";
    ok &= code == 0;
  }
  const double elapsed = seconds_since(start);
  ok &= fs::exists(dir / "curves.svg");
  d << "in " << elapsed << " s";
  if (ok) fs::remove_all(dir);
  return {ok && elapsed < 10.0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"reward truth table", reward_truth_table},
      {"zero-reward rule", zero_reward_rule},
      {"scoring oracle", scoring_oracle},
      {"bm25 oracle", bm25_oracle},
      {"advantage normalization", advantage_normalization},
      {"gradient correctness", gradient_check},
      {"learning check", learning_check},
      {"behavioral case study", behavior_check},
      {"cli smoke test", cli_smoke},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
