// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sem/error.hpp"
#include "sem/retrieval.hpp"
#include "sem/trajectory.hpp"

namespace sem {

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for one rollout stream. Depends only on its inputs, so rollouts can
/// run in any order without changing results.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view id,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ fnv1a(id)) ^ index);
}

inline double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// mt19937_64 with portable uniform draws (the standard distributions are
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return to_unit_interval(engine_()); }

  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// World data
// ---------------------------------------------------------------------------

struct Question {
  std::string id;
  std::string prompt;
  std::vector<std::string> golds;
  bool known = false;
  std::optional<std::string> gold_doc_id;
  std::vector<double> features;
};

/// What the "model" answers without searching.
struct InternalKnowledge {
  std::unordered_map<std::string, std::string> answers;

  const std::string& answer_for(const std::string& id) const {
    static const std::string kEmpty;
    auto it = answers.find(id);
    return it == answers.end() ? kEmpty : it->second;
  }
};

struct EnvConfig {
  double label_noise = 0.05;  // flip rate of the confidence feature
  double fault_rate = 0.02;   // probability a sampled rollout scrambles tag order
  std::size_t top_k = 3;

  void validate() const {
    if (!(label_noise >= 0.0 && label_noise <= 1.0) ||
        !(fault_rate >= 0.0 && fault_rate <= 1.0) || top_k == 0) {
      throw Error(ErrorCode::InvalidConfig,
                  "label_noise and fault_rate must lie in [0, 1], top_k >= 1");
    }
  }
};

// Feature layout.
inline constexpr std::size_t kFeatureDim = 4;
inline constexpr std::size_t kBiasFeature = 0;
inline constexpr std::size_t kConfidenceFeature = 1;
inline constexpr std::size_t kLengthFeature = 2;
inline constexpr std::size_t kEntityFeature = 3;

struct FeatureModel {
  double label_noise = 0.0;
  std::uint64_t noise_seed = 0;
  double length_mean = 0.0;
  double length_std = 1.0;
};

namespace detail {

inline std::vector<std::string_view> words(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

inline FeatureModel fit_feature_model(std::span<const Question> questions,
                                      double label_noise, std::uint64_t seed) {
  FeatureModel model;
  model.label_noise = label_noise;
  model.noise_seed = splitmix64(seed ^ 0x6c6162656c6e6f69ULL);
  if (questions.empty()) return model;
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& q : questions) {
    const double len = static_cast<double>(detail::words(q.prompt).size());
    sum += len;
    sq += len * len;
  }
  const double n = static_cast<double>(questions.size());
  model.length_mean = sum / n;
  const double var = std::max(0.0, sq / n - model.length_mean * model.length_mean);
  model.length_std = var > 0.0 ? std::sqrt(var) : 1.0;
  return model;
}

/// [bias, noisy self-knowledge indicator, prompt-length z-score,
///  count of capitalized words after the first].
inline std::vector<double> extract_features(const Question& q,
                                            const InternalKnowledge& knowledge,
                                            const FeatureModel& model) {
  std::vector<double> x(kFeatureDim, 0.0);
  x[kBiasFeature] = 1.0;

  bool confident = !knowledge.answer_for(q.id).empty();
  if (to_unit_interval(derive_seed(model.noise_seed, q.id, 0)) < model.label_noise) {
    confident = !confident;
  }
  x[kConfidenceFeature] = confident ? 1.0 : 0.0;

  const auto ws = detail::words(q.prompt);
  x[kLengthFeature] = (static_cast<double>(ws.size()) - model.length_mean) / model.length_std;

  int entities = 0;
  for (std::size_t i = 1; i < ws.size(); ++i) {
    if (std::isupper(static_cast<unsigned char>(ws[i].front()))) ++entities;
  }
  x[kEntityFeature] = entities;
  return x;
}

struct World {
  std::uint64_t seed = 0;
  EnvConfig env;
  std::vector<Question> questions;
  InternalKnowledge knowledge;
  Index index;
  FeatureModel feature_model;

  std::span<const Document> corpus() const { return index.documents(); }

  std::size_t count_known() const {
    return static_cast<std::size_t>(std::count_if(
        questions.begin(), questions.end(), [](const Question& q) { return q.known; }));
  }
  bool balanced() const { return 2 * count_known() == questions.size(); }

  const Question* find(std::string_view id) const {
    for (const auto& q : questions) {
      if (q.id == id) return &q;
    }
    return nullptr;
  }
};

/// Recomputes the feature model and every question's features.
inline void assign_features(World& world) {
  world.feature_model =
      fit_feature_model(world.questions, world.env.label_noise, world.seed);
  for (auto& q : world.questions) {
    q.features = extract_features(q, world.knowledge, world.feature_model);
  }
}

/// Wraps an ingested corpus and dataset into a world: builds the index and
/// features.
inline World assemble_world(std::uint64_t seed, EnvConfig env,
                            std::vector<Question> questions,
                            std::vector<Document> corpus, InternalKnowledge knowledge) {
  env.validate();
  World world;
  world.seed = seed;
  world.env = env;
  world.questions = std::move(questions);
  world.knowledge = std::move(knowledge);
  world.index = Index::build(std::move(corpus));
  std::unordered_set<std::string> ids;
  for (const auto& q : world.questions) {
    if (q.golds.empty()) {
      throw Error(ErrorCode::MalformedInput, "question '" + q.id + "' has no gold answer");
    }
    if (!ids.insert(q.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate question id '" + q.id + "'");
    }
  }
  assign_features(world);
  return world;
}

namespace detail {

struct Fact {
  std::string_view prompt;
  std::string_view answer;
};

inline constexpr std::array<Fact, 24> kFacts = {{
    {"What is the capital of France?", "Paris"},
    {"What is the capital of Japan?", "Tokyo"},
    {"What is the capital of Italy?", "Rome"},
    {"Which planet is known as the Red Planet?", "Mars"},
    {"Who wrote Romeo and Juliet?", "William Shakespeare"},
    {"What is the chemical symbol for gold?", "Au"},
    {"How many continents are there on Earth?", "7"},
    {"What is the largest ocean on Earth?", "Pacific Ocean"},
    {"What gas do plants absorb from the air?", "carbon dioxide"},
    {"How many sides does a hexagon have?", "6"},
    {"What is the boiling point of water in degrees Celsius?", "100"},
    {"Who painted the Mona Lisa?", "Leonardo da Vinci"},
    {"What is the square root of 81?", "9"},
    {"Which element has the atomic number 1?", "hydrogen"},
    {"What is the longest river in Africa?", "Nile"},
    {"In which year did World War II end?", "1945"},
    {"What is the freezing point of water in degrees Fahrenheit?", "32"},
    {"Which organ pumps blood through the human body?", "heart"},
    {"How many days are there in a leap year?", "366"},
    {"Who developed the theory of general relativity?", "Albert Einstein"},
    {"What is the smallest prime number?", "2"},
    {"Which language has the most native speakers?", "Mandarin Chinese"},
    {"What is the hardest natural substance?", "diamond"},
    {"Which metal is liquid at room temperature?", "mercury"},
}};

inline constexpr std::array<std::string_view, 32> kSyllables = {
    "ka", "lo",  "ri",  "ven", "tor", "mi", "sa",  "bel", "dra", "zun", "qui",
    "mor", "tal", "ne", "vis", "gar", "lun", "pe", "rho", "sel", "ta",  "ur",
    "wen", "xi",  "yor", "bri", "cal", "dem", "fen", "hal", "ost", "ix"};

/// Unique invented names, so each one occurs in exactly the documents that
/// mention it.
class NameSource {
 public:
  explicit NameSource(Rng& rng) : rng_(rng) {}

  std::string next() {
    while (true) {
      const std::size_t parts = 2 + rng_.below(2);
      std::string name;
      for (std::size_t i = 0; i < parts; ++i) name += kSyllables[rng_.below(kSyllables.size())];
      name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
      // Reserved words of the scoring tokenizer and existing names are skipped.
      if (name.size() < 4 || !used_.insert(name).second) continue;
      return name;
    }
  }

  std::string person() { return next() + " " + next(); }

 private:
  Rng& rng_;
  std::unordered_set<std::string> used_;
};

struct LookupItem {
  std::string prompt;
  std::string title;
  std::string body;
  std::string answer;
};

inline LookupItem make_lookup_item(Rng& rng, NameSource& names) {
  switch (rng.below(4)) {
    case 0: {
      const auto person = names.person();
      const auto city = names.next();
      return {"In which city was the draft held where " + person + " was selected?", person,
              person + " was selected in a draft that was held in " + city + ".", city};
    }
    case 1: {
      const auto person = names.person();
      const auto from = names.next();
      const auto to = names.next();
      return {"Which club did " + person + " join after leaving " + from + "?", person,
              person + " played for " + from + " before joining " + to + ".", to};
    }
    case 2: {
      const auto village = names.next();
      const auto river = names.next();
      return {"Which river flows past the village of " + village + "?", village,
              "The village of " + village + " lies on the banks of the " + river + " river.",
              river};
    }
    default: {
      const auto company = names.next();
      const auto founder = names.person();
      const auto year = std::to_string(1850 + rng.below(170));
      return {"Who founded " + company + "?", company,
              company + " was founded by " + founder + " in " + year + ".", founder};
    }
  }
}

inline std::pair<std::string, std::string> make_arithmetic(Rng& rng) {
  const long a = 2 + static_cast<long>(rng.below(98));
  const long b = 2 + static_cast<long>(rng.below(98));
  switch (rng.below(3)) {
    case 0: return {"What is " + std::to_string(a) + " plus " + std::to_string(b) + "?",
                    std::to_string(a + b)};
    case 1: {
      const long hi = std::max(a, b);
      const long lo = std::min(a, b);
      return {"What is " + std::to_string(hi) + " minus " + std::to_string(lo) + "?",
              std::to_string(hi - lo)};
    }
    default: return {"What is " + std::to_string(a) + " times " + std::to_string(b) + "?",
                     std::to_string(a * b)};
  }
}

inline std::string doc_id(std::size_t i) {
  std::ostringstream os;
  os << "doc-";
  os.width(5);
  os.fill('0');
  os << i;
  return os.str();
}

inline std::string question_id(std::size_t i) {
  std::ostringstream os;
  os << "q-";
  os.width(5);
  os.fill('0');
  os << i;
  return os.str();
}

}  // namespace detail

/// Synthetic QA world. Known questions (arithmetic and common facts) are
/// answered correctly from internal knowledge; unknown questions ask about
/// invented entities documented only in the generated corpus. The question
/// list is shuffled deterministically from `seed`.
inline World gen_world(std::size_t n_known, std::size_t n_unknown, std::uint64_t seed,
                       EnvConfig env = {}) {
  if (n_known < 1 || n_unknown < 1) {
    throw Error(ErrorCode::InvalidCount, "need at least one known and one unknown question");
  }
  env.validate();
  Rng rng(splitmix64(seed));
  detail::NameSource names(rng);

  std::vector<Document> corpus;
  std::vector<Question> questions;
  InternalKnowledge knowledge;

  corpus.push_back({detail::doc_id(corpus.size()), "Arithmetic",
                    "Addition, subtraction and multiplication combine two numbers into a "
                    "single result."});
  for (const auto& fact : detail::kFacts) {
    corpus.push_back({detail::doc_id(corpus.size()), std::string(fact.answer),
                      "Reference entry. " + std::string(fact.prompt) + " " +
                          std::string(fact.answer) + "."});
  }

  for (std::size_t i = 0; i < n_known; ++i) {
    Question q;
    q.id = detail::question_id(questions.size());
    q.known = true;
    if (rng.below(2) == 0) {
      auto [prompt, answer] = detail::make_arithmetic(rng);
      q.prompt = std::move(prompt);
      q.golds = {std::move(answer)};
    } else {
      const auto& fact = detail::kFacts[rng.below(detail::kFacts.size())];
      q.prompt = std::string(fact.prompt);
      q.golds = {std::string(fact.answer)};
    }
    knowledge.answers[q.id] = q.golds.front();
    questions.push_back(std::move(q));
  }

  for (std::size_t i = 0; i < n_unknown; ++i) {
    auto item = detail::make_lookup_item(rng, names);
    Question q;
    q.id = detail::question_id(questions.size());
    q.known = false;
    q.prompt = std::move(item.prompt);
    q.golds = {item.answer};
    q.gold_doc_id = detail::doc_id(corpus.size());
    corpus.push_back({*q.gold_doc_id, std::move(item.title), std::move(item.body)});
    knowledge.answers[q.id] = "";
    questions.push_back(std::move(q));
  }

  // Distractors mention invented names too, so the index is not trivially sparse.
  const std::size_t n_distractors = std::max<std::size_t>(1, n_unknown / 2);
  for (std::size_t i = 0; i < n_distractors; ++i) {
    const auto town = names.next();
    corpus.push_back({detail::doc_id(corpus.size()), town,
                      town + " is a small town in the " + names.next() +
                          " valley known for its annual festival."});
  }

  rng.shuffle(questions);
  World world = assemble_world(seed, env, std::move(questions), std::move(corpus),
                               std::move(knowledge));

  for (const auto& q : world.questions) {
    if (!q.gold_doc_id) continue;
    const auto hits = world.index.search(q.prompt, world.env.top_k);
    const bool found = std::any_of(hits.begin(), hits.end(), [&](const SearchHit& h) {
      return h.doc_id == *q.gold_doc_id;
    });
    if (!found) {
      throw Error(ErrorCode::Internal, "gold document for " + q.id + " is not retrievable");
    }
  }
  return world;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class Action { AnswerDirect, SearchThenAnswer };

constexpr std::string_view to_string(Action a) {
  return a == Action::AnswerDirect ? "AnswerDirect" : "SearchThenAnswer";
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(logistic(z)) without overflow; exact at +/-infinity.
inline double log_logistic(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 0.0;
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

/// Anything that maps features to the logit of p(SearchThenAnswer).
template <class P>
concept SearchPolicy = requires(const P& p, std::span<const double> x) {
  { p.search_logit(x) } -> std::convertible_to<double>;
};

/// Logistic policy: p(search) = logistic(weights . features).
struct PolicyParams {
  std::vector<double> weights;

  PolicyParams() = default;
  explicit PolicyParams(std::size_t dim) : weights(dim, 0.0) {}
  explicit PolicyParams(std::vector<double> w) : weights(std::move(w)) {}

  std::size_t feature_dim() const { return weights.size(); }

  double search_logit(std::span<const double> x) const {
    if (x.size() != weights.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "features have dimension " + std::to_string(x.size()) + ", weights " +
                      std::to_string(weights.size()));
    }
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return z;
  }

  bool finite() const {
    return std::all_of(weights.begin(), weights.end(),
                       [](double w) { return std::isfinite(w); });
  }
};

/// Hand-written policy for baselines and ceilings. Logits of +/-infinity make
/// it deterministic.
struct ScriptedPolicy {
  std::function<double(std::span<const double>)> logit;

  double search_logit(std::span<const double> x) const { return logit(x); }

  static ScriptedPolicy always_direct() {
    return {[](std::span<const double>) { return -std::numeric_limits<double>::infinity(); }};
  }
  static ScriptedPolicy always_search() {
    return {[](std::span<const double>) { return std::numeric_limits<double>::infinity(); }};
  }
  /// Searches exactly when the self-knowledge feature says "unknown".
  static ScriptedPolicy search_when_unsure() {
    return {[](std::span<const double> x) {
      return x[kConfidenceFeature] == 0.0 ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
    }};
  }
};

struct ActionSample {
  Action action;
  double logprob;
};

inline double action_logprob(double logit, Action a) {
  return a == Action::SearchThenAnswer ? log_logistic(logit) : log_logistic(-logit);
}

template <SearchPolicy P>
ActionSample act(const P& policy, std::span<const double> features, Rng& rng) {
  const double z = policy.search_logit(features);
  const Action a = rng.uniform() < logistic(z) ? Action::SearchThenAnswer : Action::AnswerDirect;
  return {a, action_logprob(z, a)};
}

/// Argmax action; p = 0.5 resolves to AnswerDirect.
template <SearchPolicy P>
Action greedy_action(const P& policy, std::span<const double> features) {
  return policy.search_logit(features) > 0.0 ? Action::SearchThenAnswer : Action::AnswerDirect;
}

// ---------------------------------------------------------------------------
// Rollout
// ---------------------------------------------------------------------------

inline constexpr std::string_view kInitialThought =
    "I will first decide whether I already know the answer to this question.";
inline constexpr std::string_view kUpdatedThought =
    "Updating the answer with the retrieved information.";

inline std::string boxed_answer(const std::string& answer) {
  if (answer.empty()) return "The initial answer is \\boxed{}.";
  return "The answer is \\boxed{" + answer + "}.";
}

/// Deterministic trajectory for a chosen action.
inline Trajectory build_trajectory(const Question& q, const World& world, Action action) {
  const std::string& internal = world.knowledge.answer_for(q.id);
  Trajectory traj;
  traj.segments.push_back({SegmentKind::Think, std::string(kInitialThought)});
  traj.segments.push_back({SegmentKind::Answer, boxed_answer(internal)});
  if (action == Action::AnswerDirect) return traj;

  const auto hits = world.index.search(q.prompt, world.env.top_k);
  const bool gold_retrieved =
      q.gold_doc_id && std::any_of(hits.begin(), hits.end(), [&](const SearchHit& h) {
        return h.doc_id == *q.gold_doc_id;
      });
  traj.segments.push_back({SegmentKind::Search, q.prompt});
  traj.segments.push_back({SegmentKind::Result, format_result(hits, world.index)});
  traj.segments.push_back({SegmentKind::Think, std::string(kUpdatedThought)});
  traj.segments.push_back(
      {SegmentKind::Answer, boxed_answer(gold_retrieved ? q.golds.front() : internal)});
  return traj;
}

struct RolloutResult {
  Trajectory traj;
  Action action;
  double logprob;
  bool faulted = false;
};

/// Samples an action and emits its trajectory. With probability
/// env.fault_rate the first two segments are swapped, which invalidates the
/// structure. Exactly two uniforms are drawn from `rng`.
template <SearchPolicy P>
RolloutResult rollout(const P& policy, const Question& q, const World& world, Rng& rng) {
  const ActionSample sample = act(policy, q.features, rng);
  RolloutResult out{build_trajectory(q, world, sample.action), sample.action, sample.logprob};
  if (rng.uniform() < world.env.fault_rate) {
    std::swap(out.traj.segments[0], out.traj.segments[1]);
    out.faulted = true;
  }
  return out;
}

/// Greedy rollout; consumes no randomness and never injects faults.
template <SearchPolicy P>
RolloutResult greedy_rollout(const P& policy, const Question& q, const World& world) {
  const double z = policy.search_logit(q.features);
  const Action a = greedy_action(policy, q.features);
  return {build_trajectory(q, world, a), a, action_logprob(z, a)};
}

}  // namespace sem
