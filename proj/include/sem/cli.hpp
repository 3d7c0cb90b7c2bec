// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sem/error.hpp"
#include "sem/eval.hpp"
#include "sem/grpo.hpp"
#include "sem/json_io.hpp"
#include "sem/report.hpp"
#include "sem/retrieval.hpp"
#include "sem/reward.hpp"
#include "sem/simenv.hpp"
#include "sem/trajectory.hpp"

namespace sem {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMalformedCorpus = 2;
inline constexpr int kExitParseFailure = 3;
inline constexpr int kExitUsage = 64;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A JSON array of strings, or one gold answer per non-blank line.
inline std::vector<std::string> read_golds(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json arr = json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) {
      throw Error(ErrorCode::MalformedInput, path.string() + " is not a JSON array");
    }
    return arr.get<std::vector<std::string>>();
  }
  std::vector<std::string> golds;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) golds.push_back(line);
  }
  return golds;
}

}  // namespace detail

/// Entry point of the `sem` tool. Output goes to `out`, diagnostics to `err`.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Search-decision training toolkit: synthetic worlds, BM25 search, "
               "gated reward scoring and GRPO training"};
  app.require_subcommand(1);

  std::size_t n_known = 0, n_unknown = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  EnvConfig env;
  auto* gen = app.add_subcommand("gen-data", "Generate a balanced synthetic world");
  gen->add_option("--known", n_known, "Number of known questions")->required();
  gen->add_option("--unknown", n_unknown, "Number of unknown questions")->required();
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--label-noise", env.label_noise, "Confidence-feature flip rate");
  gen->add_option("--fault-rate", env.fault_rate, "Rollout tag-scramble probability");
  gen->add_option("--top-k", env.top_k, "Documents retrieved per search");

  std::string corpus_path;
  auto* ingest = app.add_subcommand("ingest", "Index a JSON-lines corpus and print statistics");
  ingest->add_option("--corpus", corpus_path, "Corpus file")->required();

  std::string config_path, world_dir, train_out;
  auto* train_cmd = app.add_subcommand("train", "Train the search policy with GRPO");
  train_cmd->add_option("--config", config_path, "key=value training config")->required();
  train_cmd->add_option("--world", world_dir, "World directory")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->required();

  std::string params_path, eval_world;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation; prints metrics as JSON");
  eval_cmd->add_option("--params", params_path, "Policy parameters file")->required();
  eval_cmd->add_option("--world", eval_world, "World directory")->required();

  std::string traj_path, golds_path;
  double tau = RewardConfig{}.tau;
  auto* score = app.add_subcommand("score", "Score one trajectory; prints the reward breakdown");
  score->add_option("--trajectory", traj_path, "Trajectory text file")->required();
  score->add_option("--golds", golds_path, "Gold answers (JSON array or one per line)")->required();
  score->add_option("--tau", tau, "First-answer F1 threshold");

  std::string curves_path, report_out;
  auto* report = app.add_subcommand("report", "Summarize training curves as CSV or SVG");
  report->add_option("--curves", curves_path, "curves.csv from train")->required();
  report->add_option("--out", report_out, "Output file (.svg for a chart, else CSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      const World world = gen_world(n_known, n_unknown, seed, env);
      save_world(out_dir, world);
      out << json{{"questions", world.questions.size()},
                  {"known", world.count_known()},
                  {"documents", world.corpus().size()},
                  {"balanced", world.balanced()}}
                 .dump()
          << '\n';
      return kExitOk;
    }

    if (*ingest) {
      try {
        auto in = detail::open_in(corpus_path);
        const Index index = Index::build(read_corpus(in));
        out << json{{"N", index.size()}, {"avgdl", index.avgdl()},
                    {"terms", index.vocabulary_size()}}
                   .dump()
            << '\n';
        return kExitOk;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedInput && e.code() != ErrorCode::DuplicateId) throw;
        err << "ingest: " << e.what() << '\n';
        return kExitMalformedCorpus;
      }
    }

    if (*train_cmd) {
      auto cfg_in = detail::open_in(config_path);
      const TrainConfig cfg = parse_train_config(cfg_in);
      const World world = load_world(world_dir);
      const TrainResult result = train(world, cfg);
      std::filesystem::create_directories(train_out);
      save_params(std::filesystem::path(train_out) / "params.json", result.params);
      auto curves = detail::open_out(std::filesystem::path(train_out) / "curves.csv");
      write_curves_csv(curves, result.history);
      const auto& h = result.history;
      out << json{{"steps", h.records.size()},
                  {"final_mean_reward", h.records.back().mean_reward},
                  {"tail20_mean_reward", h.tail_mean(&StepRecord::mean_reward, 20)},
                  {"weights", result.params.weights}}
                 .dump()
          << '\n';
      return kExitOk;
    }

    if (*eval_cmd) {
      const PolicyParams params = load_params(params_path);
      const World world = load_world(eval_world);
      out << to_json(evaluate(params, world)).dump() << '\n';
      return kExitOk;
    }

    if (*score) {
      const std::string text = detail::read_file(traj_path);
      const auto golds = detail::read_golds(golds_path);
      Trajectory traj;
      try {
        traj = parse(text);
      } catch (const Error& e) {
        err << "score: " << e.what();
        if (e.offset()) err << " at byte " << *e.offset();
        err << '\n';
        return kExitParseFailure;
      }
      out << to_json(compute_reward(traj, golds, RewardConfig{tau})).dump() << '\n';
      return kExitOk;
    }

    if (*report) {
      auto in = detail::open_in(curves_path);
      const TrainingHistory history = read_curves_csv(in);
      auto file = detail::open_out(report_out);
      if (std::filesystem::path(report_out).extension() == ".svg") {
        write_curve_svg(file, history);
      } else {
        write_curve_summary_csv(file, history);
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sem
