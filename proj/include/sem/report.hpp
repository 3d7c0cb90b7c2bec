// Copyright 2026 The semsearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sem/error.hpp"
#include "sem/grpo.hpp"

namespace sem {

inline TrainingHistory read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "empty curves file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader) {
    throw Error(ErrorCode::MalformedInput, "unexpected curves header '" + line + "'");
  }
  TrainingHistory history;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    StepRecord r{};
    char c1, c2, c3, c4, c5;
    row >> r.step >> c1 >> r.mean_reward >> c2 >> r.mean_f1 >> c3 >> r.sr_known >> c4 >>
        r.sr_unknown >> c5 >> r.weight_norm;
    if (!row || c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
      throw Error(ErrorCode::MalformedInput, "curves line " + std::to_string(lineno) + " is malformed");
    }
    history.records.push_back(r);
  }
  return history;
}

/// Trailing moving averages of the bounded columns, one row per step.
inline void write_curve_summary_csv(std::ostream& out, const TrainingHistory& h,
                                    std::size_t window = 10) {
  out << "step,mean_reward_ma,mean_f1_ma,sr_known_ma,sr_unknown_ma\n";
  const auto old_precision = out.precision(6);
  for (std::size_t i = 0; i < h.records.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    double sums[4] = {0, 0, 0, 0};
    for (std::size_t j = lo; j <= i; ++j) {
      sums[0] += h.records[j].mean_reward;
      sums[1] += h.records[j].mean_f1;
      sums[2] += h.records[j].sr_known;
      sums[3] += h.records[j].sr_unknown;
    }
    const double n = static_cast<double>(i - lo + 1);
    out << h.records[i].step << ',' << sums[0] / n << ',' << sums[1] / n << ',' << sums[2] / n
        << ',' << sums[3] / n << '\n';
  }
  out.precision(old_precision);
}

/// Line chart of reward, F1 and both search ratios against step.
inline void write_curve_svg(std::ostream& out, const TrainingHistory& h) {
  constexpr double kWidth = 640, kHeight = 360, kMargin = 40;
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const std::size_t max_step = h.records.empty() ? 1 : std::max<std::size_t>(1, h.records.back().step);

  struct Series {
    const char* name;
    double StepRecord::*column;
    const char* color;
  };
  constexpr std::array<Series, 4> kSeries = {{
      {"mean_reward", &StepRecord::mean_reward, "#1f77b4"},
      {"mean_f1", &StepRecord::mean_f1, "#2ca02c"},
      {"sr_known", &StepRecord::sr_known, "#d62728"},
      {"sr_unknown", &StepRecord::sr_unknown, "#ff7f0e"},
  }};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\">\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#888\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 10 << "\" font-size=\"12\">training curves"
      << " (steps 1-" << max_step << ", y in [0,1])</text>\n";
  for (std::size_t s = 0; s < kSeries.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << kSeries[s].color << "\" points=\"";
    for (const auto& r : h.records) {
      const double x = kMargin + plot_w * static_cast<double>(r.step) / static_cast<double>(max_step);
      const double v = std::clamp(r.*(kSeries[s].column), 0.0, 1.0);
      out << x << ',' << kMargin + plot_h * (1.0 - v) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 90 << "\" y=\"" << kMargin + 15 + 14 * s
        << "\" font-size=\"11\" fill=\"" << kSeries[s].color << "\">" << kSeries[s].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace sem
