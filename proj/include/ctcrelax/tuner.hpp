// Copyright 2026 The ctcrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dev-set searches: (beta, M) grid, LM weight grid, beam-width sweep and
// temperature calibration. Every search is exhaustive over its grid and
// deterministic; utterances within a point are decoded in parallel.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctcrelax/aggregation.hpp"
#include "ctcrelax/beam_decoder.hpp"
#include "ctcrelax/metrics.hpp"

namespace ctcrelax {

struct SweepRow {
  // Point coordinates in column order, e.g. {{"beta", 0.75}, {"layers", 6}}.
  std::vector<std::pair<std::string, double>> params;
  std::optional<double> objective;  // temperature calibration only
  std::optional<double> wer;
  std::optional<double> cer;
  double wall_clock_ms = 0.0;
  // Per-utterance 1-best decoder score, corpus order.
  std::vector<double> best_scores;
};

struct SweepFailure {
  std::vector<std::pair<std::string, double>> params;
  std::string reason;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grid order, failed points omitted
  std::vector<SweepFailure> failures;
};

// Header: param names, [objective,] wer, cer, wall_clock_ms.
void write_sweep_csv(const SweepResult& result, std::ostream& sink);

struct GridSpec {
  std::vector<double> beta_values;
  std::vector<std::size_t> m_values;
  DecodeConfig decode;
  double temperature = 1.0;

  // beta 0.0..1.0 step 0.05 and M = 1..num_layers.
  static GridSpec defaults(std::size_t num_layers);
  void validate(std::size_t num_layers) const;
};

struct GridSearchResult {
  double best_beta = 1.0;
  std::size_t best_m = 1;
  SweepResult sweep;
};

// Lowest pooled WER wins; ties go to the larger beta, then the smaller M.
GridSearchResult grid_search(const Corpus& dev, const DecoderContext& ctx,
                             const GridSpec& grid, std::size_t jobs = 1);

struct LmGridResult {
  double best_lm_weight = 0.0;
  double best_word_score = 0.0;
  SweepResult sweep;
};

// Default ranges used by the CLI: lm_weight 0..3 step 0.25, word_score
// -2..2 step 0.5.
std::vector<double> default_lm_weight_grid();
std::vector<double> default_word_score_grid();

// Lowest pooled WER wins; ties keep the earlier grid point (lm_weight
// ascending, then word_score ascending).
LmGridResult lm_weight_search(const Corpus& dev, const DecoderContext& ctx,
                              const AggregationConfig& agg,
                              const DecodeConfig& decode,
                              const std::vector<double>& lm_weights,
                              const std::vector<double>& word_scores,
                              std::size_t jobs = 1);

// Widths must be >= 1 and strictly ascending.
SweepResult beam_width_sweep(const Corpus& corpus, const DecoderContext& ctx,
                             const AggregationConfig& agg,
                             const DecodeConfig& decode,
                             const std::vector<std::size_t>& widths,
                             std::size_t jobs = 1);

enum class CalibrationObjective { kWer, kNll };

struct TemperatureResult {
  double best_temperature = 1.0;
  SweepResult sweep;
};

// 0.5..5.0 step 0.1.
std::vector<double> default_temperature_grid();

// kWer decodes the dev set; kNll averages -log P_ctc(reference). Ties go to
// the temperature closest to 1, then the smaller one.
TemperatureResult calibrate_temperature(const Corpus& dev,
                                        const DecoderContext& ctx,
                                        const AggregationConfig& agg,
                                        const DecodeConfig& decode,
                                        const std::vector<double>& t_grid,
                                        CalibrationObjective objective,
                                        std::size_t jobs = 1);

// Evenly spaced inclusive range with values rounded to 1e-9, so 0.05 steps
// land on exact decimal grid points.
std::vector<double> linear_grid(double first, double last, double step);

}  // namespace ctcrelax
