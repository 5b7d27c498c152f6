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

#include "ctcrelax/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "ctcrelax/ctc.hpp"
#include "ctcrelax/errors.hpp"
#include "ctcrelax/log_math.hpp"
#include "ctcrelax/parallel.hpp"

namespace ctcrelax {
namespace {

using Clock = std::chrono::steady_clock;
using LogProbSource = std::function<LogitFrameSeq(std::size_t)>;

struct PointOutcome {
  ErrorBreakdown words;
  ErrorBreakdown chars;
  std::vector<double> best_scores;
};

// Decodes every utterance of the corpus; the first utterance error aborts
// the point.
PointOutcome decode_corpus(const Corpus& corpus, const LogProbSource& source,
                           const DecoderContext& ctx, const DecodeConfig& cfg,
                           std::size_t jobs) {
  const std::size_t count = corpus.utterances.size();
  std::vector<ErrorBreakdown> words(count);
  std::vector<ErrorBreakdown> chars(count);
  PointOutcome out;
  out.best_scores.resize(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    const auto ranked =
        beam_search_decode(source(i), ctx.vocab, ctx.lm, cfg);
    const std::string text =
        ranked.empty() ? std::string() : render_text(ranked.front().transcript,
                                                     ctx.vocab);
    out.best_scores[i] = ranked.empty() ? kLogZero : ranked.front().score;
    words[i] = wer(corpus.utterances[i].reference, text);
    chars[i] = cer(corpus.utterances[i].reference, text);
  });
  for (std::size_t i = 0; i < count; ++i) {
    out.words += words[i];
    out.chars += chars[i];
  }
  return out;
}

double elapsed_ms(Clock::time_point start) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      Clock::now() - start)
                      .count();
  // A measurement of exactly zero would mean a broken clock, not free work.
  return std::max(static_cast<double>(ns) / 1e6, 1e-6);
}

SweepRow make_row(std::vector<std::pair<std::string, double>> params,
                  PointOutcome outcome, double ms) {
  SweepRow row;
  row.params = std::move(params);
  row.wer = outcome.words.rate();
  row.cer = outcome.chars.rate();
  row.wall_clock_ms = ms;
  row.best_scores = std::move(outcome.best_scores);
  return row;
}

void check_corpus(const Corpus& corpus) {
  if (corpus.utterances.empty()) throw ConfigError("corpus has no utterances");
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string format_rate(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

std::vector<double> linear_grid(double first, double last, double step) {
  if (!(step > 0.0) || last < first) throw ConfigError("invalid grid range");
  const auto n = static_cast<std::size_t>(std::llround((last - first) / step));
  std::vector<double> values;
  values.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double v = first + static_cast<double>(i) * step;
    values.push_back(std::round(v * 1e9) / 1e9);
  }
  return values;
}

void write_sweep_csv(const SweepResult& result, std::ostream& sink) {
  if (result.rows.empty()) {
    sink << "wer,cer,wall_clock_ms\n";
    return;
  }
  const auto& first = result.rows.front();
  for (const auto& [name, value] : first.params) sink << name << ',';
  if (first.objective) sink << "objective,";
  sink << "wer,cer,wall_clock_ms\n";
  for (const auto& row : result.rows) {
    for (const auto& [name, value] : row.params) {
      sink << format_value(value) << ',';
    }
    if (first.objective) sink << format_rate(row.objective) << ',';
    char ms[32];
    std::snprintf(ms, sizeof(ms), "%.3f", row.wall_clock_ms);
    sink << format_rate(row.wer) << ',' << format_rate(row.cer) << ',' << ms
         << '\n';
  }
}

GridSpec GridSpec::defaults(std::size_t num_layers) {
  GridSpec g;
  g.beta_values = linear_grid(0.0, 1.0, 0.05);
  for (std::size_t m = 1; m <= num_layers; ++m) g.m_values.push_back(m);
  return g;
}

void GridSpec::validate(std::size_t num_layers) const {
  if (beta_values.empty() || m_values.empty()) {
    throw ConfigError("grid lists must be non-empty");
  }
  for (std::size_t i = 0; i < beta_values.size(); ++i) {
    if (!(beta_values[i] >= 0.0 && beta_values[i] <= 1.0)) {
      throw ConfigError("beta must be in [0,1]");
    }
    if (i > 0 && !(beta_values[i] > beta_values[i - 1])) {
      throw ConfigError("beta values must be ascending");
    }
  }
  for (std::size_t m : m_values) {
    if (m < 1 || m > num_layers) {
      throw ConfigError("M values must be in [1, " + std::to_string(num_layers) +
                        "]");
    }
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  decode.validate();
}

GridSearchResult grid_search(const Corpus& dev, const DecoderContext& ctx,
                             const GridSpec& grid, std::size_t jobs) {
  check_corpus(dev);
  grid.validate(dev.utterances.front().stack.num_layers());
  const std::size_t count = dev.utterances.size();

  std::vector<std::optional<LogitFrameSeq>> base(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    base[i] = baseline_logits(dev.utterances[i].stack, ctx.head);
  });

  GridSearchResult result;
  bool have_best = false;
  double best_wer = 0.0;
  for (std::size_t m : grid.m_values) {
    std::vector<std::optional<LogitFrameSeq>> agg(count);
    std::string agg_error;
    try {
      parallel_for(count, jobs, [&](std::size_t i) {
        agg[i] = aggregate_logits(dev.utterances[i].stack, ctx.head, m);
      });
    } catch (const std::exception& e) {
      agg_error = e.what();
    }
    for (double beta : grid.beta_values) {
      std::vector<std::pair<std::string, double>> params{
          {"beta", beta}, {"layers", static_cast<double>(m)}};
      if (!agg_error.empty()) {
        result.sweep.failures.push_back({params, agg_error});
        continue;
      }
      const LogProbSource source = [&](std::size_t i) {
        if (beta == 1.0) return log_softmax(*base[i], grid.temperature);
        return log_softmax(interpolate(*base[i], *agg[i], beta),
                           grid.temperature);
      };
      try {
        const auto start = Clock::now();
        auto outcome = decode_corpus(dev, source, ctx, grid.decode, jobs);
        const double ms = elapsed_ms(start);
        const double point_wer = outcome.words.rate();
        result.sweep.rows.push_back(make_row(params, std::move(outcome), ms));
        const bool better =
            !have_best || point_wer < best_wer ||
            (point_wer == best_wer &&
             (beta > result.best_beta ||
              (beta == result.best_beta && m < result.best_m)));
        if (better) {
          have_best = true;
          best_wer = point_wer;
          result.best_beta = beta;
          result.best_m = m;
        }
      } catch (const std::exception& e) {
        result.sweep.failures.push_back({params, e.what()});
      }
    }
  }
  if (!have_best) throw ConfigError("every grid point failed");
  return result;
}

std::vector<double> default_lm_weight_grid() { return linear_grid(0.0, 3.0, 0.25); }
std::vector<double> default_word_score_grid() {
  return linear_grid(-2.0, 2.0, 0.5);
}

LmGridResult lm_weight_search(const Corpus& dev, const DecoderContext& ctx,
                              const AggregationConfig& agg,
                              const DecodeConfig& decode,
                              const std::vector<double>& lm_weights,
                              const std::vector<double>& word_scores,
                              std::size_t jobs) {
  check_corpus(dev);
  if (lm_weights.empty() || word_scores.empty()) {
    throw ConfigError("grid lists must be non-empty");
  }
  const std::size_t count = dev.utterances.size();
  std::vector<std::optional<LogitFrameSeq>> logprobs(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    logprobs[i] = pipeline_log_probs(dev.utterances[i].stack, ctx.head, agg);
  });
  const LogProbSource source = [&](std::size_t i) { return *logprobs[i]; };

  LmGridResult result;
  bool have_best = false;
  double best_wer = 0.0;
  for (double a1 : lm_weights) {
    for (double a2 : word_scores) {
      std::vector<std::pair<std::string, double>> params{{"lm_weight", a1},
                                                         {"word_score", a2}};
      DecodeConfig cfg = decode;
      cfg.lm_weight = a1;
      cfg.word_score = a2;
      try {
        cfg.validate();
        const auto start = Clock::now();
        auto outcome = decode_corpus(dev, source, ctx, cfg, jobs);
        const double ms = elapsed_ms(start);
        const double point_wer = outcome.words.rate();
        result.sweep.rows.push_back(make_row(params, std::move(outcome), ms));
        if (!have_best || point_wer < best_wer) {
          have_best = true;
          best_wer = point_wer;
          result.best_lm_weight = a1;
          result.best_word_score = a2;
        }
      } catch (const std::exception& e) {
        result.sweep.failures.push_back({params, e.what()});
      }
    }
  }
  if (!have_best) throw ConfigError("every grid point failed");
  return result;
}

SweepResult beam_width_sweep(const Corpus& corpus, const DecoderContext& ctx,
                             const AggregationConfig& agg,
                             const DecodeConfig& decode,
                             const std::vector<std::size_t>& widths,
                             std::size_t jobs) {
  check_corpus(corpus);
  if (widths.empty()) throw ConfigError("no beam widths given");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1) throw ConfigError("beam widths must be >= 1");
    if (i > 0 && widths[i] <= widths[i - 1]) {
      throw ConfigError("beam widths must be ascending");
    }
  }
  const std::size_t count = corpus.utterances.size();
  std::vector<std::optional<LogitFrameSeq>> logprobs(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    logprobs[i] = pipeline_log_probs(corpus.utterances[i].stack, ctx.head, agg);
  });
  const LogProbSource source = [&](std::size_t i) { return *logprobs[i]; };

  SweepResult sweep;
  for (std::size_t width : widths) {
    std::vector<std::pair<std::string, double>> params{
        {"beam_width", static_cast<double>(width)}};
    DecodeConfig cfg = decode;
    cfg.beam_width = width;
    try {
      const auto start = Clock::now();
      auto outcome = decode_corpus(corpus, source, ctx, cfg, jobs);
      sweep.rows.push_back(make_row(params, std::move(outcome), elapsed_ms(start)));
    } catch (const std::exception& e) {
      sweep.failures.push_back({params, e.what()});
    }
  }
  return sweep;
}

std::vector<double> default_temperature_grid() {
  return linear_grid(0.5, 5.0, 0.1);
}

TemperatureResult calibrate_temperature(const Corpus& dev,
                                        const DecoderContext& ctx,
                                        const AggregationConfig& agg,
                                        const DecodeConfig& decode,
                                        const std::vector<double>& t_grid,
                                        CalibrationObjective objective,
                                        std::size_t jobs) {
  check_corpus(dev);
  if (t_grid.empty()) throw ConfigError("temperature grid is empty");
  for (double t : t_grid) {
    if (!(t > 0.0)) throw ConfigError("temperatures must be positive");
  }
  const std::size_t count = dev.utterances.size();
  std::vector<std::optional<LogitFrameSeq>> logits(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    logits[i] = combined_logits(dev.utterances[i].stack, ctx.head, agg);
  });

  TemperatureResult result;
  bool have_best = false;
  double best_objective = 0.0;
  for (double temperature : t_grid) {
    std::vector<std::pair<std::string, double>> params{
        {"temperature", temperature}};
    const LogProbSource source = [&](std::size_t i) {
      return log_softmax(*logits[i], temperature);
    };
    try {
      const auto start = Clock::now();
      SweepRow row;
      double value = 0.0;
      if (objective == CalibrationObjective::kWer) {
        auto outcome = decode_corpus(dev, source, ctx, decode, jobs);
        value = outcome.words.rate();
        row = make_row(params, std::move(outcome), elapsed_ms(start));
      } else {
        std::vector<double> nll(count);
        parallel_for(count, jobs, [&](std::size_t i) {
          const auto target = encode_text(dev.utterances[i].reference, ctx.vocab);
          nll[i] = -ctc_forward(source(i), target, ctx.vocab.blank_index());
        });
        for (double v : nll) value += v;
        value /= static_cast<double>(count);
        row.params = params;
        row.wall_clock_ms = elapsed_ms(start);
      }
      row.objective = value;
      result.sweep.rows.push_back(std::move(row));
      const auto distance = [](double t) { return std::abs(t - 1.0); };
      const bool better =
          !have_best || value < best_objective ||
          (value == best_objective &&
           (distance(temperature) < distance(result.best_temperature) ||
            (distance(temperature) == distance(result.best_temperature) &&
             temperature < result.best_temperature)));
      if (better) {
        have_best = true;
        best_objective = value;
        result.best_temperature = temperature;
      }
    } catch (const std::exception& e) {
      result.sweep.failures.push_back({params, e.what()});
    }
  }
  if (!have_best) throw ConfigError("every temperature failed");
  return result;
}

}  // namespace ctcrelax
