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

#include "ctcrelax/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctcrelax/beam_decoder.hpp"
#include "ctcrelax/confidence.hpp"
#include "ctcrelax/ctc.hpp"
#include "ctcrelax/errors.hpp"
#include "ctcrelax/metrics.hpp"
#include "ctcrelax/ngram_lm.hpp"
#include "ctcrelax/parallel.hpp"
#include "ctcrelax/presets.hpp"
#include "ctcrelax/tensor_io.hpp"
#include "ctcrelax/tuner.hpp"

namespace ctcrelax {
namespace {

constexpr const char* kJobsEnv = "CTCRELAX_JOBS";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  // inputs
  std::string stack;
  std::string manifest;
  std::string head;
  std::string vocab;
  std::string lm;
  std::string preset;
  // aggregation
  double beta = 1.0;
  std::size_t layers = 1;
  double temp = 1.0;
  // decoding
  std::size_t beam = 100;
  double lm_weight = 0.5;
  double word_score = 0.0;
  bool no_prune = false;
  // run
  std::size_t jobs = 0;
  std::string out;
  // subcommand specific
  std::string target = "aggregation";
  std::vector<double> betas;
  std::vector<std::size_t> m_values;
  std::vector<double> lm_weights;
  std::vector<double> word_scores;
  std::vector<std::size_t> widths{1, 10, 50, 100, 400, 1500};
  std::vector<double> temps;
  std::string objective = "wer";
};

struct Provenance {
  std::map<std::string, std::string> source;  // flag name -> origin
};

struct Loaded {
  std::optional<ProjectionHead> head;
  std::optional<Vocabulary> vocab;
  std::optional<NGramModel> lm;
};

bool given(const CLI::App* sub, const std::string& flag) {
  return sub->count(flag) > 0;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

void add_model_flags(CLI::App* sub, Options& o, bool with_vocab) {
  sub->add_option("--head", o.head, "projection head (.sslp)")->required();
  if (with_vocab) {
    sub->add_option("--vocab", o.vocab, "token list (.vocab)")->required();
  }
}

void add_pipeline_flags(CLI::App* sub, Options& o) {
  add_model_flags(sub, o, true);
  sub->add_option("--lm", o.lm, "ARPA language model");
  sub->add_option("--preset", o.preset,
                  "tuned beta/M pair, e.g. w2v-base-960h");
  sub->add_option("--beta", o.beta, "weight of the top-layer logits [0,1]");
  sub->add_option("--layers", o.layers, "number of aggregated top layers (M)");
  sub->add_option("--temp", o.temp, "softmax temperature");
  sub->add_option("--beam", o.beam, "beam width");
  sub->add_option("--lm-weight", o.lm_weight, "LM weight");
  sub->add_option("--word-score", o.word_score, "per-word score");
  sub->add_flag("--no-prune", o.no_prune, "disable token and beam pruning");
}

void add_run_flags(CLI::App* sub, Options& o) {
  sub->add_option("--jobs", o.jobs,
                  "utterance-level parallelism (env CTCRELAX_JOBS)");
  sub->add_option("--out", o.out, "output file");
}

// Applies preset / env fallbacks, validates ranges, and records where each
// effective parameter came from.
Provenance resolve(const CLI::App* sub, Options& o) {
  Provenance p;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    p.source[name] = opt->count() > 0 ? "flag" : "default";
  }

  if (!o.preset.empty()) {
    const AggregationPreset* preset = find_preset(o.preset);
    if (!preset) throw UsageError("unknown preset '" + o.preset + "'");
    if (!given(sub, "--beta")) {
      o.beta = preset->beta;
      p.source["beta"] = "preset";
    }
    if (!given(sub, "--layers")) {
      o.layers = preset->num_aggregated_layers;
      p.source["layers"] = "preset";
    }
  }

  if (p.source.contains("jobs") && !given(sub, "--jobs")) {
    if (const char* env = std::getenv(kJobsEnv); env && *env) {
      std::size_t parsed = 0;
      try {
        std::size_t pos = 0;
        parsed = std::stoul(env, &pos);
        if (pos != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw UsageError(std::string(kJobsEnv) + " must be a positive integer");
      }
      o.jobs = parsed;
      p.source["jobs"] = "env";
    } else {
      o.jobs = default_jobs();
    }
  }
  if (p.source.contains("jobs") && o.jobs < 1) {
    throw UsageError("jobs must be >= 1");
  }

  if (p.source.contains("beta") && !(o.beta >= 0.0 && o.beta <= 1.0)) {
    throw UsageError("beta must be in [0,1]");
  }
  if (p.source.contains("layers") && o.layers < 1) {
    throw UsageError("layers must be >= 1");
  }
  if (p.source.contains("temp") && !(o.temp > 0.0)) {
    throw UsageError("temp must be positive");
  }
  if (p.source.contains("beam") && o.beam < 1) {
    throw UsageError("beam must be >= 1");
  }
  for (double b : o.betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw UsageError("beta must be in [0,1]");
  }
  for (double t : o.temps) {
    if (!(t > 0.0)) throw UsageError("temperatures must be positive");
  }
  for (std::size_t i = 0; i < o.widths.size(); ++i) {
    if (o.widths[i] < 1 || (i > 0 && o.widths[i] <= o.widths[i - 1])) {
      throw UsageError("widths must be >= 1 and strictly ascending");
    }
  }
  if (p.source.contains("objective") && o.objective != "wer" &&
      o.objective != "nll") {
    throw UsageError("objective must be 'wer' or 'nll'");
  }
  if (p.source.contains("target") && o.target != "aggregation" &&
      o.target != "lm") {
    throw UsageError("target must be 'aggregation' or 'lm'");
  }
  return p;
}

nlohmann::ordered_json param_value(const Options& o, const std::string& name) {
  static const std::map<std::string,
                        std::function<nlohmann::ordered_json(const Options&)>>
      kValues{
          {"stack", [](const Options& x) { return x.stack; }},
          {"manifest", [](const Options& x) { return x.manifest; }},
          {"head", [](const Options& x) { return x.head; }},
          {"vocab", [](const Options& x) { return x.vocab; }},
          {"lm", [](const Options& x) { return x.lm; }},
          {"preset", [](const Options& x) { return x.preset; }},
          {"beta", [](const Options& x) { return x.beta; }},
          {"layers", [](const Options& x) { return x.layers; }},
          {"temp", [](const Options& x) { return x.temp; }},
          {"beam", [](const Options& x) { return x.beam; }},
          {"lm-weight", [](const Options& x) { return x.lm_weight; }},
          {"word-score", [](const Options& x) { return x.word_score; }},
          {"no-prune", [](const Options& x) { return x.no_prune; }},
          {"jobs", [](const Options& x) { return x.jobs; }},
          {"out", [](const Options& x) { return x.out; }},
          {"target", [](const Options& x) { return x.target; }},
          {"betas", [](const Options& x) { return x.betas; }},
          {"m-values", [](const Options& x) { return x.m_values; }},
          {"lm-weights", [](const Options& x) { return x.lm_weights; }},
          {"word-scores", [](const Options& x) { return x.word_scores; }},
          {"widths", [](const Options& x) { return x.widths; }},
          {"temps", [](const Options& x) { return x.temps; }},
          {"objective", [](const Options& x) { return x.objective; }},
      };
  const auto it = kValues.find(name);
  return it == kValues.end() ? nlohmann::ordered_json() : it->second(o);
}

void emit_header(const CLI::App* sub, const Options& o, const Provenance& p,
                 std::ostream& err) {
  nlohmann::ordered_json header;
  header["subcommand"] = sub->get_name();
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    params[name] = {{"value", param_value(o, name)},
                    {"source", p.source.at(name)}};
  }
  header["parameters"] = params;
  err << "# effective parameters: " << header.dump() << '\n';
}

AggregationConfig aggregation_of(const Options& o) {
  return AggregationConfig{o.layers, o.beta, o.temp};
}

DecodeConfig decode_of(const Options& o) {
  DecodeConfig cfg;
  cfg.beam_width = o.beam;
  cfg.lm_weight = o.lm_weight;
  cfg.word_score = o.word_score;
  cfg.prune = !o.no_prune;
  return cfg;
}

Loaded load_models(const Options& o, bool with_vocab) {
  Loaded m;
  m.head = load_projection_head(o.head);
  if (with_vocab) {
    m.vocab = load_vocabulary(o.vocab);
    if (m.vocab->size() != m.head->vocab_size()) {
      throw ShapeError("vocabulary has " + std::to_string(m.vocab->size()) +
                       " tokens but the head projects to " +
                       std::to_string(m.head->vocab_size()));
    }
  }
  if (!o.lm.empty()) m.lm = load_arpa(o.lm);
  return m;
}

EvalManifest load_nonempty_manifest(const std::string& path) {
  EvalManifest manifest = load_manifest(path);
  if (manifest.entries.empty()) {
    throw UsageError("manifest '" + path + "' has no entries");
  }
  return manifest;
}

Corpus load_dev(const Options& o, std::ostream& err) {
  Corpus corpus = load_corpus(load_nonempty_manifest(o.manifest), o.jobs);
  for (const auto& f : corpus.failures) {
    err << "warning: skipping " << f.utterance_id << ": " << f.reason << '\n';
  }
  if (corpus.utterances.empty()) throw IoError("no readable utterances");
  return corpus;
}

// Writes through `fn` to --out when given, else to `out`.
void write_output(const Options& o, std::ostream& out,
                  const std::function<void(std::ostream&)>& fn) {
  if (o.out.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot create " + o.out);
  fn(file);
  if (!file) throw IoError("write failed: " + o.out);
}

int cmd_decode(const Options& o, std::ostream& out) {
  const Loaded m = load_models(o, true);
  const LayerStack stack = load_layer_stack(o.stack);
  const DecoderContext ctx{*m.head, *m.vocab, m.lm ? &*m.lm : nullptr};
  const auto ranked =
      decode_utterance(stack, ctx, aggregation_of(o), decode_of(o));
  const std::string best =
      ranked.empty() ? std::string() : render_text(ranked.front().transcript,
                                                   *m.vocab);
  out << best << '\n';
  if (!o.out.empty()) {
    nlohmann::ordered_json doc;
    doc["stack"] = o.stack;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& r = ranked[i];
      list.push_back({{"rank", i + 1},
                      {"text", render_text(r.transcript, *m.vocab)},
                      {"score", r.score},
                      {"acoustic_log_prob", r.acoustic_log_prob},
                      {"lm_log_prob", r.lm_log_prob},
                      {"word_count", r.word_count}});
    }
    doc["hypotheses"] = list;
    std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot create " + o.out);
    file << doc.dump(2) << '\n';
    if (!file) throw IoError("write failed: " + o.out);
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded m = load_models(o, true);
  const EvalManifest manifest = load_nonempty_manifest(o.manifest);
  const DecoderContext ctx{*m.head, *m.vocab, m.lm ? &*m.lm : nullptr};
  const AggregationConfig agg = aggregation_of(o);
  const DecodeConfig cfg = decode_of(o);
  const Transcriber transcribe = [&](const LayerStack& stack) {
    const auto ranked = decode_utterance(stack, ctx, agg, cfg);
    if (ranked.empty()) return DecodedText{};
    return DecodedText{render_text(ranked.front().transcript, *m.vocab),
                       ranked.front().score};
  };
  const CorpusReport report = evaluate_manifest(manifest, transcribe, o.jobs);
  for (const auto& f : report.failures) {
    err << "failed: " << f.utterance_id << ": " << f.reason << '\n';
  }
  write_output(o, out, [&](std::ostream& s) { write_report_csv(report, s); });
  if (!o.out.empty()) {
    out << "WER " << fmt(report.wer()) << " CER " << fmt(report.cer()) << " ("
        << report.utterances.size() << " scored, " << report.failures.size()
        << " failed)\n";
  }
  return kExitOk;
}

int cmd_tune(const Options& o, const CLI::App* sub, std::ostream& out,
             std::ostream& err) {
  const Loaded m = load_models(o, true);
  const Corpus dev = load_dev(o, err);
  const DecoderContext ctx{*m.head, *m.vocab, m.lm ? &*m.lm : nullptr};

  if (o.target == "lm") {
    const auto result = lm_weight_search(
        dev, ctx, aggregation_of(o), decode_of(o),
        o.lm_weights.empty() ? default_lm_weight_grid() : o.lm_weights,
        o.word_scores.empty() ? default_word_score_grid() : o.word_scores,
        o.jobs);
    write_output(o, out,
                 [&](std::ostream& s) { write_sweep_csv(result.sweep, s); });
    for (const auto& f : result.sweep.failures) err << "point failed: " << f.reason << '\n';
    if (!o.out.empty()) {
      out << "best lm_weight=" << fmt(result.best_lm_weight)
          << " word_score=" << fmt(result.best_word_score) << '\n';
    }
    return kExitOk;
  }

  GridSpec grid = GridSpec::defaults(dev.utterances.front().stack.num_layers());
  if (given(sub, "--betas")) grid.beta_values = o.betas;
  if (given(sub, "--m-values")) grid.m_values = o.m_values;
  grid.decode = decode_of(o);
  grid.temperature = o.temp;
  const auto result = grid_search(dev, ctx, grid, o.jobs);
  for (const auto& f : result.sweep.failures) err << "point failed: " << f.reason << '\n';
  write_output(o, out, [&](std::ostream& s) { write_sweep_csv(result.sweep, s); });
  if (!o.out.empty()) {
    out << "best beta=" << fmt(result.best_beta) << " M=" << result.best_m
        << '\n';
  }
  return kExitOk;
}

int cmd_sweep_beam(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded m = load_models(o, true);
  const Corpus corpus = load_dev(o, err);
  const DecoderContext ctx{*m.head, *m.vocab, m.lm ? &*m.lm : nullptr};
  const auto sweep = beam_width_sweep(corpus, ctx, aggregation_of(o),
                                      decode_of(o), o.widths, o.jobs);
  for (const auto& f : sweep.failures) err << "point failed: " << f.reason << '\n';
  write_output(o, out, [&](std::ostream& s) { write_sweep_csv(sweep, s); });
  return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
  const Loaded m = load_models(o, true);
  const Corpus dev = load_dev(o, err);
  const DecoderContext ctx{*m.head, *m.vocab, m.lm ? &*m.lm : nullptr};
  const auto result = calibrate_temperature(
      dev, ctx, aggregation_of(o), decode_of(o),
      o.temps.empty() ? default_temperature_grid() : o.temps,
      o.objective == "nll" ? CalibrationObjective::kNll
                           : CalibrationObjective::kWer,
      o.jobs);
  for (const auto& f : result.sweep.failures) err << "point failed: " << f.reason << '\n';
  write_output(o, out, [&](std::ostream& s) { write_sweep_csv(result.sweep, s); });
  if (!o.out.empty()) {
    out << "best temperature=" << fmt(result.best_temperature) << '\n';
  }
  return kExitOk;
}

int cmd_profile(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.stack.empty() == o.manifest.empty()) {
    throw UsageError("give exactly one of --stack or --manifest");
  }
  const ProjectionHead head = load_projection_head(o.head);
  LayerConfidenceProfile profile;
  if (!o.stack.empty()) {
    profile = layer_confidence_profile(load_layer_stack(o.stack), head);
  } else {
    const Corpus corpus = load_dev(o, err);
    std::vector<LayerConfidenceProfile> profiles(corpus.utterances.size());
    parallel_for(profiles.size(), o.jobs, [&](std::size_t i) {
      profiles[i] = layer_confidence_profile(corpus.utterances[i].stack, head);
    });
    profile = mean_profile(profiles);
  }
  write_output(o, out, [&](std::ostream& s) { write_profile_csv(profile, s); });
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"ctcrelax: layer-aggregated CTC decoding and evaluation",
               "ctcrelax"};
  app.require_subcommand(1);
  Options o;

  auto* decode = app.add_subcommand("decode", "decode one stack file");
  decode->add_option("--stack", o.stack, "hidden states (.ssla)")->required();
  add_pipeline_flags(decode, o);
  add_run_flags(decode, o);

  auto* evaluate = app.add_subcommand("evaluate", "WER/CER over a manifest");
  evaluate->add_option("--manifest", o.manifest)->required();
  add_pipeline_flags(evaluate, o);
  add_run_flags(evaluate, o);

  auto* tune = app.add_subcommand("tune", "grid search on a dev manifest");
  tune->add_option("--manifest", o.manifest)->required();
  add_pipeline_flags(tune, o);
  add_run_flags(tune, o);
  tune->add_option("--target", o.target, "aggregation (beta, M) or lm");
  tune->add_option("--betas", o.betas, "beta grid")->delimiter(',');
  tune->add_option("--m-values", o.m_values, "M grid")->delimiter(',');
  tune->add_option("--lm-weights", o.lm_weights, "LM weight grid")
      ->delimiter(',');
  tune->add_option("--word-scores", o.word_scores, "word score grid")
      ->delimiter(',');

  auto* sweep = app.add_subcommand("sweep-beam", "beam width sweep");
  sweep->add_option("--manifest", o.manifest)->required();
  add_pipeline_flags(sweep, o);
  add_run_flags(sweep, o);
  sweep->add_option("--widths", o.widths, "ascending beam widths")
      ->delimiter(',');

  auto* calibrate =
      app.add_subcommand("calibrate-temp", "temperature calibration");
  calibrate->add_option("--manifest", o.manifest)->required();
  add_pipeline_flags(calibrate, o);
  add_run_flags(calibrate, o);
  calibrate->add_option("--temps", o.temps, "temperature grid")
      ->delimiter(',');
  calibrate->add_option("--objective", o.objective, "wer or nll");

  auto* profile = app.add_subcommand("profile-confidence",
                                     "per-layer confidence profile (CSV)");
  profile->add_option("--stack", o.stack, "hidden states (.ssla)");
  profile->add_option("--manifest", o.manifest);
  add_model_flags(profile, o, false);
  add_run_flags(profile, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const Provenance provenance = resolve(sub, o);
    emit_header(sub, o, provenance, err);
    if (sub == decode) return cmd_decode(o, out);
    if (sub == evaluate) return cmd_evaluate(o, out, err);
    if (sub == tune) return cmd_tune(o, sub, out, err);
    if (sub == sweep) return cmd_sweep_beam(o, out, err);
    if (sub == calibrate) return cmd_calibrate(o, out, err);
    return cmd_profile(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ctcrelax
