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

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax {

struct ErrorBreakdown {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t ref_len = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  double rate() const {
    return ref_len == 0 ? 0.0
                        : static_cast<double>(errors()) /
                              static_cast<double>(ref_len);
  }
  ErrorBreakdown& operator+=(const ErrorBreakdown& o);
  friend bool operator==(const ErrorBreakdown&, const ErrorBreakdown&) = default;
};

// Levenshtein alignment with unit costs. Traceback runs from the end and
// prefers substitution/match, then insertion, then deletion.
// ConfigError when the reference is empty.
ErrorBreakdown align_errors(std::span<const std::string> reference,
                            std::span<const std::string> hypothesis);

// Lowercase, whitespace runs collapsed to one space, ends trimmed.
std::string normalize_text(std::string_view text);
std::vector<std::string> split_words(std::string_view text);

ErrorBreakdown wer(std::span<const std::string> reference,
                   std::span<const std::string> hypothesis);

// Text-level forms: both sides are normalized first. CER runs over UTF-8
// code points, spaces included.
ErrorBreakdown wer(std::string_view reference, std::string_view hypothesis);
ErrorBreakdown cer(std::string_view reference, std::string_view hypothesis);

struct UtteranceResult {
  std::string utterance_id;
  std::string hypothesis;
  double score = 0.0;  // decoder score of the 1-best
  ErrorBreakdown words;
  ErrorBreakdown chars;
};

struct UtteranceFailure {
  std::string utterance_id;
  std::string reason;
};

struct CorpusReport {
  std::vector<UtteranceResult> utterances;  // manifest order
  std::vector<UtteranceFailure> failures;
  ErrorBreakdown words;  // pooled over utterances
  ErrorBreakdown chars;

  double wer() const { return words.rate(); }
  double cer() const { return chars.rate(); }
};

// A loaded evaluation set; entries whose stack could not be read are kept
// as failures.
struct Utterance {
  std::string utterance_id;
  LayerStack stack;
  std::string reference;
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<UtteranceFailure> failures;
};

Corpus load_corpus(const EvalManifest& manifest, std::size_t jobs = 1);

struct DecodedText {
  std::string text;
  double score = 0.0;
};
using Transcriber = std::function<DecodedText(const LayerStack&)>;

// Decodes every utterance (in parallel when jobs > 1) and pools the error
// counts. A transcriber exception becomes a per-utterance failure.
CorpusReport evaluate_corpus(const Corpus& corpus, const Transcriber& decode,
                             std::size_t jobs = 1);
CorpusReport evaluate_manifest(const EvalManifest& manifest,
                               const Transcriber& decode, std::size_t jobs = 1);

// utt_id,wer,cer,subs,ins,dels,ref_len  (word-level counts), one row per
// scored utterance followed by a pooled "__corpus__" row.
void write_report_csv(const CorpusReport& report, std::ostream& sink);

}  // namespace ctcrelax
