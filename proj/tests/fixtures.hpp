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

// Synthetic inputs shared by the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ctcrelax/aggregation.hpp"
#include "ctcrelax/beam_decoder.hpp"
#include "ctcrelax/ctc.hpp"
#include "ctcrelax/metrics.hpp"
#include "ctcrelax/ngram_lm.hpp"
#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax::testing {

// Six n-gram lines:
//   unigrams  <unk> -1.0 | <s> -99 bo -0.2 | </s> -0.6 | a -0.3 bo -0.1
//   bigrams   <s> a -0.2 | a </s> -0.4
std::string toy_arpa();

// Vocabulary "<blank>", "<sep>", then the given letters.
Vocabulary letter_vocab(const std::vector<std::string>& letters);

// Random T x C log-softmax rows; logits drawn uniformly from [-spread, spread].
LogitFrameSeq random_log_probs(std::mt19937_64& rng, std::size_t frames,
                               std::size_t classes, double spread = 3.0);

// Random bigram ARPA over the given words (+ <s>, </s>, <unk>) with
// normalized unigrams and a random subset of bigrams.
std::string random_bigram_arpa(std::mt19937_64& rng,
                               const std::vector<std::string>& words);

// A small synthetic speech corpus: layered hidden states that encode a
// reference transcript, with noise that shrinks toward the top layer and
// occasional top-layer-only character errors.
struct SyntheticCorpus {
  Vocabulary vocab;
  ProjectionHead head;
  std::string arpa;
  Corpus corpus;
};

struct SyntheticOptions {
  std::size_t num_utterances = 8;
  std::size_t num_layers = 6;
  std::size_t extra_dims = 2;
  std::uint64_t seed = 7;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& opts = {});

// Writes vocab, head, LM, stacks and a manifest under `dir`.
struct CorpusFiles {
  std::filesystem::path vocab;
  std::filesystem::path head;
  std::filesystem::path lm;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> stacks;
};
CorpusFiles write_corpus_files(const SyntheticCorpus& corpus,
                               const std::filesystem::path& dir);

// Every distinct collapsed string reachable in `frames` frames over
// `classes` tokens, in lexicographic order.
std::vector<Transcript> reachable_transcripts(std::size_t frames,
                                              std::size_t classes,
                                              std::size_t blank);

// Exhaustive decoding oracle: scores every reachable transcript with the
// forward probability plus word-level LM and word terms, returns the best
// (ties to the lexicographically smaller transcript).
ScoredTranscript exhaustive_decode(const LogitFrameSeq& logprobs,
                                   const Vocabulary& vocab,
                                   const NGramModel* lm, double lm_weight,
                                   double word_score);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Stack with one layer whose hidden states are the given logits, paired
// with an identity head, so the pipeline reproduces the logits exactly.
LayerStack stack_from_logits(const std::vector<std::vector<float>>& frames);
ProjectionHead identity_head(std::size_t dim);

}  // namespace ctcrelax::testing
