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

// CTC prefix beam search with word-level n-gram shallow fusion.
//
// A hypothesis is a collapsed prefix Y with acoustic log-masses split by
// whether the last frame emitted blank or not. Its search score is
//
//   log P_ctc(Y) + lm_weight * ln P_lm(words(Y)) + word_score * |words(Y)|
//
// where LM and word terms are charged when a separator completes a word.
// At the end every hypothesis is charged its trailing word and the </s>
// transition before ranking. The LM part is a pure function of the prefix,
// so it is cached per prefix-trie node and merging duplicate prefixes by
// log-sum-exp of the acoustic masses is exact.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ctcrelax/aggregation.hpp"
#include "ctcrelax/ctc.hpp"
#include "ctcrelax/ngram_lm.hpp"
#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax {

// Quantity used to rank live hypotheses when the beam is cut. Final
// ranking always uses the summed prefix mass.
enum class BeamRanking {
  // Best single alignment of the prefix. With beam_width 1 and no LM this
  // reproduces greedy decoding exactly.
  kBestPath,
  // Summed alignment mass of the prefix.
  kPrefixMass,
};

struct DecodeConfig {
  std::size_t beam_width = 100;
  double lm_weight = 0.0;   // multiplies natural-log LM probability
  double word_score = 0.0;  // added per word
  // Tokens whose frame log-prob is below best + threshold are not expanded.
  double token_prune_log_threshold = -5.0;
  // Hypotheses scoring below best + margin are dropped.
  double beam_prune_log_margin = -10.0;
  bool prune = true;
  BeamRanking ranking = BeamRanking::kBestPath;

  void validate() const;
};

struct ScoredTranscript {
  Transcript transcript;
  double score = 0.0;  // acoustic + lm_weight * lm + word_score * words
  double acoustic_log_prob = 0.0;
  double lm_log_prob = 0.0;  // natural log, including </s>
  std::size_t word_count = 0;
};

struct Hypothesis {
  std::int32_t node = 0;  // prefix-trie node
  double p_blank = 0.0;
  double p_non_blank = 0.0;
  double best_blank = 0.0;      // best single alignment ending in blank
  double best_non_blank = 0.0;  // ... ending in a label
  LmState lm_state;
  double lm_log_prob = 0.0;  // natural log over completed words
  std::size_t word_count = 0;
};

class PrefixBeamSearch {
 public:
  PrefixBeamSearch(const Vocabulary& vocab, const NGramModel* lm,
                   DecodeConfig cfg);

  // Consumes one frame of log-probabilities (length = vocab size).
  void advance(std::span<const double> logprobs);

  std::span<const Hypothesis> live() const { return beam_; }
  Transcript prefix(const Hypothesis& h) const { return prefix_of(h.node); }

  // Applies end-of-sentence scoring and returns up to beam_width results,
  // best first; ties go to the lexicographically smaller prefix.
  std::vector<ScoredTranscript> finish() const;

 private:
  struct Node {
    std::int32_t parent;
    TokenId token;
    LmState lm_state;
    double lm_log_prob;
    std::uint32_t word_count;
  };

  struct Candidate {
    std::uint64_t key;
    std::int32_t node;  // -1 until materialized
    std::int32_t parent;
    TokenId token;
    double p_blank;
    double p_non_blank;
    double best_blank;
    double best_non_blank;
    LmState lm_state;
    double lm_log_prob;
    std::uint32_t word_count;
    double rank;
  };

  static std::uint64_t pack(std::int32_t parent, TokenId token);
  std::uint64_t key_of(std::int32_t node) const;

  Transcript prefix_of(std::int32_t node) const;
  std::vector<TokenId> candidate_prefix(const Candidate& c) const;
  // Tokens of the unfinished word at the end of the prefix ending in `node`.
  std::string trailing_word(std::int32_t node) const;

  std::size_t slot_stay(const Hypothesis& h);
  std::size_t slot_extend(const Hypothesis& h, TokenId token);
  std::int32_t materialize(const Candidate& c);

  const Vocabulary& vocab_;
  const NGramModel* lm_;
  DecodeConfig cfg_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::int32_t> children_;
  std::vector<Hypothesis> beam_;
  std::vector<Candidate> candidates_;
  std::unordered_map<std::uint64_t, std::size_t> candidate_index_;
};

// Ranked transcripts for a T x C matrix of log-probabilities.
std::vector<ScoredTranscript> beam_search_decode(const LogitFrameSeq& logprobs,
                                                 const Vocabulary& vocab,
                                                 const NGramModel* lm,
                                                 const DecodeConfig& cfg);

// Models shared read-only by every utterance of a decoding run.
struct DecoderContext {
  const ProjectionHead& head;
  const Vocabulary& vocab;
  const NGramModel* lm = nullptr;
};

// Logits after aggregation, interpolation and temperature log-softmax.
LogitFrameSeq pipeline_log_probs(const LayerStack& stack,
                                 const ProjectionHead& head,
                                 const AggregationConfig& agg);

// Full pipeline: baseline and aggregated logits, interpolation, tempered
// log-softmax, beam search.
std::vector<ScoredTranscript> decode_utterance(const LayerStack& stack,
                                               const DecoderContext& ctx,
                                               const AggregationConfig& agg,
                                               const DecodeConfig& cfg);

}  // namespace ctcrelax
