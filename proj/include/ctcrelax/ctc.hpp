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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctcrelax/aggregation.hpp"
#include "ctcrelax/tensor_io.hpp"

namespace ctcrelax {

using TokenId = int;

// Frame-level token sequence (blanks included).
struct Alignment {
  std::vector<TokenId> frames;
};

// Collapsed label sequence: repeats merged, blanks removed.
struct Transcript {
  std::vector<TokenId> tokens;

  friend bool operator==(const Transcript&, const Transcript&) = default;
  friend auto operator<=>(const Transcript&, const Transcript&) = default;
};

Transcript collapse(std::span<const TokenId> frames, std::size_t blank);
inline Transcript collapse(const Alignment& a, std::size_t blank) {
  return collapse(a.frames, blank);
}

// Per-frame argmax (lowest index wins ties).
std::size_t argmax(std::span<const double> row);
Alignment best_path(const LogitFrameSeq& scores);
Transcript greedy_decode(const LogitFrameSeq& logprobs, std::size_t blank);

// log P(target | X), summed over every alignment that collapses to target.
// Returns kLogZero when the target cannot fit in the available frames.
double ctc_forward(const LogitFrameSeq& logprobs, const Transcript& target,
                   std::size_t blank);

// Same quantity by enumerating all C^T alignments. SizeError when C^T
// exceeds kBruteForceLimit.
inline constexpr double kBruteForceLimit = 1e7;
double ctc_brute_force(const LogitFrameSeq& logprobs, const Transcript& target,
                       std::size_t blank);

// Words of a transcript: maximal separator-free runs, empty runs dropped.
std::vector<std::string> transcript_words(const Transcript& t,
                                          const Vocabulary& vocab);
// Words joined by single spaces.
std::string render_text(const Transcript& t, const Vocabulary& vocab);

// Inverse of render_text for reference transcripts: whitespace-separated
// words become separator-delimited token runs. Each word is tokenized by
// longest match; a character missing from the vocabulary is retried in the
// opposite letter case before giving up with a ValueError.
Transcript encode_text(std::string_view text, const Vocabulary& vocab);

}  // namespace ctcrelax
