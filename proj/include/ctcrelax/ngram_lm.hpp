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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ctcrelax {

inline constexpr std::size_t kMaxNgramOrder = 5;

using WordId = std::int32_t;

// Scoring context: the last (at most max_order - 1) words, oldest first.
struct LmState {
  std::array<WordId, kMaxNgramOrder - 1> words{};
  std::uint8_t size = 0;

  std::span<const WordId> context() const { return {words.data(), size}; }
  friend bool operator==(const LmState&, const LmState&) = default;
};

struct NgramEntry {
  double log10_prob = 0.0;
  double log10_backoff = 0.0;  // 0 when the file gives none
};

// Backoff n-gram model read from an ARPA file. Values stay in log10 as
// stored; conversion to natural log happens in the decoder.
class NGramModel {
 public:
  static constexpr std::string_view kSentenceStart = "<s>";
  static constexpr std::string_view kSentenceEnd = "</s>";
  static constexpr std::string_view kUnknown = "<unk>";

  std::size_t max_order() const { return tables_.size(); }
  std::size_t num_ngrams(std::size_t order) const;
  std::size_t vocab_size() const { return words_.size(); }
  const std::string& word(WordId id) const { return words_.at(id); }
  // Unigram id, or the <unk> id for out-of-vocabulary words.
  WordId word_id(std::string_view word) const;
  WordId unknown_id() const { return unk_; }

  // Stored entry for an exact n-gram, nullptr when absent.
  const NgramEntry* find(std::span<const WordId> ngram) const;

  // Context {"<s>"} (empty for a unigram model).
  LmState begin_sentence() const;

  // log10 P(word | state) with Katz backoff, plus the successor state.
  std::pair<double, LmState> score_word(const LmState& state,
                                        std::string_view word) const;
  std::pair<double, LmState> score_word(const LmState& state, WordId id) const;
  double score_end(const LmState& state) const;

  // Words scored from <s> through a final </s> transition.
  double score_sentence(std::span<const std::string> words) const;

  friend NGramModel parse_arpa(std::istream& source);
  friend void write_arpa(const NGramModel& model, std::ostream& sink);

 private:
  using Key = std::array<WordId, kMaxNgramOrder>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  using Table = std::unordered_map<Key, NgramEntry, KeyHash>;

  static Key make_key(std::span<const WordId> ngram);
  WordId intern(std::string_view word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  // tables_[k] holds the (k+1)-grams, in file order for serialization.
  std::vector<Table> tables_;
  std::vector<std::vector<Key>> order_;
  WordId unk_ = -1;
  WordId bos_ = -1;
  WordId eos_ = -1;
};

NGramModel parse_arpa(std::istream& source);
NGramModel load_arpa(const std::filesystem::path& path);
void write_arpa(const NGramModel& model, std::ostream& sink);

}  // namespace ctcrelax
