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

#include "ctcrelax/ctc.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "ctcrelax/errors.hpp"
#include "ctcrelax/log_math.hpp"

namespace ctcrelax {

Transcript collapse(std::span<const TokenId> frames, std::size_t blank) {
  Transcript out;
  TokenId prev = -1;
  for (TokenId a : frames) {
    if (a != prev && a != static_cast<TokenId>(blank)) out.tokens.push_back(a);
    prev = a;
  }
  return out;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

Alignment best_path(const LogitFrameSeq& scores) {
  Alignment a;
  a.frames.reserve(scores.num_frames());
  for (std::size_t t = 0; t < scores.num_frames(); ++t) {
    a.frames.push_back(static_cast<TokenId>(argmax(scores.row(t))));
  }
  return a;
}

Transcript greedy_decode(const LogitFrameSeq& logprobs, std::size_t blank) {
  return collapse(best_path(logprobs), blank);
}

double ctc_forward(const LogitFrameSeq& logprobs, const Transcript& target,
                   std::size_t blank) {
  const std::size_t num_frames = logprobs.num_frames();
  const std::size_t label_len = target.tokens.size();
  for (TokenId tok : target.tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= logprobs.vocab_size() ||
        static_cast<std::size_t>(tok) == blank) {
      throw ValueError("target contains an invalid or blank token");
    }
  }

  // Extended label: blank, y1, blank, y2, ..., yL, blank.
  const std::size_t ext_len = 2 * label_len + 1;
  auto ext = [&](std::size_t s) -> std::size_t {
    return s % 2 == 0 ? blank : static_cast<std::size_t>(target.tokens[s / 2]);
  };

  std::vector<double> alpha(ext_len, kLogZero);
  std::vector<double> next(ext_len, kLogZero);
  alpha[0] = logprobs.at(0, blank);
  if (ext_len > 1) alpha[1] = logprobs.at(0, ext(1));

  for (std::size_t t = 1; t < num_frames; ++t) {
    for (std::size_t s = 0; s < ext_len; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = log_add(acc, alpha[s - 1]);
      if (s >= 2 && s % 2 == 1 && ext(s) != ext(s - 2)) {
        acc = log_add(acc, alpha[s - 2]);
      }
      next[s] = acc == kLogZero ? kLogZero : acc + logprobs.at(t, ext(s));
    }
    std::swap(alpha, next);
  }

  double total = alpha[ext_len - 1];
  if (ext_len >= 2) total = log_add(total, alpha[ext_len - 2]);
  return total;
}

double ctc_brute_force(const LogitFrameSeq& logprobs, const Transcript& target,
                       std::size_t blank) {
  const std::size_t num_frames = logprobs.num_frames();
  const std::size_t num_classes = logprobs.vocab_size();
  if (std::pow(static_cast<double>(num_classes),
               static_cast<double>(num_frames)) > kBruteForceLimit) {
    throw SizeError("brute-force CTC instance too large: C^T exceeds 1e7");
  }
  std::vector<TokenId> frames(num_frames, 0);
  double total = kLogZero;
  while (true) {
    if (collapse(frames, blank) == target) {
      double lp = 0.0;
      for (std::size_t t = 0; t < num_frames; ++t) {
        lp += logprobs.at(t, static_cast<std::size_t>(frames[t]));
      }
      total = log_add(total, lp);
    }
    // Odometer increment over [0, C)^T.
    std::size_t pos = 0;
    while (pos < num_frames &&
           ++frames[pos] == static_cast<TokenId>(num_classes)) {
      frames[pos] = 0;
      ++pos;
    }
    if (pos == num_frames) break;
  }
  return total;
}

std::vector<std::string> transcript_words(const Transcript& t,
                                          const Vocabulary& vocab) {
  std::vector<std::string> words;
  std::string current;
  for (TokenId tok : t.tokens) {
    if (static_cast<std::size_t>(tok) == vocab.separator_index()) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current += vocab.token(static_cast<std::size_t>(tok));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string render_text(const Transcript& t, const Vocabulary& vocab) {
  std::string out;
  for (const auto& w : transcript_words(t, vocab)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Transcript encode_text(std::string_view text, const Vocabulary& vocab) {
  Transcript out;
  std::istringstream words{std::string(text)};
  std::string word;
  std::size_t longest = 0;
  for (const auto& tok : vocab.tokens()) longest = std::max(longest, tok.size());

  auto match = [&](std::string_view piece) -> std::size_t {
    std::size_t id = vocab.find(piece);
    if (id != vocab.size() || piece.size() != 1) return id;
    const unsigned char ch = static_cast<unsigned char>(piece[0]);
    const char flipped = std::islower(ch) ? static_cast<char>(std::toupper(ch))
                                          : static_cast<char>(std::tolower(ch));
    return vocab.find(std::string_view(&flipped, 1));
  };

  bool first = true;
  while (words >> word) {
    if (!first) out.tokens.push_back(static_cast<TokenId>(vocab.separator_index()));
    first = false;
    std::size_t pos = 0;
    while (pos < word.size()) {
      std::size_t found = vocab.size();
      std::size_t len = std::min(longest, word.size() - pos);
      for (; len > 0; --len) {
        found = match(std::string_view(word).substr(pos, len));
        if (found != vocab.size() && found != vocab.blank_index() &&
            found != vocab.separator_index()) {
          break;
        }
        found = vocab.size();
      }
      if (found == vocab.size()) {
        throw ValueError("cannot encode '" + word.substr(pos, 1) +
                         "' with the vocabulary");
      }
      out.tokens.push_back(static_cast<TokenId>(found));
      pos += len;
    }
  }
  return out;
}

}  // namespace ctcrelax
