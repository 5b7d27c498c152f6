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

#include "ctcrelax/beam_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ctcrelax/errors.hpp"
#include "ctcrelax/log_math.hpp"

namespace ctcrelax {
namespace {

constexpr std::int32_t kRoot = 0;
constexpr std::uint64_t kRootKey = std::numeric_limits<std::uint64_t>::max();

double hyp_acoustic(double blank, double non_blank) {
  return log_add(blank, non_blank);
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ConfigError("beam width must be >= 1");
  if (!std::isfinite(lm_weight) || !std::isfinite(word_score)) {
    throw ConfigError("LM weight and word score must be finite");
  }
  if (!(token_prune_log_threshold <= 0.0) || !(beam_prune_log_margin <= 0.0)) {
    throw ConfigError("pruning thresholds must be <= 0");
  }
}

PrefixBeamSearch::PrefixBeamSearch(const Vocabulary& vocab,
                                   const NGramModel* lm, DecodeConfig cfg)
    : vocab_(vocab), lm_(lm), cfg_(cfg) {
  cfg_.validate();
  if (vocab_.size() == 0) throw ShapeError("empty vocabulary");
  const LmState start = lm_ ? lm_->begin_sentence() : LmState{};
  nodes_.push_back(Node{-1, -1, start, 0.0, 0});
  Hypothesis root;
  root.node = kRoot;
  root.p_blank = 0.0;
  root.p_non_blank = kLogZero;
  root.best_blank = 0.0;
  root.best_non_blank = kLogZero;
  root.lm_state = start;
  beam_.push_back(root);
}

std::uint64_t PrefixBeamSearch::pack(std::int32_t parent, TokenId token) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(parent)) << 32) |
         static_cast<std::uint32_t>(token);
}

std::uint64_t PrefixBeamSearch::key_of(std::int32_t node) const {
  if (node == kRoot) return kRootKey;
  return pack(nodes_[node].parent, nodes_[node].token);
}

Transcript PrefixBeamSearch::prefix_of(std::int32_t node) const {
  Transcript t;
  for (std::int32_t n = node; n != kRoot; n = nodes_[n].parent) {
    t.tokens.push_back(nodes_[n].token);
  }
  std::ranges::reverse(t.tokens);
  return t;
}

std::vector<TokenId> PrefixBeamSearch::candidate_prefix(
    const Candidate& c) const {
  if (c.node >= 0) return prefix_of(c.node).tokens;
  auto tokens = prefix_of(c.parent).tokens;
  tokens.push_back(c.token);
  return tokens;
}

std::string PrefixBeamSearch::trailing_word(std::int32_t node) const {
  std::vector<TokenId> tokens;
  for (std::int32_t n = node; n != kRoot; n = nodes_[n].parent) {
    if (static_cast<std::size_t>(nodes_[n].token) == vocab_.separator_index()) {
      break;
    }
    tokens.push_back(nodes_[n].token);
  }
  std::string word;
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    word += vocab_.token(static_cast<std::size_t>(*it));
  }
  return word;
}

std::size_t PrefixBeamSearch::slot_stay(const Hypothesis& h) {
  const std::uint64_t key = key_of(h.node);
  const auto [it, inserted] = candidate_index_.emplace(key, candidates_.size());
  if (inserted) {
    const Node& n = nodes_[h.node];
    candidates_.push_back(Candidate{key, h.node, n.parent, n.token, kLogZero,
                                    kLogZero, kLogZero, kLogZero, n.lm_state,
                                    n.lm_log_prob, n.word_count, 0.0});
  }
  return it->second;
}

std::size_t PrefixBeamSearch::slot_extend(const Hypothesis& h, TokenId token) {
  const std::uint64_t key = pack(h.node, token);
  const auto [it, inserted] = candidate_index_.emplace(key, candidates_.size());
  if (!inserted) return it->second;

  Candidate c{key, -1, h.node, token, kLogZero, kLogZero, kLogZero, kLogZero,
              h.lm_state, h.lm_log_prob, static_cast<std::uint32_t>(h.word_count),
              0.0};
  if (const auto child = children_.find(key); child != children_.end()) {
    const Node& n = nodes_[child->second];
    c.node = child->second;
    c.lm_state = n.lm_state;
    c.lm_log_prob = n.lm_log_prob;
    c.word_count = n.word_count;
  } else if (static_cast<std::size_t>(token) == vocab_.separator_index()) {
    const std::string word = trailing_word(h.node);
    if (!word.empty()) {
      c.word_count += 1;
      if (lm_) {
        const auto [log10_prob, next] = lm_->score_word(h.lm_state, word);
        c.lm_log_prob += kLn10 * log10_prob;
        c.lm_state = next;
      }
    }
  }
  candidates_.push_back(c);
  return it->second;
}

std::int32_t PrefixBeamSearch::materialize(const Candidate& c) {
  if (c.node >= 0) return c.node;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{c.parent, c.token, c.lm_state, c.lm_log_prob,
                        c.word_count});
  children_.emplace(c.key, id);
  return id;
}

void PrefixBeamSearch::advance(std::span<const double> logprobs) {
  if (logprobs.size() != vocab_.size()) {
    throw ShapeError("frame has " + std::to_string(logprobs.size()) +
                     " scores for a vocabulary of " +
                     std::to_string(vocab_.size()));
  }
  const auto blank = static_cast<TokenId>(vocab_.blank_index());

  std::vector<TokenId> tokens;
  const double best_token = *std::ranges::max_element(logprobs);
  for (std::size_t c = 0; c < logprobs.size(); ++c) {
    if (!cfg_.prune ||
        logprobs[c] >= best_token + cfg_.token_prune_log_threshold) {
      tokens.push_back(static_cast<TokenId>(c));
    }
  }

  candidates_.clear();
  candidate_index_.clear();
  for (const Hypothesis& h : beam_) {
    const double total = log_add(h.p_blank, h.p_non_blank);
    const double best = std::max(h.best_blank, h.best_non_blank);
    const TokenId last = h.node == kRoot ? -1 : nodes_[h.node].token;
    for (TokenId tok : tokens) {
      const double lp = logprobs[static_cast<std::size_t>(tok)];
      if (tok == blank) {
        Candidate& c = candidates_[slot_stay(h)];
        c.p_blank = log_add(c.p_blank, total + lp);
        c.best_blank = std::max(c.best_blank, best + lp);
      } else if (tok == last) {
        // a + a -> a (repeat collapses) and a<b> + a -> aa.
        if (h.p_non_blank != kLogZero) {
          Candidate& c = candidates_[slot_stay(h)];
          c.p_non_blank = log_add(c.p_non_blank, h.p_non_blank + lp);
          c.best_non_blank = std::max(c.best_non_blank, h.best_non_blank + lp);
        }
        if (h.p_blank != kLogZero) {
          Candidate& c = candidates_[slot_extend(h, tok)];
          c.p_non_blank = log_add(c.p_non_blank, h.p_blank + lp);
          c.best_non_blank = std::max(c.best_non_blank, h.best_blank + lp);
        }
      } else {
        Candidate& c = candidates_[slot_extend(h, tok)];
        c.p_non_blank = log_add(c.p_non_blank, total + lp);
        c.best_non_blank = std::max(c.best_non_blank, best + lp);
      }
    }
  }

  for (Candidate& c : candidates_) {
    const double acoustic = cfg_.ranking == BeamRanking::kBestPath
                                ? std::max(c.best_blank, c.best_non_blank)
                                : log_add(c.p_blank, c.p_non_blank);
    c.rank = acoustic + cfg_.lm_weight * c.lm_log_prob +
             cfg_.word_score * static_cast<double>(c.word_count);
  }

  std::vector<std::size_t> order(candidates_.size());
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    const Candidate& x = candidates_[a];
    const Candidate& y = candidates_[b];
    if (x.rank != y.rank) return x.rank > y.rank;
    if (x.key == y.key) return false;
    return candidate_prefix(x) < candidate_prefix(y);
  };
  const std::size_t keep = std::min(cfg_.beam_width, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), better);
  order.resize(keep);

  std::vector<Hypothesis> next;
  next.reserve(keep);
  const double cutoff =
      order.empty() ? kLogZero
                    : candidates_[order.front()].rank + cfg_.beam_prune_log_margin;
  for (std::size_t idx : order) {
    const Candidate& c = candidates_[idx];
    if (c.rank == kLogZero) continue;
    if (cfg_.prune && c.rank < cutoff) continue;
    Hypothesis h;
    h.node = materialize(c);
    h.p_blank = c.p_blank;
    h.p_non_blank = c.p_non_blank;
    h.best_blank = c.best_blank;
    h.best_non_blank = c.best_non_blank;
    h.lm_state = c.lm_state;
    h.lm_log_prob = c.lm_log_prob;
    h.word_count = c.word_count;
    next.push_back(h);
  }
  beam_ = std::move(next);
}

std::vector<ScoredTranscript> PrefixBeamSearch::finish() const {
  std::vector<ScoredTranscript> results;
  results.reserve(beam_.size());
  for (const Hypothesis& h : beam_) {
    ScoredTranscript r;
    r.transcript = prefix_of(h.node);
    r.acoustic_log_prob = hyp_acoustic(h.p_blank, h.p_non_blank);
    r.lm_log_prob = h.lm_log_prob;
    r.word_count = h.word_count;
    LmState state = h.lm_state;
    const std::string word = trailing_word(h.node);
    if (!word.empty()) {
      r.word_count += 1;
      if (lm_) {
        const auto [log10_prob, next] = lm_->score_word(state, word);
        r.lm_log_prob += kLn10 * log10_prob;
        state = next;
      }
    }
    if (lm_) r.lm_log_prob += kLn10 * lm_->score_end(state);
    r.score = r.acoustic_log_prob + cfg_.lm_weight * r.lm_log_prob +
              cfg_.word_score * static_cast<double>(r.word_count);
    results.push_back(std::move(r));
  }
  std::ranges::sort(results, [](const ScoredTranscript& a,
                                const ScoredTranscript& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.transcript < b.transcript;
  });
  if (results.size() > cfg_.beam_width) results.resize(cfg_.beam_width);
  return results;
}

std::vector<ScoredTranscript> beam_search_decode(const LogitFrameSeq& logprobs,
                                                 const Vocabulary& vocab,
                                                 const NGramModel* lm,
                                                 const DecodeConfig& cfg) {
  if (logprobs.vocab_size() != vocab.size()) {
    throw ShapeError("log-prob width " + std::to_string(logprobs.vocab_size()) +
                     " != vocabulary size " + std::to_string(vocab.size()));
  }
  PrefixBeamSearch search(vocab, lm, cfg);
  for (std::size_t t = 0; t < logprobs.num_frames(); ++t) {
    search.advance(logprobs.row(t));
  }
  return search.finish();
}

LogitFrameSeq pipeline_log_probs(const LayerStack& stack,
                                 const ProjectionHead& head,
                                 const AggregationConfig& agg) {
  return log_softmax(combined_logits(stack, head, agg), agg.temperature);
}

std::vector<ScoredTranscript> decode_utterance(const LayerStack& stack,
                                               const DecoderContext& ctx,
                                               const AggregationConfig& agg,
                                               const DecodeConfig& cfg) {
  if (ctx.vocab.size() != ctx.head.vocab_size()) {
    throw ShapeError("vocabulary size " + std::to_string(ctx.vocab.size()) +
                     " != head vocab_size " +
                     std::to_string(ctx.head.vocab_size()));
  }
  return beam_search_decode(pipeline_log_probs(stack, ctx.head, agg),
                            ctx.vocab, ctx.lm, cfg);
}

}  // namespace ctcrelax
