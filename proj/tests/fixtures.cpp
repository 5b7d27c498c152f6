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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "ctcrelax/ctc.hpp"
#include "ctcrelax/log_math.hpp"

namespace ctcrelax::testing {

std::string toy_arpa() {
  return "\\data\\\n"
         "ngram 1=4\n"
         "ngram 2=2\n"
         "\n"
         "\\1-grams:\n"
         "-1.0\t<unk>\n"
         "-99\t<s>\t-0.2\n"
         "-0.6\t</s>\n"
         "-0.3\ta\t-0.1\n"
         "\n"
         "\\2-grams:\n"
         "-0.2\t<s> a\n"
         "-0.4\ta </s>\n"
         "\n"
         "\\end\\\n";
}

Vocabulary letter_vocab(const std::vector<std::string>& letters) {
  std::vector<std::string> tokens{std::string(kBlankToken),
                                  std::string(kSeparatorToken)};
  tokens.insert(tokens.end(), letters.begin(), letters.end());
  return Vocabulary(std::move(tokens));
}

LogitFrameSeq random_log_probs(std::mt19937_64& rng, std::size_t frames,
                               std::size_t classes, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  LogitFrameSeq logits(frames, classes);
  for (std::size_t t = 0; t < frames; ++t) {
    for (double& v : logits.row_mut(t)) v = u(rng);
  }
  return log_softmax(logits);
}

std::string random_bigram_arpa(std::mt19937_64& rng,
                               const std::vector<std::string>& words) {
  std::uniform_real_distribution<double> weight(0.2, 1.0);
  std::uniform_real_distribution<double> backoff(-0.6, 0.0);
  std::uniform_real_distribution<double> bigram(-1.5, -0.05);
  std::bernoulli_distribution keep(0.5);

  std::vector<std::string> predicted = words;
  predicted.push_back("</s>");
  predicted.push_back("<unk>");
  std::vector<double> w(predicted.size());
  double total = 0.0;
  for (double& x : w) total += (x = weight(rng));

  std::ostringstream uni;
  std::ostringstream bi;
  std::size_t n_uni = 0;
  std::size_t n_bi = 0;
  uni << "-99 <s> " << backoff(rng) << '\n';
  ++n_uni;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    uni << std::log10(w[i] / total) << ' ' << predicted[i];
    if (predicted[i] != "</s>") uni << ' ' << backoff(rng);
    uni << '\n';
    ++n_uni;
  }
  std::vector<std::string> contexts = words;
  contexts.insert(contexts.begin(), "<s>");
  for (const auto& ctx : contexts) {
    for (const auto& next : predicted) {
      if (next == "<unk>" || !keep(rng)) continue;
      bi << bigram(rng) << ' ' << ctx << ' ' << next << '\n';
      ++n_bi;
    }
  }
  std::ostringstream out;
  out << "\\data\\\nngram 1=" << n_uni << "\nngram 2=" << n_bi << "\n\n"
      << "\\1-grams:\n" << uni.str() << "\n\\2-grams:\n" << bi.str()
      << "\n\\end\\\n";
  return out.str();
}

namespace {

const std::vector<std::string> kLetters{"a", "b", "c", "d", "e", "f", "g", "h"};
const std::vector<std::string> kLexicon{
    "bad", "cab", "fed", "had", "bag", "beg", "age", "ace",  "head", "face",
    "cage", "dead", "bead", "deaf", "egg", "hag", "add", "fade", "chef", "badge"};

std::string lexicon_arpa(const std::vector<std::vector<std::string>>& refs) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& words : refs) {
    std::string prev = "<s>";
    for (const auto& w : words) {
      pairs.emplace(prev, w);
      prev = w;
    }
    pairs.emplace(prev, "</s>");
  }
  std::ostringstream out;
  const double uni = std::log10(1.0 / static_cast<double>(kLexicon.size() + 2));
  out << "\\data\\\nngram 1=" << kLexicon.size() + 3
      << "\nngram 2=" << pairs.size() << "\n\n\\1-grams:\n";
  out << "-99 <s> -0.5\n" << uni << " </s>\n" << uni - 1.0 << " <unk>\n";
  for (const auto& w : kLexicon) out << uni << ' ' << w << " -0.5\n";
  out << "\n\\2-grams:\n";
  for (const auto& [a, b] : pairs) out << "-0.4 " << a << ' ' << b << '\n';
  out << "\n\\end\\\n";
  return out.str();
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  Vocabulary vocab = letter_vocab(kLetters);
  const std::size_t classes = vocab.size();
  const std::size_t dim = classes + opts.extra_dims;
  const std::size_t layers = opts.num_layers;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<float> weights(classes * dim);
  std::vector<float> bias(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double base = c == d ? 1.0 : 0.0;
      const double jitter = d < classes ? 0.05 : 0.3;
      weights[c * dim + d] = static_cast<float>(base + jitter * gauss(rng));
    }
    bias[c] = static_cast<float>(0.1 * gauss(rng));
  }
  ProjectionHead head(classes, dim, weights, bias);

  std::uniform_int_distribution<std::size_t> n_words(2, 4);
  std::uniform_int_distribution<std::size_t> pick_word(0, kLexicon.size() - 1);
  std::uniform_int_distribution<int> repeat(1, 3);
  std::uniform_int_distribution<int> gap(0, 2);
  std::bernoulli_distribution corrupt(0.5);

  std::vector<std::vector<std::string>> refs;
  Corpus corpus;
  for (std::size_t u = 0; u < opts.num_utterances; ++u) {
    std::vector<std::string> words;
    const std::size_t count = n_words(rng);
    for (std::size_t i = 0; i < count; ++i) words.push_back(kLexicon[pick_word(rng)]);
    std::string reference;
    for (const auto& w : words) reference += (reference.empty() ? "" : " ") + w;
    refs.push_back(words);

    const Transcript target = encode_text(reference, vocab);
    // Frame targets for the lower layers and (possibly corrupted) top layer.
    std::vector<std::size_t> truth;
    std::vector<std::size_t> top;
    const auto blank = vocab.blank_index();
    for (int i = gap(rng); i > 0; --i) truth.push_back(blank);
    std::size_t wrong_pos = target.tokens.size();
    if (corrupt(rng)) {
      std::uniform_int_distribution<std::size_t> pos(0, target.tokens.size() - 1);
      do {
        wrong_pos = pos(rng);
      } while (static_cast<std::size_t>(target.tokens[wrong_pos]) ==
               vocab.separator_index());
    }
    std::vector<std::size_t> token_of_frame;  // index into target or npos
    for (std::size_t i = 0; i < truth.size(); ++i) token_of_frame.push_back(SIZE_MAX);
    for (std::size_t i = 0; i < target.tokens.size(); ++i) {
      const auto tok = static_cast<std::size_t>(target.tokens[i]);
      for (int r = repeat(rng); r > 0; --r) {
        truth.push_back(tok);
        token_of_frame.push_back(i);
      }
      int blanks = gap(rng);
      if (i + 1 < target.tokens.size() && target.tokens[i + 1] == target.tokens[i]) {
        blanks = std::max(blanks, 1);
      }
      for (; blanks > 0; --blanks) {
        truth.push_back(blank);
        token_of_frame.push_back(SIZE_MAX);
      }
    }
    top = truth;
    if (wrong_pos < target.tokens.size()) {
      const auto right = static_cast<std::size_t>(target.tokens[wrong_pos]);
      std::size_t wrong = right;
      std::uniform_int_distribution<std::size_t> letter(2, classes - 1);
      while (wrong == right) wrong = letter(rng);
      for (std::size_t t = 0; t < top.size(); ++t) {
        if (token_of_frame[t] == wrong_pos) top[t] = wrong;
      }
    }

    const std::size_t frames = truth.size();
    std::vector<float> data(layers * frames * dim);
    for (std::size_t n = 0; n < layers; ++n) {
      const double depth = static_cast<double>(n + 1) / static_cast<double>(layers);
      const double scale = 1.0 + 7.0 * depth;
      const double noise = 1.2 * (1.0 - depth) + 0.3;
      for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t k = n + 1 == layers ? top[t] : truth[t];
        float* h = &data[(n * frames + t) * dim];
        for (std::size_t d = 0; d < dim; ++d) {
          h[d] = static_cast<float>((d == k ? scale : 0.0) + noise * gauss(rng));
        }
      }
    }
    corpus.utterances.push_back(
        Utterance{"utt" + std::to_string(u),
                  LayerStack(layers, frames, dim, std::move(data)), reference});
  }

  return SyntheticCorpus{std::move(vocab), std::move(head), lexicon_arpa(refs),
                         std::move(corpus)};
}

CorpusFiles write_corpus_files(const SyntheticCorpus& corpus,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CorpusFiles files;
  files.vocab = dir / "model.vocab";
  files.head = dir / "model.sslp";
  files.lm = dir / "lm.arpa";
  files.manifest = dir / "dev.manifest";
  save_vocabulary(corpus.vocab, files.vocab);
  save_projection_head(corpus.head, files.head);
  {
    std::ofstream lm(files.lm);
    lm << corpus.arpa;
  }
  EvalManifest manifest;
  for (const auto& u : corpus.corpus.utterances) {
    const std::string name = u.utterance_id + ".ssla";
    save_layer_stack(u.stack, dir / name);
    files.stacks.push_back(dir / name);
    manifest.entries.push_back({u.utterance_id, name, u.reference});
  }
  save_manifest(manifest, files.manifest);
  return files;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ctcrelax_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

LayerStack stack_from_logits(const std::vector<std::vector<float>>& frames) {
  const std::size_t dim = frames.front().size();
  std::vector<float> data;
  for (const auto& f : frames) data.insert(data.end(), f.begin(), f.end());
  return LayerStack(1, frames.size(), dim, std::move(data));
}

ProjectionHead identity_head(std::size_t dim) {
  std::vector<float> w(dim * dim, 0.0f);
  for (std::size_t i = 0; i < dim; ++i) w[i * dim + i] = 1.0f;
  return ProjectionHead(dim, dim, std::move(w), std::vector<float>(dim, 0.0f));
}

std::vector<Transcript> reachable_transcripts(std::size_t frames,
                                              std::size_t classes,
                                              std::size_t blank) {
  std::set<Transcript> seen;
  std::vector<TokenId> a(frames, 0);
  for (;;) {
    seen.insert(collapse(a, blank));
    std::size_t k = 0;
    while (k < frames && ++a[k] == static_cast<TokenId>(classes)) a[k++] = 0;
    if (k == frames) break;
  }
  return {seen.begin(), seen.end()};
}

ScoredTranscript exhaustive_decode(const LogitFrameSeq& logprobs,
                                   const Vocabulary& vocab,
                                   const NGramModel* lm, double lm_weight,
                                   double word_score) {
  ScoredTranscript best;
  bool have = false;
  for (const Transcript& t : reachable_transcripts(
           logprobs.num_frames(), logprobs.vocab_size(), vocab.blank_index())) {
    ScoredTranscript s;
    s.transcript = t;
    s.acoustic_log_prob = ctc_forward(logprobs, t, vocab.blank_index());
    const auto words = transcript_words(t, vocab);
    s.word_count = words.size();
    s.lm_log_prob = lm != nullptr ? kLn10 * lm->score_sentence(words) : 0.0;
    s.score = s.acoustic_log_prob + lm_weight * s.lm_log_prob +
              word_score * static_cast<double>(s.word_count);
    // Candidates arrive in lexicographic order, so strict > keeps the
    // smaller one on ties.
    if (!have || s.score > best.score) {
      best = s;
      have = true;
    }
  }
  return best;
}

}  // namespace ctcrelax::testing
