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

#include "ctcrelax/metrics.hpp"

#include <cctype>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>

#include "ctcrelax/errors.hpp"
#include "ctcrelax/parallel.hpp"

namespace ctcrelax {
namespace {

std::vector<std::string> code_points(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xf0) {
      len = 4;
    } else if (lead >= 0xe0) {
      len = 3;
    } else if (lead >= 0xc0) {
      len = 2;
    }
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ErrorBreakdown& ErrorBreakdown::operator+=(const ErrorBreakdown& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_len += o.ref_len;
  return *this;
}

ErrorBreakdown align_errors(std::span<const std::string> reference,
                            std::span<const std::string> hypothesis) {
  if (reference.empty()) throw ConfigError("reference must be non-empty");
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> dist((n + 1) * width);
  for (std::size_t i = 0; i <= n; ++i) dist[i * width] = i;
  for (std::size_t j = 0; j <= m; ++j) dist[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = dist[(i - 1) * width + j - 1] +
                              (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      const std::size_t ins = dist[i * width + j - 1] + 1;
      const std::size_t del = dist[(i - 1) * width + j] + 1;
      dist[i * width + j] = std::min({sub, ins, del});
    }
  }

  ErrorBreakdown out;
  out.ref_len = n;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = dist[i * width + j];
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (dist[(i - 1) * width + j - 1] + (same ? 0 : 1) == here) {
        if (!same) ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && dist[i * width + j - 1] + 1 == here) {
      ++out.insertions;
      --j;
      continue;
    }
    ++out.deletions;
    --i;
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    const auto uch = static_cast<unsigned char>(ch);
    if (std::isspace(uch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(uch));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(std::move(w));
  return words;
}

ErrorBreakdown wer(std::span<const std::string> reference,
                   std::span<const std::string> hypothesis) {
  return align_errors(reference, hypothesis);
}

ErrorBreakdown wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_words(normalize_text(reference));
  const auto hyp = split_words(normalize_text(hypothesis));
  return align_errors(ref, hyp);
}

ErrorBreakdown cer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = code_points(normalize_text(reference));
  const auto hyp = code_points(normalize_text(hypothesis));
  return align_errors(ref, hyp);
}

Corpus load_corpus(const EvalManifest& manifest, std::size_t jobs) {
  const std::size_t count = manifest.entries.size();
  std::vector<std::optional<LayerStack>> stacks(count);
  std::vector<std::string> errors(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    try {
      stacks[i] = load_layer_stack(manifest.entries[i].stack_path);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  Corpus corpus;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& entry = manifest.entries[i];
    if (stacks[i]) {
      corpus.utterances.push_back(
          Utterance{entry.utterance_id, std::move(*stacks[i]), entry.reference});
    } else {
      corpus.failures.push_back({entry.utterance_id, errors[i]});
    }
  }
  return corpus;
}

CorpusReport evaluate_corpus(const Corpus& corpus, const Transcriber& decode,
                             std::size_t jobs) {
  const std::size_t count = corpus.utterances.size();
  std::vector<std::optional<UtteranceResult>> results(count);
  std::vector<std::string> errors(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    const Utterance& u = corpus.utterances[i];
    try {
      const DecodedText out = decode(u.stack);
      UtteranceResult r;
      r.utterance_id = u.utterance_id;
      r.hypothesis = normalize_text(out.text);
      r.score = out.score;
      r.words = wer(u.reference, out.text);
      r.chars = cer(u.reference, out.text);
      results[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  CorpusReport report;
  report.failures = corpus.failures;
  for (std::size_t i = 0; i < count; ++i) {
    if (results[i]) {
      report.words += results[i]->words;
      report.chars += results[i]->chars;
      report.utterances.push_back(std::move(*results[i]));
    } else {
      report.failures.push_back({corpus.utterances[i].utterance_id, errors[i]});
    }
  }
  return report;
}

CorpusReport evaluate_manifest(const EvalManifest& manifest,
                               const Transcriber& decode, std::size_t jobs) {
  return evaluate_corpus(load_corpus(manifest, jobs), decode, jobs);
}

void write_report_csv(const CorpusReport& report, std::ostream& sink) {
  sink << "utt_id,wer,cer,subs,ins,dels,ref_len\n";
  const auto row = [&](const std::string& id, const ErrorBreakdown& w,
                       const ErrorBreakdown& c) {
    sink << id << ',' << format_rate(w.rate()) << ',' << format_rate(c.rate())
         << ',' << w.substitutions << ',' << w.insertions << ',' << w.deletions
         << ',' << w.ref_len << '\n';
  };
  for (const auto& u : report.utterances) row(u.utterance_id, u.words, u.chars);
  row("__corpus__", report.words, report.chars);
}

}  // namespace ctcrelax
