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

#include "ctcrelax/ngram_lm.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "ctcrelax/errors.hpp"

namespace ctcrelax {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) fields.push_back(line.substr(start, pos - start));
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("ARPA line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::size_t NGramModel::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (WordId w : k) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(w)) +
         0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

NGramModel::Key NGramModel::make_key(std::span<const WordId> ngram) {
  Key k;
  k.fill(-1);
  std::ranges::copy(ngram, k.begin());
  return k;
}

WordId NGramModel::intern(std::string_view word) {
  const auto [it, inserted] =
      ids_.emplace(std::string(word), static_cast<WordId>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

std::size_t NGramModel::num_ngrams(std::size_t order) const {
  if (order < 1 || order > tables_.size()) return 0;
  return tables_[order - 1].size();
}

WordId NGramModel::word_id(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? unk_ : it->second;
}

const NgramEntry* NGramModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto& table = tables_[ngram.size() - 1];
  const auto it = table.find(make_key(ngram));
  return it == table.end() ? nullptr : &it->second;
}

LmState NGramModel::begin_sentence() const {
  LmState s;
  if (max_order() > 1 && bos_ >= 0) {
    s.words[0] = bos_;
    s.size = 1;
  }
  return s;
}

std::pair<double, LmState> NGramModel::score_word(const LmState& state,
                                                  WordId id) const {
  const auto ctx = state.context();
  const std::size_t usable = std::min(ctx.size(), max_order() - 1);
  std::array<WordId, kMaxNgramOrder> buf{};
  double backoff = 0.0;
  double result = 0.0;
  for (std::size_t k = usable;; --k) {
    const auto context = ctx.subspan(ctx.size() - k);
    std::ranges::copy(context, buf.begin());
    buf[k] = id;
    if (const auto* e = find(std::span<const WordId>(buf.data(), k + 1))) {
      result = backoff + e->log10_prob;
      break;
    }
    if (k == 0) {
      // Unreachable for a parsed model: ids come from the unigram table.
      throw ValueError("word id has no unigram entry");
    }
    if (const auto* e = find(context)) backoff += e->log10_backoff;
  }

  LmState next;
  const std::size_t keep = max_order() - 1;
  std::vector<WordId> joined(ctx.begin(), ctx.end());
  joined.push_back(id);
  const std::size_t start = joined.size() > keep ? joined.size() - keep : 0;
  next.size = static_cast<std::uint8_t>(joined.size() - start);
  std::copy(joined.begin() + static_cast<std::ptrdiff_t>(start), joined.end(),
            next.words.begin());
  return {result, next};
}

std::pair<double, LmState> NGramModel::score_word(const LmState& state,
                                                  std::string_view word) const {
  return score_word(state, word_id(word));
}

double NGramModel::score_end(const LmState& state) const {
  return score_word(state, eos_ >= 0 ? eos_ : unk_).first;
}

double NGramModel::score_sentence(std::span<const std::string> words) const {
  LmState state = begin_sentence();
  double total = 0.0;
  for (const auto& w : words) {
    const auto [lp, next] = score_word(state, w);
    total += lp;
    state = next;
  }
  return total + score_end(state);
}

NGramModel parse_arpa(std::istream& source) {
  NGramModel model;
  std::vector<std::size_t> declared;
  std::string raw;
  std::size_t line_no = 0;

  enum class Section { kPreamble, kData, kNgrams, kEnd };
  Section section = Section::kPreamble;
  std::size_t order = 0;

  while (std::getline(source, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (section == Section::kEnd) {
      if (!line.empty()) fail(line_no, "content after \\end\\");
      continue;
    }
    if (line.empty()) continue;

    if (line == "\\data\\") {
      if (section != Section::kPreamble) fail(line_no, "repeated \\data\\");
      section = Section::kData;
      continue;
    }
    if (section == Section::kPreamble) continue;

    if (line == "\\end\\") {
      section = Section::kEnd;
      continue;
    }
    if (line.front() == '\\') {
      // "\k-grams:"
      std::size_t k = 0;
      const auto dash = line.find("-grams:");
      if (dash == std::string_view::npos ||
          !parse_size(line.substr(1, dash - 1), k) ||
          dash + 7 != line.size()) {
        fail(line_no, "unrecognized section header");
      }
      if (k != order + 1 || k > declared.size()) {
        fail(line_no, "unexpected section for order " + std::to_string(k));
      }
      order = k;
      section = Section::kNgrams;
      continue;
    }

    if (section == Section::kData) {
      const auto fields = split_fields(line);
      const auto eq = fields.size() == 2 ? fields[1].find('=')
                                         : std::string_view::npos;
      std::size_t k = 0;
      std::size_t count = 0;
      if (fields.size() != 2 || fields[0] != "ngram" ||
          eq == std::string_view::npos ||
          !parse_size(fields[1].substr(0, eq), k) ||
          !parse_size(fields[1].substr(eq + 1), count)) {
        fail(line_no, "malformed count line");
      }
      if (k != declared.size() + 1) fail(line_no, "counts out of order");
      if (k > kMaxNgramOrder) {
        fail(line_no, "order " + std::to_string(k) + " exceeds maximum " +
                          std::to_string(kMaxNgramOrder));
      }
      declared.push_back(count);
      model.tables_.emplace_back();
      model.order_.emplace_back();
      continue;
    }

    // n-gram line: log10_prob w1 .. wk [log10_backoff]
    const auto fields = split_fields(line);
    if (fields.size() != order + 1 && fields.size() != order + 2) {
      fail(line_no, "expected " + std::to_string(order) + " words");
    }
    NgramEntry entry;
    if (!parse_double(fields[0], entry.log10_prob)) {
      fail(line_no, "bad probability '" + std::string(fields[0]) + "'");
    }
    if (fields.size() == order + 2 &&
        !parse_double(fields.back(), entry.log10_backoff)) {
      fail(line_no, "bad backoff '" + std::string(fields.back()) + "'");
    }
    std::array<WordId, kMaxNgramOrder> ids{};
    for (std::size_t i = 0; i < order; ++i) {
      const auto w = fields[i + 1];
      if (order == 1) {
        if (model.ids_.contains(std::string(w))) {
          fail(line_no, "duplicate unigram '" + std::string(w) + "'");
        }
        ids[i] = model.intern(w);
      } else {
        const auto it = model.ids_.find(std::string(w));
        if (it == model.ids_.end()) {
          fail(line_no, "word '" + std::string(w) + "' has no unigram");
        }
        ids[i] = it->second;
      }
    }
    const auto key = NGramModel::make_key(std::span<const WordId>(ids.data(), order));
    if (!model.tables_[order - 1].emplace(key, entry).second) {
      fail(line_no, "duplicate n-gram");
    }
    model.order_[order - 1].push_back(key);
  }

  if (section != Section::kEnd) throw ParseError("ARPA file missing \\end\\");
  if (declared.empty()) throw ParseError("ARPA file declares no n-grams");
  for (std::size_t k = 0; k < declared.size(); ++k) {
    if (model.tables_[k].size() != declared[k]) {
      throw ParseError("ARPA count mismatch for order " + std::to_string(k + 1) +
                       ": declared " + std::to_string(declared[k]) +
                       ", found " + std::to_string(model.tables_[k].size()));
    }
  }
  const auto lookup = [&](std::string_view w) -> WordId {
    const auto it = model.ids_.find(std::string(w));
    return it == model.ids_.end() ? -1 : it->second;
  };
  model.unk_ = lookup(NGramModel::kUnknown);
  if (model.unk_ < 0) throw ParseError("ARPA model has no <unk> unigram");
  model.bos_ = lookup(NGramModel::kSentenceStart);
  model.eos_ = lookup(NGramModel::kSentenceEnd);
  return model;
}

NGramModel load_arpa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_arpa(in);
}

void write_arpa(const NGramModel& model, std::ostream& sink) {
  sink << "\\data\\\n";
  for (std::size_t k = 0; k < model.tables_.size(); ++k) {
    sink << "ngram " << k + 1 << '=' << model.tables_[k].size() << '\n';
  }
  for (std::size_t k = 0; k < model.tables_.size(); ++k) {
    const bool has_backoff_column = k + 1 < model.tables_.size();
    sink << "\n\\" << k + 1 << "-grams:\n";
    for (const auto& key : model.order_[k]) {
      const auto& e = model.tables_[k].at(key);
      sink << format_double(e.log10_prob);
      for (std::size_t i = 0; i <= k; ++i) sink << ' ' << model.words_[key[i]];
      if (has_backoff_column && e.log10_backoff != 0.0) {
        sink << ' ' << format_double(e.log10_backoff);
      }
      sink << '\n';
    }
  }
  sink << "\n\\end\\\n";
  if (!sink) throw IoError("write failed");
}

}  // namespace ctcrelax
