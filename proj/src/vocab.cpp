// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

#include "sprune/vocab.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <fstream>
#include <sstream>

#include "sprune/errors.hpp"

namespace sprune {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) fn(text.substr(i, j - i));
    i = j;
  }
}

// Byte offsets of code point starts, plus the end offset. Stray continuation
// bytes count as their own code point.
std::vector<std::size_t> code_point_offsets(std::string_view word) {
  std::vector<std::size_t> offsets;
  offsets.reserve(word.size() + 1);
  std::size_t i = 0;
  while (i < word.size()) {
    offsets.push_back(i);
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    std::size_t k = 1;
    while (k < len && i + k < word.size() && (static_cast<unsigned char>(word[i + k]) & 0xC0) == 0x80) ++k;
    i += k;
  }
  offsets.push_back(word.size());
  return offsets;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenizerOptions options, SpecialTokens specials)
    : tokens_(std::move(tokens)), options_(std::move(options)), specials_(std::move(specials)) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw VocabularyError("vocabulary entry " + std::to_string(i) + " is empty");
    if (!ids_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw VocabularyError("vocabulary token '" + tokens_[i] + "' appears twice (id " + std::to_string(i) + ")");
    }
  }
  auto special = [&](const std::string& tok) {
    auto id = find(tok);
    if (!id) throw VocabularyError("vocabulary lacks special token " + tok);
    return *id;
  };
  pad_id_ = special(specials_.pad);
  unk_id_ = special(specials_.unk);
  cls_id_ = special(specials_.cls);
  sep_id_ = special(specials_.sep);
  mask_id_ = special(specials_.mask);
  const auto all = specials_.all();
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = a + 1; b < all.size(); ++b)
      if (all[a] == all[b]) throw VocabularyError("special tokens must be distinct: " + all[a]);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path, TokenizerOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens), std::move(options));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocabulary::special_ids() const { return {pad_id_, unk_id_, cls_id_, sep_id_, mask_id_}; }

bool Vocabulary::is_special(std::int32_t id) const {
  return id == pad_id_ || id == unk_id_ || id == cls_id_ || id == sep_id_ || id == mask_id_;
}

std::string Vocabulary::normalize(std::string_view text) const {
  if (!options_.lowercase && !options_.nfc) return std::string(text);
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (options_.nfc) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
    s = nfc->normalize(s, status);
    if (U_FAILURE(status)) throw Error("NFC normalization failed");
  }
  if (options_.lowercase) s.toLower(icu::Locale::getRoot());
  std::string out;
  s.toUTF8String(out);
  return out;
}

void Vocabulary::segment_word(std::string_view word, std::vector<std::int32_t>& out) const {
  const auto offsets = code_point_offsets(word);
  const std::size_t chars = offsets.size() - 1;
  if (chars > options_.max_word_chars) {
    out.push_back(unk_id_);
    return;
  }
  const std::size_t mark = out.size();
  std::string piece;
  std::size_t start = 0;
  while (start < chars) {
    std::size_t end = chars;
    std::optional<std::int32_t> match;
    for (; end > start; --end) {
      piece.clear();
      if (start > 0) piece = options_.continuation_prefix;
      piece.append(word.substr(offsets[start], offsets[end] - offsets[start]));
      auto it = ids_.find(piece);
      if (it != ids_.end()) {
        match = it->second;
        break;
      }
    }
    if (!match) {
      out.resize(mark);
      out.push_back(unk_id_);
      return;
    }
    out.push_back(*match);
    start = end;
  }
}

std::vector<std::int32_t> Vocabulary::tokenize(std::string_view text) const {
  const std::string norm = normalize(text);
  std::vector<std::int32_t> ids;
  for_each_word(norm, [&](std::string_view word) { segment_word(word, ids); });
  return ids;
}

std::vector<std::int32_t> Vocabulary::lookup_pretokenized(std::string_view line) const {
  std::vector<std::int32_t> ids;
  for_each_word(line, [&](std::string_view tok) {
    auto id = find(tok);
    ids.push_back(id ? *id : unk_id_);
  });
  return ids;
}

std::vector<std::uint64_t> count_corpus_tokens(const Vocabulary& vocab, const std::filesystem::path& corpus,
                                               bool pretokenized) {
  std::ifstream in(corpus, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + corpus.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  if (in.bad()) throw IoError("read failed for corpus " + corpus.string());

  const std::size_t v = vocab.size();
  std::vector<std::uint64_t> counts(v, 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(v, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(lines.size()); ++i) {
      const auto& text = lines[static_cast<std::size_t>(i)];
      for (std::int32_t id : pretokenized ? vocab.lookup_pretokenized(text) : vocab.tokenize(text)) {
        ++local[static_cast<std::size_t>(id)];
      }
    }
#pragma omp critical
    for (std::size_t k = 0; k < v; ++k) counts[k] += local[k];
  }
  return counts;
}

std::pair<Vocabulary, VocabMapping> reindex(const Vocabulary& vocab, std::span<const std::int32_t> kept_ids) {
  VocabMapping mapping = VocabMapping::from_kept(vocab.size(), kept_ids);
  for (std::int32_t id : vocab.special_ids()) {
    if (!mapping.kept(id)) {
      throw ContractError("reindex: special token " + vocab.token(id) + " (id " + std::to_string(id) +
                          ") must be kept");
    }
  }
  std::vector<std::string> tokens;
  tokens.reserve(kept_ids.size());
  for (std::int32_t id : kept_ids) tokens.push_back(vocab.token(id));
  return {Vocabulary(std::move(tokens), vocab.options(), vocab.specials()), std::move(mapping)};
}

}  // namespace sprune
