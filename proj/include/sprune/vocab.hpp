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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sprune/mapping.hpp"

namespace sprune {

struct TokenizerOptions {
  bool lowercase = false;
  bool nfc = false;
  // Words longer than this many code points become a single unk.
  std::size_t max_word_chars = 100;
  std::string continuation_prefix = "##";
};

struct SpecialTokens {
  std::string pad = "[PAD]";
  std::string unk = "[UNK]";
  std::string cls = "[CLS]";
  std::string sep = "[SEP]";
  std::string mask = "[MASK]";

  std::array<std::string, 5> all() const { return {pad, unk, cls, sep, mask}; }
};

// Token <-> id table with greedy longest-match subword segmentation.
// Immutable after construction.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens, TokenizerOptions options = {}, SpecialTokens specials = {});

  // vocab.txt: UTF-8, one token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path, TokenizerOptions options = {});
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const TokenizerOptions& options() const { return options_; }
  const SpecialTokens& specials() const { return specials_; }

  std::optional<std::int32_t> find(std::string_view token) const;
  const std::string& token(std::int32_t id) const;

  std::int32_t pad_id() const { return pad_id_; }
  std::int32_t unk_id() const { return unk_id_; }
  std::int32_t cls_id() const { return cls_id_; }
  std::int32_t sep_id() const { return sep_id_; }
  std::int32_t mask_id() const { return mask_id_; }
  // pad, unk, cls, sep, mask
  std::vector<std::int32_t> special_ids() const;
  bool is_special(std::int32_t id) const;

  // Whitespace split, then greedy longest match per word with the
  // continuation prefix on non-initial pieces. A word that cannot be fully
  // segmented yields one unk id.
  std::vector<std::int32_t> tokenize(std::string_view text) const;
  // Whitespace-separated tokens looked up verbatim; unknown tokens map to unk.
  std::vector<std::int32_t> lookup_pretokenized(std::string_view line) const;

 private:
  std::string normalize(std::string_view text) const;
  void segment_word(std::string_view word, std::vector<std::int32_t>& out) const;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
  TokenizerOptions options_;
  SpecialTokens specials_;
  std::int32_t pad_id_ = 0, unk_id_ = 0, cls_id_ = 0, sep_id_ = 0, mask_id_ = 0;
};

// Occurrence count per token id over every line of a UTF-8 corpus. With
// `pretokenized`, lines hold whitespace-separated vocabulary tokens.
std::vector<std::uint64_t> count_corpus_tokens(const Vocabulary& vocab, const std::filesystem::path& corpus,
                                               bool pretokenized = false);

// Compacts the vocabulary to kept_ids (which must contain every special id);
// the mapping matches remove_vocab_rows for the same list.
std::pair<Vocabulary, VocabMapping> reindex(const Vocabulary& vocab, std::span<const std::int32_t> kept_ids);

}  // namespace sprune
