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

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "sprune/errors.hpp"
#include "sprune/vocab.hpp"
#include "test_util.hpp"

namespace sprune {
namespace {

using testing::TempDir;

const std::vector<std::string> kSpecials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

Vocabulary make_vocab(std::vector<std::string> extra, TokenizerOptions opts = {}) {
  std::vector<std::string> tokens = kSpecials;
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocabulary(std::move(tokens), opts);
}

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

TEST(Vocabulary, ExactWordMatches) {
  const Vocabulary v = make_vocab({"hello", "world"});
  EXPECT_EQ(v.tokenize("hello world"), (std::vector<std::int32_t>{5, 6}));
}

TEST(Vocabulary, GreedyLongestMatch) {
  const Vocabulary v = make_vocab({"un", "##break", "##able", "##b", "##a"});
  EXPECT_EQ(v.tokenize("unbreakable"), (std::vector<std::int32_t>{*v.find("un"), *v.find("##break"), *v.find("##able")}));
}

TEST(Vocabulary, UnmatchedWordIsUnknown) {
  const Vocabulary v = make_vocab({"hello"});
  EXPECT_EQ(v.tokenize("zzz"), (std::vector<std::int32_t>{v.unk_id()}));
  // A partially matched word collapses to a single unknown.
  EXPECT_EQ(v.tokenize("helloz hello"), (std::vector<std::int32_t>{v.unk_id(), 5}));
}

TEST(Vocabulary, OverlongWordIsUnknown) {
  const Vocabulary v = make_vocab({"a", "##a"});
  EXPECT_EQ(v.tokenize(std::string(100, 'a')).size(), 100u);
  EXPECT_EQ(v.tokenize(std::string(101, 'a')), (std::vector<std::int32_t>{v.unk_id()}));
}

TEST(Vocabulary, SegmentsOnCodePointBoundaries) {
  const Vocabulary v = make_vocab({"caf", "##\xC3\xA9", "\xC3"});
  EXPECT_EQ(v.tokenize("caf\xC3\xA9"), (std::vector<std::int32_t>{5, 6}));
}

TEST(Vocabulary, NormalizationIsOptIn) {
  TokenizerOptions opts;
  const Vocabulary plain = make_vocab({"hello", "caf\xC3\xA9"});
  EXPECT_EQ(plain.tokenize("HELLO"), (std::vector<std::int32_t>{plain.unk_id()}));
  opts.lowercase = true;
  EXPECT_EQ(make_vocab({"hello"}, opts).tokenize("HELLO"), (std::vector<std::int32_t>{5}));
  // "e" + combining acute composes to U+00E9 under NFC.
  EXPECT_EQ(plain.tokenize("cafe\xCC\x81"), (std::vector<std::int32_t>{plain.unk_id()}));
  opts.lowercase = false;
  opts.nfc = true;
  EXPECT_EQ(make_vocab({"hello", "caf\xC3\xA9"}, opts).tokenize("cafe\xCC\x81"), (std::vector<std::int32_t>{6}));
}

TEST(Vocabulary, RejectsBrokenTables) {
  EXPECT_THROW(Vocabulary({"[PAD]", "[UNK]", "[CLS]", "[SEP]"}), VocabularyError);
  EXPECT_THROW(make_vocab({"a", "a"}), VocabularyError);
  EXPECT_THROW(make_vocab({""}), VocabularyError);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  TempDir dir("vocab");
  const Vocabulary v = make_vocab({"x", "##y"});
  v.save(dir / "vocab.txt");
  const Vocabulary back = Vocabulary::load(dir / "vocab.txt");
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.pad_id(), 0);
}

TEST(Vocabulary, PretokenizedLookup) {
  const Vocabulary v = make_vocab({"un", "##break"});
  EXPECT_EQ(v.lookup_pretokenized("un ##break nope"), (std::vector<std::int32_t>{5, 6, v.unk_id()}));
}

TEST(Corpus, CountsTokens) {
  TempDir dir("corpus");
  write_file(dir / "c.txt", "a b a\n");
  const Vocabulary v = make_vocab({"a", "b", "c"});
  const auto counts = count_corpus_tokens(v, dir / "c.txt");
  EXPECT_EQ(counts[5], 2u);
  EXPECT_EQ(counts[6], 1u);
  EXPECT_EQ(counts[7], 0u);
}

TEST(Corpus, EmptyFileGivesZeros) {
  TempDir dir("corpus");
  write_file(dir / "c.txt", "");
  const auto counts = count_corpus_tokens(make_vocab({"a"}), dir / "c.txt");
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}), 0u);
}

TEST(Corpus, LineOrderDoesNotMatter) {
  TempDir dir("corpus");
  write_file(dir / "a.txt", "a b\nc c a\nb\n");
  write_file(dir / "b.txt", "b\na b\nc c a\n");
  const Vocabulary v = make_vocab({"a", "b", "c"});
  EXPECT_EQ(count_corpus_tokens(v, dir / "a.txt"), count_corpus_tokens(v, dir / "b.txt"));
}

TEST(Corpus, UnreadableFileIsAnIoError) {
  EXPECT_THROW(count_corpus_tokens(make_vocab({"a"}), "/nonexistent/corpus.txt"), IoError);
}

TEST(Reindex, KeepAllIsIdentity) {
  const Vocabulary v = make_vocab({"a", "b"});
  std::vector<std::int32_t> all(v.size());
  std::iota(all.begin(), all.end(), 0);
  const auto [nv, map] = reindex(v, all);
  EXPECT_TRUE(map.is_identity());
  EXPECT_EQ(nv.tokens(), v.tokens());
}

TEST(Reindex, Compacts) {
  const Vocabulary v = make_vocab({"a", "b", "c", "d", "e"});
  const std::vector<std::int32_t> kept = {0, 1, 2, 3, 4, 7, 9};
  const auto [nv, map] = reindex(v, kept);
  EXPECT_EQ(nv.size(), 7u);
  EXPECT_EQ(map.map(7), 5);
  EXPECT_EQ(map.map(9), 6);
  EXPECT_EQ(nv.token(5), "c");
}

TEST(Reindex, MissingSpecialIsAContractError) {
  const Vocabulary v = make_vocab({"a"});
  const std::vector<std::int32_t> kept = {0, 1, 2, 3, 5};
  EXPECT_THROW(reindex(v, kept), ContractError);
}

TEST(Reindex, TokenizeCommutesWithMapping) {
  const Vocabulary v = make_vocab({"un", "##break", "##able", "read", "##ing", "x"});
  const std::vector<std::int32_t> kept = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const auto [nv, map] = reindex(v, kept);
  for (const char* s : {"unbreakable", "read unable", "reading un"}) {
    const auto original = v.tokenize(s);
    bool survives = true;
    for (auto id : original) survives = survives && map.kept(id);
    if (!survives) continue;
    EXPECT_EQ(nv.tokenize(s), map.map(original)) << s;
  }
}

}  // namespace
}  // namespace sprune
