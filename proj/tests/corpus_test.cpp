// Copyright (c) 2026 The g2p-multilingual Authors. All Rights Reserved.
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

#include <cmath>
#include <set>
#include <sstream>

#include "g2p_test_support.hpp"

namespace g2p {
namespace {

using testing::entry;

ParsedLexicon parse(const std::string& text, const std::string& locale) {
  std::istringstream in(text);
  return parse_lexicon(in, locale, "test.tsv");
}

std::vector<std::string> strs(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

TEST(ParseLexicon, SplitsGraphemesAndPhones) {
  auto p = parse("echo\tE k oU\n", "en-US");
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].word, strs({"e", "c", "h", "o"}));
  EXPECT_EQ(p.entries[0].pron, strs({"E", "k", "oU"}));
  EXPECT_EQ(p.entries[0].locale, "en-US");
}

TEST(ParseLexicon, SameWordInTwoLocalesGivesTwoEntries) {
  auto en = parse("dogs\td O g z\n", "en-US");
  auto de = parse("dogs\td O k s\n", "de-DE");
  ASSERT_EQ(en.entries.size(), 1u);
  ASSERT_EQ(de.entries.size(), 1u);
  EXPECT_EQ(en.entries[0].word, de.entries[0].word);
  EXPECT_NE(en.entries[0].pron, de.entries[0].pron);
  EXPECT_NE(en.entries[0].locale, de.entries[0].locale);
}

TEST(ParseLexicon, EmptyStreamGivesNoEntries) {
  auto p = parse("", "en-US");
  EXPECT_TRUE(p.entries.empty());
  EXPECT_EQ(p.rejected, 0u);
}

TEST(ParseLexicon, MalformedLineReportsLineNumber) {
  try {
    parse("echo\tE k oU\nbroken line\n", "en-US");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("test.tsv:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("\tE\n", "en-US"), ParseError);
  EXPECT_THROW(parse("a\tb\tc\n", "en-US"), ParseError);
}

TEST(ParseLexicon, SkipsCommentsBlankLinesAndCarriageReturns) {
  auto p = parse("# header\n\nab\tA B\r\n", "xx");
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].pron, strs({"A", "B"}));
}

TEST(ParseLexicon, LowercasesIncludingNonAscii) {
  auto p = parse("\xC3\x86R\xC3\x98\tA\n", "da-DK");  // "ÆRØ"
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].word, strs({"\xC3\xA6", "r", "\xC3\xB8"}));
}

TEST(ParseLexicon, InvalidUtf8IsAParseError) { EXPECT_THROW(parse("a\xC3\tA\n", "xx"), ParseError); }

TEST(ParseLexicon, ProsodyOnlyPronunciationIsRejectedAndCounted) {
  auto p = parse("a\t. - '\nb\tB\n", "xx");
  EXPECT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.rejected, 1u);
}

TEST(StripProsody, RemovesStressAndSyllableMarks) {
  EXPECT_EQ(strip_prosody(strs({"\"h", "E", ".", "l", "%oU"})), strs({"h", "E", "l", "oU"}));
  EXPECT_EQ(strip_prosody(strs({"HH", "AH0", "L", "OW1"})), strs({"HH", "AH", "L", "OW"}));
  EXPECT_EQ(strip_prosody(strs({"\xCB\x88t", "-", "a", "$"})), strs({"t", "a"}));
  // Digits that are phones in their own right survive.
  EXPECT_EQ(strip_prosody(strs({"@1", "2", "e:"})), strs({"@1", "2", "e:"}));
}

std::vector<LexiconEntry> oslash_corpus() {
  std::vector<LexiconEntry> v;
  for (int i = 0; i < 24; ++i) v.push_back(entry("\xC3\xB8" "a", "X", "da-DK"));
  for (int i = 0; i < 26; ++i) v.push_back(entry("aa", "X", "da-DK"));
  return v;
}

TEST(FilterRareSymbols, DropsEveryEntryWithA24CountGrapheme) {
  FilterConfig cfg;
  cfg.min_grapheme_count = 25;
  cfg.min_phoneme_count = 5;
  auto in = oslash_corpus();
  auto out = filter_rare_symbols(in, cfg);
  EXPECT_EQ(out.size(), 26u);
  for (const auto& e : out) EXPECT_EQ(e.text(), "aa");
}

TEST(FilterRareSymbols, ThresholdsOfOneAreIdentity) {
  FilterConfig cfg;
  cfg.min_grapheme_count = 1;
  cfg.min_phoneme_count = 1;
  auto in = oslash_corpus();
  in.push_back(entry("zq", "Q W", "xx"));
  EXPECT_EQ(filter_rare_symbols(in, cfg), in);
}

TEST(FilterRareSymbols, RarePhoneInThreeOfHundredEntries) {
  std::vector<LexiconEntry> in;
  for (int i = 0; i < 100; ++i) in.push_back(entry("ab", i % 33 == 1 ? "A R" : "A B", "xx"));
  // Oracle: count entries holding the rare phone directly.
  std::size_t rare = 0;
  for (const auto& e : in) rare += std::count(e.pron.begin(), e.pron.end(), "R") > 0;
  ASSERT_EQ(rare, 3u);
  FilterConfig cfg;
  cfg.min_grapheme_count = 1;
  cfg.min_phoneme_count = 5;
  EXPECT_EQ(filter_rare_symbols(in, cfg).size(), 97u);
}

TEST(FilterRareSymbols, CountsAreNotRecomputedAfterRemoval) {
  // 'b' occurs 5 times, but 3 of those entries also hold a rare 'z'. One
  // pass keeps the remaining two 'b' entries.
  std::vector<LexiconEntry> in;
  for (int i = 0; i < 3; ++i) in.push_back(entry("bz", "B", "xx"));
  for (int i = 0; i < 2; ++i) in.push_back(entry("b", "B", "xx"));
  FilterConfig cfg;
  cfg.min_grapheme_count = 5;
  cfg.min_phoneme_count = 1;
  EXPECT_EQ(filter_rare_symbols(in, cfg).size(), 2u);
}

std::string partition_of(const Partitions& p, const std::string& word, const std::string& locale) {
  const char* names[] = {"train", "dev", "test"};
  for (int s = 0; s < 3; ++s) {
    for (const auto& e : p[static_cast<Split>(s)]) {
      if (e.text() == word && e.locale == locale) return names[s];
    }
  }
  return "";
}

TEST(BlockPartition, BlocksAndSharedWordsStayTogether) {
  std::vector<LexiconEntry> in = {entry("ad", "A D", "en-US"), entry("aa", "A A", "en-US"), entry("ac", "A C", "en-US"),
                                  entry("ab", "A B", "en-US")};
  FilterConfig cfg;
  cfg.block_size = 2;
  cfg.split_ratios = {0.5, 0.25, 0.25};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = block_partition(in, cfg, seed);
    EXPECT_EQ(partition_of(p, "aa", "en-US"), partition_of(p, "ab", "en-US"));
    EXPECT_EQ(partition_of(p, "ac", "en-US"), partition_of(p, "ad", "en-US"));
  }
  std::vector<LexiconEntry> dogs = {entry("dogs", "d O g z", "en-US"), entry("dogs", "d O k s", "de-DE")};
  for (char c = 'a'; c <= 'z'; ++c) dogs.push_back(entry(std::string("w") + c, "W", "en-US"));
  cfg.block_size = 1;
  cfg.split_ratios = {0.8, 0.1, 0.1};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto p = block_partition(dogs, cfg, seed);
    EXPECT_EQ(partition_of(p, "dogs", "en-US"), partition_of(p, "dogs", "de-DE"));
  }
}

TEST(BlockPartition, SingleBlockLandsInOnePartition) {
  std::vector<LexiconEntry> in = {entry("aa", "A", "x"), entry("ab", "B", "x"), entry("ac", "C", "x")};
  FilterConfig cfg;
  cfg.block_size = 3;
  auto p = block_partition(in, cfg, 1);
  const std::size_t nonempty = !p.train.empty() + !p.dev.empty() + !p.test.empty();
  EXPECT_EQ(nonempty, 1u);
  EXPECT_EQ(p.train.size() + p.dev.size() + p.test.size(), 3u);
}

TEST(BlockPartition, RequireAllRejectsTooFewBlocks) {
  std::vector<LexiconEntry> in = {entry("aa", "A", "x"), entry("ab", "B", "x"), entry("ac", "C", "x")};
  FilterConfig cfg;
  cfg.block_size = 2;
  try {
    block_partition(in, cfg, 1, true);
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("block_size"), std::string::npos) << e.what();
  }
}

TEST(BlockPartition, ThousandWordsFollowRatiosAndAreDisjoint) {
  std::vector<LexiconEntry> in;
  Rng rng(4);
  std::set<std::string> words;
  while (words.size() < 1000) {
    std::string w;
    for (int i = 0; i < 6; ++i) w += static_cast<char>('a' + draw_below(rng, 26));
    words.insert(w);
  }
  for (const auto& w : words) in.push_back(entry(w, "A", "x"));
  FilterConfig cfg;  // block 10, 0.8/0.1/0.1
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto p = block_partition(in, cfg, seed, true);
    const double expected[] = {800, 100, 100};
    std::set<std::string> seen;
    std::size_t total = 0;
    for (int s = 0; s < 3; ++s) {
      const auto& part = p[static_cast<Split>(s)];
      EXPECT_LE(std::abs(static_cast<double>(part.size()) - expected[s]), 2.0 * cfg.block_size);
      for (const auto& e : part) EXPECT_TRUE(seen.insert(e.text()).second) << "duplicate " << e.text();
      total += part.size();
    }
    EXPECT_EQ(total, 1000u);
    EXPECT_EQ(seen, words);
  }
}

TEST(BlockPartition, SameSeedSamePartitionDifferentSeedDiffers) {
  std::vector<LexiconEntry> in;
  for (int i = 0; i < 300; ++i) in.push_back(entry("w" + std::to_string(1000 + i), "A", "x"));
  FilterConfig cfg;
  auto a = block_partition(in, cfg, 9), b = block_partition(in, cfg, 9), c = block_partition(in, cfg, 10);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
}

std::vector<double> dist(std::vector<double> counts, std::vector<double> sizes, LangDistMode m) {
  return language_distribution(counts, sizes, m);
}

TEST(LanguageDistribution, SingleLocaleWordIsOneHotInEveryMode) {
  for (auto m : {LangDistMode::count, LangDistMode::log_count, LangDistMode::multi_hot}) {
    EXPECT_EQ(dist({3, 0, 0}, {10, 20, 30}, m), (std::vector<double>{1, 0, 0}));
  }
}

TEST(LanguageDistribution, CountModeByHand) {
  const double e = std::exp(1.0);
  auto d = dist({2, 1}, {e * e, e}, LangDistMode::count);
  EXPECT_NEAR(d[0], 0.5, 1e-15);
  EXPECT_NEAR(d[1], 0.5, 1e-15);
}

TEST(LanguageDistribution, LogCountModeByHand) {
  const double e = std::exp(1.0);
  // ln(1+3)/1 vs ln(1+1)/1 -> 2 ln2 : ln2.
  auto d = dist({3, 1}, {e, e}, LangDistMode::log_count);
  EXPECT_NEAR(d[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(d[1], 1.0 / 3.0, 1e-12);
}

TEST(LanguageDistribution, MultiHotSpreadsEvenly) {
  auto d = dist({5, 0, 1, 2}, {10, 10, 10, 10}, LangDistMode::multi_hot);
  EXPECT_EQ(d, (std::vector<double>{1.0 / 3, 0, 1.0 / 3, 1.0 / 3}));
}

TEST(LanguageDistribution, WordInNoLexiconIsAnError) {
  EXPECT_THROW(dist({0, 0}, {10, 10}, LangDistMode::count), ContractError);
  EXPECT_THROW(dist({1}, {1}, LangDistMode::count), ContractError);
  EXPECT_EQ(uniform_distribution(4), (std::vector<double>(4, 0.25)));
}

TEST(LanguageDistribution, ModeNamesRoundTrip) {
  for (auto m : {LangDistMode::count, LangDistMode::log_count, LangDistMode::multi_hot}) {
    EXPECT_EQ(parse_lang_dist_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_lang_dist_mode("softmax"), ContractError);
}

TEST(BuildVocab, SizesIncludeReservedSymbols) {
  auto v = build_vocab({entry("ab", "A", "xx"), entry("ba", "A A", "xx")});
  EXPECT_EQ(v.graphemes.size(), 2u + SymbolTable::kReserved);
  EXPECT_EQ(v.phonemes.size(), 1u + SymbolTable::kReserved);
  EXPECT_EQ(v.graphemes.id("a"), SymbolTable::kReserved);
  EXPECT_EQ(v.phonemes.symbol(SymbolTable::kEos), "</s>");
}

TEST(BuildVocab, RebuildingGivesIdenticalMaps) {
  const std::string text = "zeta\tz e t a\nalpha\ta l f a\n";
  auto a = build_vocab(parse(text, "el").entries);
  auto b = build_vocab(parse(text, "el").entries);
  EXPECT_EQ(a.graphemes, b.graphemes);
  EXPECT_EQ(a.phonemes, b.phonemes);
  EXPECT_EQ(a.locales, b.locales);
}

TEST(BuildVocab, EighteenLocalesGetDistinctNonCollidingSlots) {
  std::vector<LexiconEntry> in;
  for (int l = 0; l < 18; ++l) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "l%02d-XX", l);
    in.push_back(entry("ab", "A B", tag));
  }
  auto v = build_vocab(in);
  ASSERT_EQ(v.locales.size(), 18u);
  std::set<int> ids;
  for (const auto& tag : v.locales.symbols()) {
    ids.insert(v.locale_id(tag));
    const auto tok = Vocabularies::system_token(tag);
    EXPECT_FALSE(v.phonemes.contains(tok));
    EXPECT_FALSE(v.graphemes.contains(tok));
  }
  EXPECT_EQ(ids.size(), 18u);
  EXPECT_EQ(*ids.begin(), 0);
  EXPECT_EQ(*ids.rbegin(), 17);
}

TEST(BuildVocab, PhoneSpelledLikeASystemTokenIsRejected) {
  EXPECT_THROW(build_vocab({entry("a", "<xx>", "xx")}), ContractError);
  EXPECT_THROW(build_vocab({entry("a", "</s>", "xx")}), ContractError);
}

TEST(SymbolTable, TextRoundTrip) {
  auto t = SymbolTable::with_reserved({"a", "b\tc"});
  std::ostringstream out;
  t.write(out);
  std::istringstream in(out.str());
  EXPECT_EQ(SymbolTable::read(in, "t"), t);
  EXPECT_EQ(t.find("missing"), -1);
  EXPECT_THROW(t.id("missing"), ContractError);
}

std::vector<LexiconEntry> two_locale_corpus() {
  std::vector<LexiconEntry> v;
  Rng rng(17);
  for (int i = 0; i < 120; ++i) {
    std::string w, p;
    const auto len = 2 + draw_below(rng, 4);
    for (std::size_t k = 0; k < len; ++k) {
      const char c = static_cast<char>('a' + draw_below(rng, 5));
      w += c;
      p += (k ? " " : "") + std::string(1, static_cast<char>(c - 32));
    }
    v.push_back(entry(w, p, i % 2 ? "en-US" : "de-DE"));
  }
  v.push_back(entry("dogs", "A B C D", "en-US"));
  v.push_back(entry("dogs", "A B C E", "de-DE"));
  return v;
}

FilterConfig loose_filter() {
  FilterConfig cfg;
  cfg.min_grapheme_count = 1;
  cfg.min_phoneme_count = 1;
  cfg.block_size = 5;
  return cfg;
}

TEST(Corpus, AssembleBuildsConsistentTables) {
  auto c = assemble_corpus(two_locale_corpus(), loose_filter(), 3, LangDistMode::count);
  EXPECT_EQ(c.vocab.locales.size(), 2u);
  EXPECT_FALSE(c.parts.train.empty());
  EXPECT_FALSE(c.parts.dev.empty());
  EXPECT_FALSE(c.parts.test.empty());
  const auto& d = c.language.at("dogs");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
  EXPECT_GT(d[0], 0.0);
  EXPECT_GT(d[1], 0.0);
  EXPECT_EQ(c.language_of("never-seen"), uniform_distribution(2));
}

TEST(Corpus, BundleRoundTripIsLosslessAndStable) {
  auto c = assemble_corpus(two_locale_corpus(), loose_filter(), 3, LangDistMode::log_count);
  auto d1 = testing::scratch_dir("bundle_a"), d2 = testing::scratch_dir("bundle_b");
  save_bundle(c, d1);
  auto back = load_bundle(d1);
  EXPECT_EQ(back.parts.train, c.parts.train);
  EXPECT_EQ(back.parts.dev, c.parts.dev);
  EXPECT_EQ(back.parts.test, c.parts.test);
  EXPECT_EQ(back.vocab.graphemes, c.vocab.graphemes);
  EXPECT_EQ(back.vocab.phonemes, c.vocab.phonemes);
  EXPECT_EQ(back.vocab.locales, c.vocab.locales);
  EXPECT_EQ(back.language, c.language);
  EXPECT_EQ(back.mode, c.mode);
  save_bundle(back, d2);
  for (const auto& f : std::filesystem::directory_iterator(d1)) {
    EXPECT_EQ(detail::read_file(f.path()), detail::read_file(d2 / f.path().filename())) << f.path();
  }
}

TEST(Corpus, PrepareFromManifestIsDeterministic) {
  auto dir = testing::scratch_dir("manifest");
  std::ofstream(dir / "en.tsv") << "echo\tE k oU\ncat\tk { t\n";
  std::ofstream(dir / "de.tsv") << "echo\tE C o:\nkatze\tk a t s @\n";
  std::ofstream(dir / "manifest.txt") << "en.tsv en-US\nde.tsv\tde-DE\n";
  FilterConfig cfg = loose_filter();
  cfg.block_size = 1;
  auto items = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(items.size(), 2u);
  auto a = prepare_corpus(items, cfg, 5, LangDistMode::count);
  auto b = prepare_corpus(items, cfg, 5, LangDistMode::count);
  EXPECT_EQ(a.vocab.locales.size(), 2u);
  EXPECT_EQ(summarize(a), summarize(b));
  save_bundle(a, dir / "a");
  save_bundle(b, dir / "b");
  for (const auto& f : std::filesystem::directory_iterator(dir / "a")) {
    EXPECT_EQ(detail::read_file(f.path()), detail::read_file(dir / "b" / f.path().filename()));
  }
}

TEST(Corpus, SummaryShowsRareSymbolDrops) {
  auto in = oslash_corpus();
  for (int i = 0; i < 40; ++i) in.push_back(entry("a" + std::string(1, static_cast<char>('a' + i % 2)) + "b", "X Y", "da-DK"));
  FilterConfig cfg;
  cfg.block_size = 1;
  auto c = assemble_corpus(in, cfg, 1, LangDistMode::count);
  EXPECT_EQ(c.stats.dropped_rare, 24u);
  EXPECT_NE(summarize(c).find("dropped_rare_symbols\t24"), std::string::npos) << summarize(c);
}

}  // namespace
}  // namespace g2p
