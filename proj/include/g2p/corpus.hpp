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

// Lexicon ingestion: parsing, rare-symbol filtering, alphabetical block
// partitioning, vocabularies and per-word language distributions.

#pragma once

#include <algorithm>
#include <array>
#include <clocale>
#include <cmath>
#include <cstdio>
#include <cwctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <locale.h>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "g2p/errors.hpp"
#include "g2p/util.hpp"

namespace g2p {

struct LexiconEntry {
  std::vector<std::string> word;  // graphemes, one UTF-8 code point each
  std::vector<std::string> pron;  // phone tokens
  std::string locale;

  std::string text() const {
    std::string s;
    for (const auto& g : word) s += g;
    return s;
  }
  std::string pron_text() const { return join(pron, " "); }

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

namespace utf8 {

/// Decodes UTF-8 into code points. Throws ParseError on malformed input.
inline std::vector<char32_t> decode(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra;
    char32_t cp;
    if (c < 0x80) {
      cp = c;
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      throw ParseError("invalid UTF-8 lead byte");
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
      throw ParseError("truncated UTF-8 sequence");
    }
    for (int k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((cc & 0xC0) != 0x80) throw ParseError("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

inline std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

inline char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  static const locale_t loc = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
  if (loc == static_cast<locale_t>(nullptr)) return cp;
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

/// Lowercased code points of `word`, each as its own UTF-8 string.
inline std::vector<std::string> graphemes(std::string_view word) {
  std::vector<std::string> out;
  for (char32_t cp : decode(word)) out.push_back(encode(to_lower(cp)));
  return out;
}

}  // namespace utf8

/// Removes stress and syllable marks from a phone sequence: standalone
/// boundary tokens (".", "-", "$") are dropped, leading X-SAMPA/IPA stress
/// marks (" % ' ˈ ˌ) are trimmed, and ARPAbet stress digits (AH0, EY1)
/// are removed from uppercase phones.
inline std::vector<std::string> strip_prosody(const std::vector<std::string>& phones) {
  static const std::array<std::string_view, 5> kStress = {"\"", "%", "'", "\xCB\x88", "\xCB\x8C"};
  std::vector<std::string> out;
  for (std::string p : phones) {
    bool changed = true;
    while (changed && !p.empty()) {
      changed = false;
      for (auto mark : kStress) {
        if (p.size() >= mark.size() && p.compare(0, mark.size(), mark) == 0) {
          p.erase(0, mark.size());
          changed = true;
        }
      }
    }
    if (p.size() >= 2 && p.back() >= '0' && p.back() <= '2' && p[p.size() - 2] >= 'A' &&
        p[p.size() - 2] <= 'Z') {
      p.pop_back();
    }
    if (p.empty() || p == "." || p == "-" || p == "$") continue;
    out.push_back(std::move(p));
  }
  return out;
}

struct ParsedLexicon {
  std::vector<LexiconEntry> entries;
  std::size_t rejected = 0;  // lines whose phones were all prosody marks
};

/// Reads `word<TAB>phone phone ...` lines. Blank lines and lines starting
/// with '#' are skipped. `source` prefixes error messages.
inline ParsedLexicon parse_lexicon(std::istream& in, const std::string& locale,
                                   const std::string& source = "<stream>") {
  if (locale.empty()) throw ContractError("parse_lexicon: empty locale tag");
  ParsedLexicon result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(where() + "expected word<TAB>phones");
    const std::string_view word = trim(std::string_view(line).substr(0, tab));
    if (word.empty()) throw ParseError(where() + "empty word");
    const auto rest = std::string_view(line).substr(tab + 1);
    if (rest.find('\t') != std::string_view::npos) throw ParseError(where() + "too many fields");
    LexiconEntry e;
    try {
      e.word = utf8::graphemes(word);
    } catch (const ParseError& err) {
      throw ParseError(where() + err.what());
    }
    e.pron = strip_prosody(split_ws(rest));
    e.locale = locale;
    if (e.pron.empty()) {
      ++result.rejected;
      continue;
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

/// Writes entries as `word<TAB>phones` or, with the locale column,
/// `word<TAB>phones<TAB>locale`.
inline void write_entries(std::ostream& out, const std::vector<LexiconEntry>& entries,
                          bool with_locale) {
  for (const auto& e : entries) {
    out << e.text() << '\t' << e.pron_text();
    if (with_locale) out << '\t' << e.locale;
    out << '\n';
  }
}

/// Reads the three-column partition format written by write_entries.
inline std::vector<LexiconEntry> read_partition(std::istream& in, const std::string& source) {
  std::vector<LexiconEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty() || fields[2].empty()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected word<TAB>phones<TAB>locale");
    }
    LexiconEntry e{utf8::graphemes(fields[0]), split_ws(fields[1]), fields[2]};
    if (e.pron.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty pronunciation");
    out.push_back(std::move(e));
  }
  return out;
}

struct FilterConfig {
  std::size_t min_grapheme_count = 25;
  std::size_t min_phoneme_count = 5;
  std::size_t block_size = 10;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};

  void validate() const {
    if (min_grapheme_count < 1 || min_phoneme_count < 1) {
      throw ContractError("FilterConfig: symbol count thresholds must be >= 1");
    }
    if (block_size < 1) throw ContractError("FilterConfig: block_size must be >= 1");
    double total = 0.0;
    for (double r : split_ratios) {
      if (!(r > 0.0)) throw ContractError("FilterConfig: split ratios must be positive");
      total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractError("FilterConfig: split ratios must sum to 1");
  }
};

/// Drops every entry holding a grapheme seen fewer than min_grapheme_count
/// times or a phone seen fewer than min_phoneme_count times. Counts are
/// taken once over the input and not recomputed after removals.
inline std::vector<LexiconEntry> filter_rare_symbols(const std::vector<LexiconEntry>& entries,
                                                     const FilterConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, std::size_t> gcount, pcount;
  for (const auto& e : entries) {
    for (const auto& g : e.word) ++gcount[g];
    for (const auto& p : e.pron) ++pcount[p];
  }
  std::vector<LexiconEntry> kept;
  kept.reserve(entries.size());
  for (const auto& e : entries) {
    const bool rare_g = std::any_of(e.word.begin(), e.word.end(),
                                    [&](const auto& g) { return gcount[g] < cfg.min_grapheme_count; });
    const bool rare_p = std::any_of(e.pron.begin(), e.pron.end(),
                                    [&](const auto& p) { return pcount[p] < cfg.min_phoneme_count; });
    if (!rare_g && !rare_p) kept.push_back(e);
  }
  return kept;
}

enum class Split { train = 0, dev = 1, test = 2 };

struct Partitions {
  std::vector<LexiconEntry> train, dev, test;

  std::vector<LexiconEntry>& operator[](Split s) {
    return s == Split::train ? train : s == Split::dev ? dev : test;
  }
  const std::vector<LexiconEntry>& operator[](Split s) const {
    return s == Split::train ? train : s == Split::dev ? dev : test;
  }
};

inline bool entry_less(const LexiconEntry& a, const LexiconEntry& b) {
  const auto ta = a.text(), tb = b.text();
  if (ta != tb) return ta < tb;
  if (a.locale != b.locale) return a.locale < b.locale;
  return a.pron < b.pron;
}

/// Number of sampling blocks `entries` splits into for a block size.
inline std::size_t count_blocks(const std::vector<LexiconEntry>& entries, std::size_t block_size) {
  std::set<std::string> words;
  for (const auto& e : entries) words.insert(e.text());
  return (words.size() + block_size - 1) / block_size;
}

/// Sorts entries by (word, locale), cuts the distinct-word sequence into
/// blocks of `block_size` words, and deals whole blocks to train/dev/test.
/// Block quotas follow split_ratios by largest remainder; which blocks fill
/// which quota is a seeded shuffle. Entries sharing a word string always
/// share a block. With `require_all` set, fewer blocks than partitions is
/// an error; otherwise small inputs may leave partitions empty.
inline Partitions block_partition(std::vector<LexiconEntry> entries, const FilterConfig& cfg,
                                  std::uint64_t seed, bool require_all = false) {
  cfg.validate();
  if (entries.empty()) throw ContractError("block_partition: no entries");
  std::sort(entries.begin(), entries.end(), entry_less);

  std::vector<std::size_t> block_of(entries.size());
  std::size_t distinct = 0;
  std::string prev;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto t = entries[i].text();
    if (i == 0 || t != prev) ++distinct;
    prev = t;
    block_of[i] = (distinct - 1) / cfg.block_size;
  }
  const std::size_t nblocks = block_of.back() + 1;
  if (require_all && nblocks < 3) {
    throw ContractError("block_partition: only " + std::to_string(nblocks) +
                        " block(s) for 3 partitions; use a smaller block_size (now " +
                        std::to_string(cfg.block_size) + ")");
  }

  std::array<std::size_t, 3> quota{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = cfg.split_ratios[static_cast<std::size_t>(s)] * static_cast<double>(nblocks);
    quota[static_cast<std::size_t>(s)] = static_cast<std::size_t>(std::floor(exact));
    remainder[static_cast<std::size_t>(s)] = exact - std::floor(exact);
    assigned += quota[static_cast<std::size_t>(s)];
  }
  while (assigned < nblocks) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best]) best = s;
    }
    ++quota[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  if (require_all) {
    // Every partition gets at least one block, taken from the largest.
    for (std::size_t s = 0; s < 3; ++s) {
      if (quota[s] == 0) {
        auto donor = std::max_element(quota.begin(), quota.end());
        --*donor;
        ++quota[s];
      }
    }
  }

  std::vector<std::size_t> order(nblocks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  seeded_shuffle(order, rng);
  std::vector<Split> block_split(nblocks);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t q = 0; q < quota[s]; ++q) block_split[order[pos++]] = static_cast<Split>(s);
  }

  Partitions parts;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    parts[block_split[block_of[i]]].push_back(std::move(entries[i]));
  }
  return parts;
}

enum class LangDistMode { count, log_count, multi_hot };

inline std::string to_string(LangDistMode m) {
  switch (m) {
    case LangDistMode::count: return "count";
    case LangDistMode::log_count: return "log-count";
    case LangDistMode::multi_hot: return "multi-hot";
  }
  return "count";
}

inline LangDistMode parse_lang_dist_mode(const std::string& s) {
  if (s == "count") return LangDistMode::count;
  if (s == "log-count") return LangDistMode::log_count;
  if (s == "multi-hot") return LangDistMode::multi_hot;
  throw ContractError("unknown language-distribution mode '" + s + "'");
}

/// Probability that a word belongs to each locale lexicon.
///
/// `word_counts[l]` is the number of occurrences of the word in lexicon l
/// and `lexicon_sizes[l]` the lexicon's size. The per-locale score
/// C_l(w) / ln|N_l| (or ln(1 + C_l(w)) / ln|N_l| for log-count) is
/// normalized to sum to one. multi-hot spreads mass uniformly over the
/// lexicons containing the word.
inline std::vector<double> language_distribution(std::span<const double> word_counts,
                                                 std::span<const double> lexicon_sizes,
                                                 LangDistMode mode) {
  if (word_counts.size() != lexicon_sizes.size() || word_counts.empty()) {
    throw ContractError("language_distribution: need one count and one size per locale");
  }
  const std::size_t n = word_counts.size();
  std::vector<double> score(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    if (word_counts[l] < 0.0) throw ContractError("language_distribution: negative count");
    if (word_counts[l] == 0.0) continue;
    switch (mode) {
      case LangDistMode::multi_hot:
        score[l] = 1.0;
        break;
      case LangDistMode::count:
      case LangDistMode::log_count: {
        if (!(lexicon_sizes[l] > 1.0)) {
          throw ContractError("language_distribution: lexicon size must exceed 1 so that log|N| > 0");
        }
        const double c = mode == LangDistMode::count ? word_counts[l] : std::log1p(word_counts[l]);
        score[l] = c / std::log(lexicon_sizes[l]);
        break;
      }
    }
  }
  double total = 0.0;
  for (double s : score) total += s;
  if (!(total > 0.0)) {
    throw ContractError("language_distribution: word occurs in no lexicon; supply a uniform vector");
  }
  for (auto& s : score) s /= total;
  return score;
}

inline std::vector<double> uniform_distribution(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

/// Symbol <-> index map with reserved specials at the front.
class SymbolTable {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kReserved = 3;

  SymbolTable() = default;

  /// Reserved tokens followed by `symbols` in sorted order.
  static SymbolTable with_reserved(const std::set<std::string>& symbols) {
    SymbolTable t;
    for (const char* s : {"<pad>", "<s>", "</s>"}) t.add(s);
    for (const auto& s : symbols) t.add(s);
    return t;
  }

  static SymbolTable plain(const std::vector<std::string>& symbols) {
    SymbolTable t;
    for (const auto& s : symbols) t.add(s);
    return t;
  }

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& symbols() const { return symbols_; }
  bool contains(const std::string& s) const { return index_.count(s) != 0; }
  /// -1 when absent.
  int find(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : it->second;
  }
  int id(const std::string& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) throw ContractError("unknown symbol '" + s + "'");
    return it->second;
  }

  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i) out << symbols_[i] << '\t' << i << '\n';
  }

  static SymbolTable read(std::istream& in, const std::string& source) {
    SymbolTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw ParseError(source + ":" + std::to_string(lineno) + ": expected symbol<TAB>index");
      const std::string sym = line.substr(0, tab);
      std::size_t idx = 0;
      try {
        idx = std::stoul(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": bad index");
      }
      if (idx != t.size()) throw ParseError(source + ":" + std::to_string(lineno) + ": indices must be dense and ordered");
      t.add(sym);
    }
    return t;
  }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) { return a.symbols_ == b.symbols_; }

 private:
  void add(const std::string& s) {
    if (!index_.emplace(s, static_cast<int>(symbols_.size())).second) {
      throw ContractError("duplicate symbol '" + s + "'");
    }
    symbols_.push_back(s);
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

/// Grapheme and phoneme tables plus the locale (system-ID) table. Locale
/// tokens are spelled "<tag>" and live in their own embedding table.
struct Vocabularies {
  SymbolTable graphemes;
  SymbolTable phonemes;
  SymbolTable locales;  // plain tags, index = system-ID row

  static std::string system_token(const std::string& locale) { return "<" + locale + ">"; }

  int locale_id(const std::string& tag) const { return locales.find(tag); }

  friend bool operator==(const Vocabularies&, const Vocabularies&) = default;
};

inline Vocabularies build_vocab(const std::vector<LexiconEntry>& entries) {
  std::set<std::string> g, p, l;
  for (const auto& e : entries) {
    g.insert(e.word.begin(), e.word.end());
    p.insert(e.pron.begin(), e.pron.end());
    l.insert(e.locale);
  }
  Vocabularies v{SymbolTable::with_reserved(g), SymbolTable::with_reserved(p),
                 SymbolTable::plain({l.begin(), l.end()})};
  for (const auto& tag : l) {
    const auto tok = Vocabularies::system_token(tag);
    if (v.graphemes.contains(tok) || v.phonemes.contains(tok)) {
      throw ContractError("system-ID token " + tok + " collides with a grapheme or phoneme symbol");
    }
  }
  for (const auto& s : p) {
    if (s == "<pad>" || s == "<s>" || s == "</s>") throw ContractError("phone '" + s + "' is a reserved token");
  }
  return v;
}

/// Per-locale occurrence counts of every word and each lexicon's size
/// (distinct words).
struct LocaleCounts {
  std::vector<std::string> locales;
  std::map<std::string, std::vector<double>> word_counts;
  std::vector<double> lexicon_sizes;

  static LocaleCounts tally(const std::vector<LexiconEntry>& entries,
                            const std::vector<std::string>& locales) {
    LocaleCounts c;
    c.locales = locales;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < locales.size(); ++i) pos[locales[i]] = i;
    std::vector<std::set<std::string>> distinct(locales.size());
    for (const auto& e : entries) {
      auto it = pos.find(e.locale);
      if (it == pos.end()) throw ContractError("LocaleCounts: unknown locale " + e.locale);
      const auto w = e.text();
      auto& row = c.word_counts[w];
      if (row.empty()) row.assign(locales.size(), 0.0);
      row[it->second] += 1.0;
      distinct[it->second].insert(w);
    }
    for (const auto& d : distinct) c.lexicon_sizes.push_back(static_cast<double>(d.size()));
    return c;
  }
};

using LanguageTable = std::map<std::string, std::vector<double>>;

inline LanguageTable build_language_table(const LocaleCounts& counts, LangDistMode mode) {
  LanguageTable table;
  for (const auto& [word, row] : counts.word_counts) {
    table.emplace(word, language_distribution(row, counts.lexicon_sizes, mode));
  }
  return table;
}

struct CorpusStats {
  std::size_t entries_read = 0;
  std::size_t rejected_at_parse = 0;
  std::size_t dropped_rare = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> entries_per_locale;  // after filtering
};

struct Corpus {
  Partitions parts;
  Vocabularies vocab;
  LanguageTable language;
  LocaleCounts counts;
  FilterConfig filter;
  LangDistMode mode = LangDistMode::count;
  std::uint64_t seed = 0;
  CorpusStats stats;

  /// Language distribution for a word, or uniform when the word is unseen.
  std::vector<double> language_of(const std::string& word) const {
    auto it = language.find(word);
    return it != language.end() ? it->second : uniform_distribution(vocab.locales.size());
  }
};

/// Filters, partitions and indexes already-parsed lexicons.
inline Corpus assemble_corpus(std::vector<LexiconEntry> entries, const FilterConfig& cfg,
                              std::uint64_t seed, LangDistMode mode, CorpusStats stats = {}) {
  cfg.validate();
  if (stats.entries_read == 0) stats.entries_read = entries.size();
  auto kept = filter_rare_symbols(entries, cfg);
  stats.dropped_rare = entries.size() - kept.size();
  stats.kept = kept.size();
  if (kept.empty()) throw ContractError("every entry was filtered out; lower the symbol count thresholds");
  for (const auto& e : kept) ++stats.entries_per_locale[e.locale];

  Corpus c;
  c.filter = cfg;
  c.mode = mode;
  c.seed = seed;
  c.vocab = build_vocab(kept);
  c.counts = LocaleCounts::tally(kept, c.vocab.locales.symbols());
  c.language = build_language_table(c.counts, mode);
  c.parts = block_partition(std::move(kept), cfg, seed, /*require_all=*/true);
  c.stats = stats;
  return c;
}

struct ManifestItem {
  std::filesystem::path path;
  std::string locale;
};

/// Lines of `path<TAB or spaces>locale`; relative paths resolve against the
/// manifest's directory.
inline std::vector<ManifestItem> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ContractError("cannot open manifest " + manifest.string());
  std::vector<ManifestItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split_ws(t);
    if (fields.size() != 2) {
      throw ParseError(manifest.string() + ":" + std::to_string(lineno) + ": expected path and locale");
    }
    std::filesystem::path p = fields[0];
    if (p.is_relative()) p = manifest.parent_path() / p;
    items.push_back({p, fields[1]});
  }
  if (items.empty()) throw ContractError("manifest " + manifest.string() + " lists no lexicons");
  return items;
}

inline Corpus prepare_corpus(const std::vector<ManifestItem>& items, const FilterConfig& cfg,
                             std::uint64_t seed, LangDistMode mode) {
  std::vector<LexiconEntry> all;
  CorpusStats stats;
  for (const auto& item : items) {
    std::ifstream in(item.path);
    if (!in) throw ContractError("cannot open lexicon " + item.path.string());
    auto parsed = parse_lexicon(in, item.locale, item.path.string());
    stats.rejected_at_parse += parsed.rejected;
    all.insert(all.end(), std::make_move_iterator(parsed.entries.begin()),
               std::make_move_iterator(parsed.entries.end()));
  }
  stats.entries_read = all.size();
  return assemble_corpus(std::move(all), cfg, seed, mode, stats);
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ContractError("cannot write " + p.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ContractError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string summarize(const Corpus& c) {
  std::ostringstream os;
  os << "entries_read\t" << c.stats.entries_read << '\n'
     << "rejected_at_parse\t" << c.stats.rejected_at_parse << '\n'
     << "dropped_rare_symbols\t" << c.stats.dropped_rare << '\n'
     << "entries_kept\t" << c.stats.kept << '\n'
     << "train\t" << c.parts.train.size() << '\n'
     << "dev\t" << c.parts.dev.size() << '\n'
     << "test\t" << c.parts.test.size() << '\n'
     << "graphemes\t" << c.vocab.graphemes.size() - SymbolTable::kReserved << '\n'
     << "phonemes\t" << c.vocab.phonemes.size() - SymbolTable::kReserved << '\n'
     << "locales\t" << c.vocab.locales.size() << '\n';
  for (const auto& [loc, n] : c.stats.entries_per_locale) os << "locale\t" << loc << '\t' << n << '\n';
  return os.str();
}

/// Writes the corpus bundle directory. Output is a pure function of the
/// corpus, so identical inputs give byte-identical bundles.
inline void save_bundle(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (auto s : {Split::train, Split::dev, Split::test}) {
    std::ostringstream os;
    write_entries(os, c.parts[s], true);
    static const char* kNames[] = {"train.tsv", "dev.tsv", "test.tsv"};
    detail::write_file(dir / kNames[static_cast<int>(s)], os.str());
  }
  {
    std::ostringstream g, p, l;
    c.vocab.graphemes.write(g);
    c.vocab.phonemes.write(p);
    c.vocab.locales.write(l);
    detail::write_file(dir / "graphemes.tsv", g.str());
    detail::write_file(dir / "phonemes.tsv", p.str());
    detail::write_file(dir / "locales.tsv", l.str());
  }
  {
    std::ostringstream os;
    for (const auto& [word, probs] : c.language) {
      os << word << '\t';
      for (std::size_t i = 0; i < probs.size(); ++i) os << (i ? "," : "") << detail::fmt_double(probs[i]);
      os << '\n';
    }
    detail::write_file(dir / "langdist.tsv", os.str());
  }
  {
    std::ostringstream os;
    os << "format=g2p-corpus-1\n"
       << "seed=" << c.seed << '\n'
       << "min_grapheme_count=" << c.filter.min_grapheme_count << '\n'
       << "min_phoneme_count=" << c.filter.min_phoneme_count << '\n'
       << "block_size=" << c.filter.block_size << '\n'
       << "split_ratios=" << detail::fmt_double(c.filter.split_ratios[0]) << ','
       << detail::fmt_double(c.filter.split_ratios[1]) << ',' << detail::fmt_double(c.filter.split_ratios[2])
       << '\n'
       << "lang_dist_mode=" << to_string(c.mode) << '\n';
    for (std::size_t i = 0; i < c.counts.locales.size(); ++i) {
      os << "lexicon_size." << c.counts.locales[i] << '=' << detail::fmt_double(c.counts.lexicon_sizes[i]) << '\n';
    }
    std::istringstream summary(summarize(c));
    std::string line;
    while (std::getline(summary, line)) {
      auto f = split(line, '\t');
      if (f.size() == 2) os << "count." << f[0] << '=' << f[1] << '\n';
      if (f.size() == 3) os << "count." << f[0] << '.' << f[1] << '=' << f[2] << '\n';
    }
    detail::write_file(dir / "manifest.txt", os.str());
    detail::write_file(dir / "summary.tsv", summarize(c));
  }
}

inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(detail::read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(p.string() + ": expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

/// Loads a bundle written by save_bundle.
inline Corpus load_bundle(const std::filesystem::path& dir) {
  Corpus c;
  const auto kv = read_key_values(dir / "manifest.txt");
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParseError("bundle manifest lacks '" + k + "'");
    return it->second;
  };
  if (get("format") != "g2p-corpus-1") throw ParseError("unsupported bundle format " + get("format"));
  c.seed = std::stoull(get("seed"));
  c.filter.min_grapheme_count = std::stoul(get("min_grapheme_count"));
  c.filter.min_phoneme_count = std::stoul(get("min_phoneme_count"));
  c.filter.block_size = std::stoul(get("block_size"));
  auto ratios = split(get("split_ratios"), ',');
  if (ratios.size() != 3) throw ParseError("bundle manifest: split_ratios needs 3 values");
  for (std::size_t i = 0; i < 3; ++i) c.filter.split_ratios[i] = std::stod(ratios[i]);
  c.mode = parse_lang_dist_mode(get("lang_dist_mode"));

  static const char* kNames[] = {"train.tsv", "dev.tsv", "test.tsv"};
  for (auto s : {Split::train, Split::dev, Split::test}) {
    std::istringstream in(detail::read_file(dir / kNames[static_cast<int>(s)]));
    c.parts[s] = read_partition(in, (dir / kNames[static_cast<int>(s)]).string());
  }
  {
    std::istringstream g(detail::read_file(dir / "graphemes.tsv"));
    std::istringstream p(detail::read_file(dir / "phonemes.tsv"));
    std::istringstream l(detail::read_file(dir / "locales.tsv"));
    c.vocab.graphemes = SymbolTable::read(g, "graphemes.tsv");
    c.vocab.phonemes = SymbolTable::read(p, "phonemes.tsv");
    c.vocab.locales = SymbolTable::read(l, "locales.tsv");
  }
  c.counts.locales = c.vocab.locales.symbols();
  for (const auto& loc : c.counts.locales) c.counts.lexicon_sizes.push_back(std::stod(get("lexicon_size." + loc)));
  {
    std::istringstream in(detail::read_file(dir / "langdist.tsv"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw ParseError("langdist.tsv:" + std::to_string(lineno) + ": expected word<TAB>probs");
      std::vector<double> probs;
      for (const auto& f : split(line.substr(tab + 1), ',')) probs.push_back(std::stod(f));
      if (probs.size() != c.vocab.locales.size()) {
        throw ParseError("langdist.tsv:" + std::to_string(lineno) + ": expected one probability per locale");
      }
      c.language.emplace(line.substr(0, tab), std::move(probs));
    }
  }
  for (const auto& [k, v] : kv) {
    if (k.rfind("count.", 0) != 0) continue;
    const auto key = k.substr(6);
    const std::size_t n = std::stoul(v);
    if (key == "entries_read") c.stats.entries_read = n;
    else if (key == "rejected_at_parse") c.stats.rejected_at_parse = n;
    else if (key == "dropped_rare_symbols") c.stats.dropped_rare = n;
    else if (key == "entries_kept") c.stats.kept = n;
    else if (key.rfind("locale.", 0) == 0) c.stats.entries_per_locale[key.substr(7)] = n;
  }
  return c;
}

}  // namespace g2p
