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

// Phoneme and word error rates, per-locale reports and the decoding
// latency harness.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2p/checkpoint.hpp"
#include "g2p/corpus.hpp"
#include "g2p/decoding.hpp"
#include "g2p/errors.hpp"
#include "g2p/model.hpp"

namespace g2p {

/// Unit-cost edit distance (insert, delete, substitute), two-row DP.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

using Pron = std::vector<std::string>;

struct WordScore {
  std::size_t distance = 0;
  std::size_t denominator = 0;  // length of the reference achieving the minimum
  bool error = false;
};

/// Best match between any prediction and any reference. Ties on distance
/// prefer the longer reference, then the lexicographically smaller one.
inline WordScore score_word(const std::vector<Pron>& predictions, const std::vector<Pron>& references) {
  if (predictions.empty() || references.empty()) {
    throw ContractError("score_word: need at least one prediction and one reference");
  }
  WordScore best;
  const Pron* best_ref = nullptr;
  for (const auto& ref : references) {
    for (const auto& pred : predictions) {
      const std::size_t d = levenshtein(pred, ref);
      const bool better = !best_ref || d < best.distance ||
                          (d == best.distance && (ref.size() > best_ref->size() ||
                                                  (ref.size() == best_ref->size() && ref < *best_ref)));
      if (better) {
        best.distance = d;
        best_ref = &ref;
      }
    }
  }
  best.denominator = best_ref->size();
  best.error = best.distance > 0;
  return best;
}

/// Predictions and references for one (word, locale) of a test set.
struct WordResult {
  std::string word;
  std::string locale;
  std::vector<Pron> predictions;
  std::vector<Pron> references;
};

struct LocaleScore {
  std::string locale;
  std::size_t edits = 0;
  std::size_t ref_phones = 0;
  std::size_t word_errors = 0;
  std::size_t words = 0;
  bool skipped = false;
  std::string skip_reason;

  double per() const { return ref_phones ? static_cast<double>(edits) / static_cast<double>(ref_phones) : 0.0; }
  double wer() const { return words ? static_cast<double>(word_errors) / static_cast<double>(words) : 0.0; }
};

struct EvalReport {
  std::vector<LocaleScore> locales;  // sorted by locale tag
  std::string system;                // "0", "1" or "2"
  std::string checkpoint;            // fingerprint
  bool strict_1best = false;

  std::vector<const LocaleScore*> scored() const {
    std::vector<const LocaleScore*> out;
    for (const auto& l : locales) {
      if (!l.skipped) out.push_back(&l);
    }
    return out;
  }
  bool any_skipped() const {
    return std::any_of(locales.begin(), locales.end(), [](const auto& l) { return l.skipped; });
  }

  /// Pooled over all scored locales.
  double micro_per() const {
    std::size_t e = 0, n = 0;
    for (const auto* l : scored()) e += l->edits, n += l->ref_phones;
    return n ? static_cast<double>(e) / static_cast<double>(n) : 0.0;
  }
  double micro_wer() const {
    std::size_t e = 0, n = 0;
    for (const auto* l : scored()) e += l->word_errors, n += l->words;
    return n ? static_cast<double>(e) / static_cast<double>(n) : 0.0;
  }
  double macro_per() const {
    auto s = scored();
    double t = 0.0;
    for (const auto* l : s) t += l->per();
    return s.empty() ? 0.0 : t / static_cast<double>(s.size());
  }
  double macro_wer() const {
    auto s = scored();
    double t = 0.0;
    for (const auto* l : s) t += l->wer();
    return s.empty() ? 0.0 : t / static_cast<double>(s.size());
  }
};

/// Aggregates word-level results per locale. PER pools edit counts over
/// reference lengths; WER counts words with any error. With `strict_1best`
/// only the first prediction and first reference are compared.
inline EvalReport score_results(const std::vector<WordResult>& results, bool strict_1best = false) {
  std::map<std::string, LocaleScore> by_locale;
  for (const auto& r : results) {
    auto& s = by_locale[r.locale];
    s.locale = r.locale;
    WordScore w = strict_1best ? score_word({r.predictions.at(0)}, {r.references.at(0)})
                               : score_word(r.predictions, r.references);
    s.edits += w.distance;
    s.ref_phones += w.denominator;
    s.word_errors += w.error ? 1 : 0;
    s.words += 1;
  }
  EvalReport rep;
  rep.strict_1best = strict_1best;
  for (auto& [_, s] : by_locale) rep.locales.push_back(std::move(s));
  return rep;
}

/// Groups a partition by (word, locale); each group's prons are the
/// references for that word. Order follows the sorted keys.
inline std::vector<WordResult> reference_groups(const std::vector<LexiconEntry>& entries) {
  std::map<std::pair<std::string, std::string>, WordResult> groups;
  for (const auto& e : entries) {
    auto& g = groups[{e.locale, e.text()}];
    if (g.word.empty()) {
      g.word = e.text();
      g.locale = e.locale;
    }
    g.references.push_back(e.pron);
  }
  std::vector<WordResult> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

/// Runs `fn(i)` for i in [0, n) on `threads` workers; results must be
/// written to per-index slots.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::string system_label(Conditioning c) { return std::to_string(static_cast<int>(c)); }

struct EvalOptions {
  BeamConfig beam;
  bool strict_1best = false;
  bool greedy = false;  // 1-best greedy instead of beam + n-best selection
  std::size_t threads = 1;
};

/// Decodes every (word, locale) of `test` and scores it. Locales the model
/// cannot condition on are reported as skipped; words with graphemes
/// outside the vocabulary count as an empty prediction.
inline EvalReport evaluate(const Model& model, const std::vector<LexiconEntry>& test,
                           const LanguageTable& language, const EvalOptions& opt = {}) {
  if (test.empty()) throw ContractError("evaluate: empty test partition");
  auto groups = reference_groups(test);
  std::map<std::string, std::string> skipped;
  std::vector<DecodeInput> inputs(groups.size());
  std::vector<bool> usable(groups.size(), true);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    const int sys = model.vocab.locale_id(g.locale);
    if (uses_system_id(model.config.conditioning) && sys < 0) {
      skipped[g.locale] = "locale not in checkpoint";
      usable[i] = false;
      continue;
    }
    auto ids = grapheme_indices(model.vocab, utf8::graphemes(g.word));
    if (!ids) {
      // Undecodable word: scored as an empty prediction.
      groups[i].predictions.push_back({});
      usable[i] = false;
      continue;
    }
    inputs[i].graphemes = *ids;
    inputs[i].system_id = sys;
    if (uses_language_id(model.config.conditioning)) {
      auto it = language.find(g.word);
      inputs[i].language = it != language.end() && it->second.size() == model.config.num_locales
                               ? it->second
                               : uniform_distribution(model.config.num_locales);
    }
  }
  parallel_for(groups.size(), opt.threads, [&](std::size_t i) {
    if (!usable[i] || skipped.count(groups[i].locale)) return;
    std::vector<Hypothesis> picked;
    if (opt.greedy) {
      picked = greedy_decode(model, {inputs[i]}, opt.beam);
    } else {
      picked = select_nbest(beam_search(model, inputs[i], opt.beam), opt.beam);
    }
    for (const auto& h : picked) groups[i].predictions.push_back(phone_strings(model.vocab, h.phonemes));
  });
  std::vector<WordResult> scored;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!skipped.count(groups[i].locale)) scored.push_back(std::move(groups[i]));
  }
  EvalReport rep = score_results(scored, opt.strict_1best);
  for (const auto& [loc, why] : skipped) {
    LocaleScore s;
    s.locale = loc;
    s.skipped = true;
    s.skip_reason = why;
    for (const auto& e : test) s.words += (e.locale == loc);
    rep.locales.push_back(std::move(s));
  }
  std::sort(rep.locales.begin(), rep.locales.end(), [](const auto& a, const auto& b) { return a.locale < b.locale; });
  rep.system = system_label(model.config.conditioning);
  rep.checkpoint = checkpoint_fingerprint(model);
  rep.strict_1best = opt.strict_1best;
  return rep;
}

/// Aligned text table: language, PER, WER, word count.
inline std::string format_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s\n", "Language", "PER", "WER", "#words");
  os << buf;
  for (const auto& l : r.locales) {
    if (l.skipped) {
      std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8zu  (skipped: %s)\n", l.locale.c_str(), "-", "-", l.words,
                    l.skip_reason.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8zu\n", l.locale.c_str(), l.per(), l.wer(), l.words);
    }
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f\n", "micro-avg", r.micro_per(), r.micro_wer());
  os << buf;
  std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f\n", "macro-avg", r.macro_per(), r.macro_wer());
  os << buf;
  os << "system " << r.system << ", checkpoint " << r.checkpoint << (r.strict_1best ? ", strict 1-best" : "") << '\n';
  return os.str();
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["system"] = r.system;
  j["checkpoint"] = r.checkpoint;
  j["strict_1best"] = r.strict_1best;
  j["locales"] = nlohmann::ordered_json::array();
  for (const auto& l : r.locales) {
    nlohmann::ordered_json row;
    row["locale"] = l.locale;
    row["skipped"] = l.skipped;
    if (l.skipped) row["reason"] = l.skip_reason;
    row["words"] = l.words;
    row["per"] = l.per();
    row["wer"] = l.wer();
    row["edits"] = l.edits;
    row["reference_phones"] = l.ref_phones;
    row["word_errors"] = l.word_errors;
    j["locales"].push_back(row);
  }
  j["micro"] = {{"per", r.micro_per()}, {"wer", r.micro_wer()}};
  j["macro"] = {{"per", r.macro_per()}, {"wer", r.macro_wer()}};
  return j;
}

struct BenchRow {
  std::size_t batch_size = 0;
  std::size_t words = 0;
  double seconds = 0.0;
  double words_per_sec() const { return static_cast<double>(words) / seconds; }
};

struct BenchReport {
  std::vector<BenchRow> rows;

  std::string csv() const {
    std::ostringstream os;
    os << "batch_size,words,seconds,words_per_sec\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.3f\n", r.batch_size, r.words, r.seconds, r.words_per_sec());
      os << buf;
    }
    return os.str();
  }
};

/// Times `decode(inputs, batch_size)` for each batch size after one
/// untimed warm-up pass. Outputs must agree across batch sizes; any
/// difference aborts with a ContractError before timing is reported.
template <typename Input, typename DecodeFn>
BenchReport bench_latency(const std::vector<Input>& inputs, const std::vector<std::size_t>& batch_sizes,
                          DecodeFn&& decode) {
  if (inputs.empty()) throw ContractError("bench_latency: empty word list");
  if (batch_sizes.empty()) throw ContractError("bench_latency: need at least one batch size");
  using Clock = std::chrono::steady_clock;
  BenchReport rep;
  auto reference = decode(inputs, batch_sizes.front());  // warm-up
  for (auto bs : batch_sizes) {
    if (bs < 1) throw ContractError("bench_latency: batch sizes must be >= 1");
    const auto t0 = Clock::now();
    auto out = decode(inputs, bs);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (out != reference) {
      throw ContractError("bench_latency: batch size " + std::to_string(bs) +
                          " changed decoding output; refusing to report timings");
    }
    rep.rows.push_back({bs, inputs.size(), std::max(secs, 1e-9)});
  }
  return rep;
}

}  // namespace g2p
