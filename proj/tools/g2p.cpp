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

// g2p: prepare | train | predict | evaluate | bench
//
// Exit status: 0 success, 1 input or contract error, 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "g2p/g2p.hpp"

namespace fs = std::filesystem;
using namespace g2p;

namespace {

struct Args {
  std::string config_file;
  std::map<std::string, std::string> overrides;

  std::string manifest, bundle, out_dir, checkpoint, words_file, word, locale, output, batch_sizes = "1,16,256";
  std::string partition = "test";
  bool strict_1best = false;
  bool fail_on_skip = false;
};

std::string dashed(std::string k) {
  for (auto& c : k) {
    if (c == '_') c = '-';
  }
  return k;
}

RunConfig effective_config(const Args& a, CLI::App& app) {
  RunConfig rc;
  if (!a.config_file.empty()) rc.merge_file(a.config_file);
  for (const auto& k : rc.keys()) {
    if (app.count("--" + dashed(k)) > 0) rc.set(k, a.overrides.at(k));
  }
  return rc;
}

std::vector<std::string> read_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open words file " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line.substr(0, line.find('\t')));
    if (t.empty() || t.front() == '#') continue;
    words.emplace_back(t);
  }
  return words;
}

/// Resolves the system ID for a locale; -1 under System 0.
int system_id_for(const Model& m, const std::string& locale) {
  if (!uses_system_id(m.config.conditioning)) return -1;
  const int id = m.vocab.locale_id(locale);
  if (id < 0) {
    std::string known;
    for (const auto& l : m.vocab.locales.symbols()) known += " " + l;
    throw ContractError("locale '" + locale + "' is not in the checkpoint (known:" + known + ")");
  }
  return id;
}

std::string default_locale(const Model& m, const std::string& requested) {
  if (!requested.empty()) return requested;
  if (m.vocab.locales.size() == 0) return "und";
  return m.vocab.locales.symbol(0);
}

int cmd_prepare(const Args& a, const RunConfig& rc) {
  const auto items = read_manifest(a.manifest);
  Corpus c = prepare_corpus(items, rc.filter(), rc.u64("seed"), rc.lang_dist_mode());
  save_bundle(c, a.out_dir);
  rc.write_snapshot(a.out_dir);
  std::cout << summarize(c);
  return 0;
}

int cmd_train(const Args& a, const RunConfig& rc) {
  Corpus c = load_bundle(a.bundle);
  rc.write_snapshot(a.out_dir);
  FitOptions opt;
  opt.out_dir = fs::path(a.out_dir);
  opt.progress = &std::cerr;
  opt.eval_threads = rc.size("threads");
  opt.max_dev_words = rc.size("max_dev_words");
  auto result = fit(c, rc.model(), rc.train(), opt);
  double best = 0.0;
  bool any = false;
  for (const auto& r : result.log) {
    if (r.dev_per && (!any || *r.dev_per < best)) best = *r.dev_per, any = true;
  }
  std::cout << "epochs " << result.log.size() << ", best dev PER ";
  if (any) std::cout << best << '\n';
  else std::cout << "n/a\n";
  return 0;
}

int cmd_predict(const Args& a, const RunConfig& rc) {
  Model m = load_checkpoint(a.checkpoint);
  const BeamConfig bcfg = rc.beam();
  const std::string locale = default_locale(m, a.locale);
  const int sys = system_id_for(m, locale);

  std::vector<std::string> words;
  if (!a.word.empty()) words.push_back(a.word);
  if (!a.words_file.empty()) {
    auto more = read_words(a.words_file);
    words.insert(words.end(), more.begin(), more.end());
  }
  std::optional<Corpus> bundle;
  if (!a.bundle.empty()) bundle = load_bundle(a.bundle);
  bool warned_uniform = false;

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.output.empty()) {
    file.open(a.output, std::ios::binary);
    if (!file) throw ContractError("cannot write " + a.output);
    out = &file;
  }

  std::vector<std::optional<DecodeInput>> inputs(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string bad;
    const auto graphemes = utf8::graphemes(words[i]);
    auto ids = grapheme_indices(m.vocab, graphemes, &bad);
    if (!ids) {
      std::cerr << "warning: skipping '" << words[i] << "': unknown grapheme '" << bad << "'\n";
      continue;
    }
    DecodeInput in{*ids, sys, {}};
    if (uses_language_id(m.config.conditioning)) {
      std::string w;
      for (const auto& g : graphemes) w += g;
      if (bundle && bundle->language.count(w) && bundle->language.at(w).size() == m.config.num_locales) {
        in.language = bundle->language.at(w);
      } else {
        if (!warned_uniform) {
          std::cerr << "warning: no language-ID vector for some words; using a uniform distribution\n";
          warned_uniform = true;
        }
        in.language = uniform_distribution(m.config.num_locales);
      }
    }
    inputs[i] = std::move(in);
  }
  std::vector<std::vector<Hypothesis>> picked(words.size());
  parallel_for(words.size(), rc.size("threads"), [&](std::size_t i) {
    if (inputs[i]) picked[i] = select_nbest(beam_search(m, *inputs[i], bcfg), bcfg);
  });
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!inputs[i]) {
      *out << "# skipped\t" << words[i] << "\tunknown grapheme\n";
      continue;
    }
    for (std::size_t r = 0; r < picked[i].size(); ++r) {
      char post[32];
      std::snprintf(post, sizeof post, "%.6f", picked[i][r].avg_posterior);
      *out << words[i] << '\t' << locale << '\t' << (r + 1) << '\t'
           << join(phone_strings(m.vocab, picked[i][r].phonemes), " ") << '\t' << post << '\n';
    }
  }
  return 0;
}

int cmd_evaluate(const Args& a, const RunConfig& rc) {
  Model m = load_checkpoint(a.checkpoint);
  Corpus c = load_bundle(a.bundle);
  EvalOptions opt;
  opt.beam = rc.beam();
  opt.strict_1best = a.strict_1best;
  opt.threads = rc.size("threads");
  const auto& part = a.partition == "dev" ? c.parts.dev : a.partition == "train" ? c.parts.train : c.parts.test;
  if (a.partition != "test" && a.partition != "dev" && a.partition != "train") {
    throw ContractError("--partition must be train, dev or test");
  }
  EvalReport rep = evaluate(m, part, c.language, opt);
  fs::create_directories(a.out_dir);
  rc.write_snapshot(a.out_dir);
  detail::write_file(fs::path(a.out_dir) / "report.txt", format_table(rep));
  detail::write_file(fs::path(a.out_dir) / "report.json", to_json(rep).dump(2) + "\n");
  std::cout << format_table(rep);
  if (a.fail_on_skip && rep.any_skipped()) {
    std::cerr << "error: at least one locale was skipped\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const Args& a, const RunConfig& rc) {
  Model m = load_checkpoint(a.checkpoint);
  const std::string locale = default_locale(m, a.locale);
  const int sys = system_id_for(m, locale);
  std::vector<std::size_t> sizes;
  for (const auto& f : split(a.batch_sizes, ',')) {
    try {
      sizes.push_back(std::stoul(f));
    } catch (const std::logic_error&) {
      throw ContractError("--batch-sizes needs comma-separated integers");
    }
  }
  std::vector<DecodeInput> inputs;
  for (const auto& w : read_words(a.words_file)) {
    auto ids = grapheme_indices(m.vocab, utf8::graphemes(w));
    if (!ids) {
      std::cerr << "warning: skipping '" << w << "': unknown grapheme\n";
      continue;
    }
    DecodeInput in{*ids, sys, {}};
    if (uses_language_id(m.config.conditioning)) in.language = uniform_distribution(m.config.num_locales);
    inputs.push_back(std::move(in));
  }
  const BeamConfig bcfg = rc.beam();
  auto rep = bench_latency(inputs, sizes, [&](const std::vector<DecodeInput>& in, std::size_t bs) {
    std::vector<std::vector<int>> out;
    for (auto& h : greedy_decode_batched(m, in, bs, bcfg)) out.push_back(std::move(h.phonemes));
    return out;
  });
  if (!a.output.empty()) {
    detail::write_file(a.output, rep.csv());
    rc.write_snapshot(fs::path(a.output).parent_path().empty() ? fs::path(".") : fs::path(a.output).parent_path());
  }
  std::cout << rep.csv();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual grapheme-to-phoneme toolkit"};
  app.require_subcommand(1);
  Args a;
  RunConfig defaults;
  app.add_option("--config", a.config_file, "key = value config file (flags override it)")->check(CLI::ExistingFile);
  for (const auto& k : defaults.keys()) {
    a.overrides[k];
    app.add_option("--" + dashed(k), a.overrides[k], defaults.doc(k) + " (default " + defaults.get(k) + ")");
  }

  auto* prepare = app.add_subcommand("prepare", "build a corpus bundle from lexicons listed in a manifest");
  prepare->add_option("manifest", a.manifest, "manifest of <lexicon path> <locale> lines")->required();
  prepare->add_option("out_dir", a.out_dir, "bundle directory")->required();

  auto* train = app.add_subcommand("train", "train a model on a corpus bundle");
  train->add_option("bundle", a.bundle, "corpus bundle directory")->required();
  train->add_option("out_dir", a.out_dir, "output directory for checkpoints and log")->required();

  auto* predict = app.add_subcommand("predict", "n-best pronunciations for words");
  predict->add_option("checkpoint", a.checkpoint, "model checkpoint")->required();
  predict->add_option("--word", a.word, "a single word");
  predict->add_option("--words", a.words_file, "file with one word per line");
  predict->add_option("--locale", a.locale, "target locale (system ID)");
  predict->add_option("--bundle", a.bundle, "corpus bundle supplying language-ID vectors");
  predict->add_option("--output", a.output, "write TSV here instead of stdout");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "PER/WER per locale on a bundle partition");
  evaluate_cmd->add_option("checkpoint", a.checkpoint, "model checkpoint")->required();
  evaluate_cmd->add_option("bundle", a.bundle, "corpus bundle directory")->required();
  evaluate_cmd->add_option("out_dir", a.out_dir, "report directory")->required();
  evaluate_cmd->add_option("--partition", a.partition, "train, dev or test");
  evaluate_cmd->add_flag("--strict-1best", a.strict_1best, "compare only the best hypothesis with the first reference");
  evaluate_cmd->add_flag("--fail-on-skip", a.fail_on_skip, "exit 1 when a locale could not be evaluated");

  auto* bench = app.add_subcommand("bench", "greedy decoding latency per batch size");
  bench->add_option("checkpoint", a.checkpoint, "model checkpoint")->required();
  bench->add_option("words", a.words_file, "file with one word per line")->required();
  bench->add_option("--batch-sizes", a.batch_sizes, "comma-separated batch sizes");
  bench->add_option("--locale", a.locale, "target locale (system ID)");
  bench->add_option("--output", a.output, "write CSV here as well as stdout");

  app.fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const RunConfig rc = effective_config(a, app);
    if (*prepare) return cmd_prepare(a, rc);
    if (*train) return cmd_train(a, rc);
    if (*predict) return cmd_predict(a, rc);
    if (*evaluate_cmd) return cmd_evaluate(a, rc);
    if (*bench) return cmd_bench(a, rc);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
