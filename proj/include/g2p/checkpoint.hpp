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

// Versioned checkpoint container.
//
//   g2p-checkpoint
//   version 1
//   config <n>            then n "key value" lines
//   graphemes <n>         then n "symbol<TAB>index" lines
//   phonemes <n>
//   locales <n>
//   params <n>            then per tensor: "name rank d0 d1 ...\n" followed by
//                         prod(d) little-endian IEEE-754 doubles
//   end

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "g2p/corpus.hpp"
#include "g2p/model.hpp"

namespace g2p {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::map<std::string, std::string> config_to_kv(const ModelConfig& c) {
  return {
      {"embed_dim", std::to_string(c.embed_dim)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"encoder_layers", std::to_string(c.encoder_layers)},
      {"decoder_layers", std::to_string(c.decoder_layers)},
      {"system_id_dim", std::to_string(c.system_id_dim)},
      {"num_locales", std::to_string(c.num_locales)},
      {"grapheme_vocab", std::to_string(c.grapheme_vocab)},
      {"phoneme_vocab", std::to_string(c.phoneme_vocab)},
      {"conditioning", std::to_string(static_cast<int>(c.conditioning))},
      {"dropout", fmt_double(c.dropout)},
      {"init_range", fmt_double(c.init_range)},
      {"seed", std::to_string(c.seed)},
  };
}

inline ModelConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&](const char* k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ParseError(std::string("checkpoint config lacks ") + k);
    return it->second;
  };
  ModelConfig c;
  try {
    c.embed_dim = std::stoul(get("embed_dim"));
    c.hidden_dim = std::stoul(get("hidden_dim"));
    c.encoder_layers = std::stoul(get("encoder_layers"));
    c.decoder_layers = std::stoul(get("decoder_layers"));
    c.system_id_dim = std::stoul(get("system_id_dim"));
    c.num_locales = std::stoul(get("num_locales"));
    c.grapheme_vocab = std::stoul(get("grapheme_vocab"));
    c.phoneme_vocab = std::stoul(get("phoneme_vocab"));
    const int mode = std::stoi(get("conditioning"));
    if (mode < 0 || mode > 2) throw ParseError("checkpoint: conditioning must be 0, 1 or 2");
    c.conditioning = static_cast<Conditioning>(mode);
    c.dropout = std::stod(get("dropout"));
    c.init_range = std::stod(get("init_range"));
    c.seed = std::stoull(get("seed"));
  } catch (const std::logic_error&) {
    throw ParseError("checkpoint: malformed config value");
  }
  return c;
}

inline void put_le_double(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xFF);
}

inline double get_le_double(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline std::string expect_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string("checkpoint truncated before ") + what);
  return line;
}

inline std::size_t expect_count(std::istream& in, const std::string& key) {
  const auto line = expect_line(in, key.c_str());
  const auto f = split(line, ' ');
  if (f.size() != 2 || f[0] != key) throw ParseError("checkpoint: expected '" + key + " <n>', got '" + line + "'");
  return std::stoul(f[1]);
}

inline SymbolTable read_table(std::istream& in, const std::string& key) {
  const std::size_t n = expect_count(in, key);
  std::ostringstream body;
  for (std::size_t i = 0; i < n; ++i) body << expect_line(in, key.c_str()) << '\n';
  std::istringstream bin(body.str());
  return SymbolTable::read(bin, "checkpoint " + key);
}

}  // namespace detail

/// Serializes a model into the checkpoint container as a byte string.
inline std::string checkpoint_bytes(const Model& m) {
  std::string out = "g2p-checkpoint\nversion " + std::to_string(kCheckpointVersion) + "\n";
  const auto kv = detail::config_to_kv(m.config);
  out += "config " + std::to_string(kv.size()) + "\n";
  for (const auto& [k, v] : kv) out += k + " " + v + "\n";
  for (const auto& [key, table] : {std::pair<const char*, const SymbolTable*>{"graphemes", &m.vocab.graphemes},
                                   {"phonemes", &m.vocab.phonemes},
                                   {"locales", &m.vocab.locales}}) {
    std::ostringstream os;
    table->write(os);
    out += std::string(key) + " " + std::to_string(table->size()) + "\n" + os.str();
  }
  out += "params " + std::to_string(m.params.items().size()) + "\n";
  for (const auto& [name, t] : m.params.items()) {
    out += name + " " + std::to_string(t.rank());
    for (auto d : t.shape()) out += " " + std::to_string(d);
    out += "\n";
    for (double v : t.data()) detail::put_le_double(out, v);
  }
  out += "end\n";
  return out;
}

/// Parses a checkpoint. Rejects unknown versions, vocabulary/config
/// disagreement and any parameter whose name or shape differs from the
/// layout the config implies.
inline Model parse_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes);
  if (detail::expect_line(in, "magic") != "g2p-checkpoint") throw ParseError("not a g2p checkpoint");
  const auto vline = detail::expect_line(in, "version");
  if (vline != "version " + std::to_string(kCheckpointVersion)) {
    throw ParseError("unsupported checkpoint " + vline + " (this build reads version " +
                     std::to_string(kCheckpointVersion) + ")");
  }
  std::map<std::string, std::string> kv;
  const std::size_t nkv = detail::expect_count(in, "config");
  for (std::size_t i = 0; i < nkv; ++i) {
    const auto line = detail::expect_line(in, "config");
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError("checkpoint: bad config line '" + line + "'");
    kv[line.substr(0, sp)] = line.substr(sp + 1);
  }
  Model m;
  m.config = detail::config_from_kv(kv);
  m.vocab.graphemes = detail::read_table(in, "graphemes");
  m.vocab.phonemes = detail::read_table(in, "phonemes");
  m.vocab.locales = detail::read_table(in, "locales");
  if (m.vocab.graphemes.size() != m.config.grapheme_vocab || m.vocab.phonemes.size() != m.config.phoneme_vocab ||
      m.vocab.locales.size() != m.config.num_locales) {
    throw ParseError("checkpoint: vocabulary sizes disagree with the stored config");
  }
  const auto layout = parameter_layout(m.config);
  const std::size_t np = detail::expect_count(in, "params");
  if (np != layout.size()) {
    throw ParseError("checkpoint holds " + std::to_string(np) + " tensors, config implies " +
                     std::to_string(layout.size()));
  }
  for (const auto& [name, shape] : layout) {
    const auto header = split(detail::expect_line(in, "tensor header"), ' ');
    if (header.size() < 2 || header[0] != name) {
      throw ParseError("checkpoint: expected tensor " + name + (header.empty() ? "" : ", found " + header[0]));
    }
    nn::Shape got;
    const std::size_t rank = std::stoul(header[1]);
    if (header.size() != rank + 2) throw ParseError("checkpoint: bad header for " + name);
    for (std::size_t i = 0; i < rank; ++i) got.push_back(std::stoul(header[2 + i]));
    if (got != shape) {
      throw ParseError("checkpoint: tensor " + name + " has shape " + nn::shape_str(got) + ", expected " +
                       nn::shape_str(shape));
    }
    const std::size_t n = nn::shape_size(shape);
    std::string raw(n * 8, '\0');
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
      throw ParseError("checkpoint truncated inside tensor " + name);
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = detail::get_le_double(raw.data() + 8 * i);
    nn::Tensor t(shape, std::move(values), true);
    nn::check_finite(t, "checkpoint tensor " + name);
    m.params.add(name, std::move(t));
  }
  if (detail::expect_line(in, "end marker") != "end") throw ParseError("checkpoint: missing end marker");
  return m;
}

inline void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  detail::write_file(path, checkpoint_bytes(m));
}

inline Model load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(detail::read_file(path));
}

inline std::string checkpoint_fingerprint(const Model& m) { return hex64(fnv1a64(checkpoint_bytes(m))); }

}  // namespace g2p
