/*
 * Copyright 2026 The cl2cm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "cl2cm/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace cl2cm {
namespace {

using ojson = nlohmann::ordered_json;

// RNG streams: 0 = concept latents and token maps, 1..3 = splits.
constexpr std::uint64_t kStreamShared = 0;
constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamVal = 2;
constexpr std::uint64_t kStreamTest = 3;

std::vector<TokenId> shuffled_ids(std::size_t n, Rng& rng) {
  std::vector<TokenId> ids(n);
  std::iota(ids.begin(), ids.end(), TokenId{0});
  for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
  return ids;
}

struct Shared {
  ConceptMaps maps;
  Matrix latents;  // concept_vocab x latent_dim
};

Shared make_shared_state(const CorpusConfig& cfg) {
  Rng rng(cfg.seed, kStreamShared);
  Shared s;
  auto src = shuffled_ids(cfg.source_vocab, rng);
  auto tgt = shuffled_ids(cfg.target_vocab, rng);
  s.maps.to_source.assign(src.begin(), src.begin() + static_cast<long>(cfg.concept_vocab));
  s.maps.to_target.assign(tgt.begin(), tgt.begin() + static_cast<long>(cfg.concept_vocab));
  std::vector<double> lat(cfg.concept_vocab * cfg.latent_dim);
  for (double& x : lat) x = rng.normal();
  s.latents = Matrix(cfg.concept_vocab, cfg.latent_dim, std::move(lat));
  return s;
}

struct TargetSlot {
  TokenId token;
  long source_pos;  // -1 for substituted or inserted tokens
};

// Returns false when every token was deleted.
bool corrupt(const std::vector<std::size_t>& concepts, const CorpusConfig& cfg,
             const Shared& shared, Rng& rng, std::vector<TargetSlot>& out,
             NoiseStats& stats) {
  const NoiseModel& nm = cfg.noise;
  out.clear();
  NoiseStats local;
  for (std::size_t p = 0; p < concepts.size(); ++p) {
    ++local.source_tokens;
    const double u = rng.uniform();
    if (u < nm.substitution_prob) {
      out.push_back({static_cast<TokenId>(rng.index(cfg.target_vocab)), -1});
      ++local.substitutions;
    } else if (u < nm.substitution_prob + nm.deletion_prob) {
      ++local.deletions;
    } else {
      out.push_back({shared.maps.to_target[concepts[p]], static_cast<long>(p)});
    }
    if (rng.uniform() < nm.insertion_prob) {
      out.push_back({static_cast<TokenId>(rng.index(cfg.target_vocab)), -1});
      ++local.insertions;
    }
  }
  if (nm.reorder_window > 0) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
      const std::size_t reach = std::min(nm.reorder_window, out.size() - 1 - i);
      std::swap(out[i], out[i + rng.index(reach + 1)]);
    }
  }
  if (out.empty()) return false;
  stats.source_tokens += local.source_tokens;
  stats.substitutions += local.substitutions;
  stats.deletions += local.deletions;
  stats.insertions += local.insertions;
  return true;
}

std::vector<Triple> generate_split(const CorpusConfig& cfg, const Shared& shared,
                                   std::size_t count, std::uint64_t stream, bool noisy,
                                   std::uint64_t& next_id, NoiseStats& stats) {
  Rng rng(cfg.seed, stream);
  std::vector<Triple> out;
  out.reserve(count);
  std::vector<TargetSlot> slots;
  const auto [len_min, len_max] = cfg.sentence_len_range;
  for (std::size_t r = 0; r < count; ++r) {
    Triple t;
    t.id = next_id++;
    const std::size_t len = len_min + rng.index(len_max - len_min + 1);
    // Concepts within one sentence are distinct.
    std::vector<std::size_t> concepts;
    while (concepts.size() < len) {
      const std::size_t c = rng.index(cfg.concept_vocab);
      if (std::find(concepts.begin(), concepts.end(), c) == concepts.end())
        concepts.push_back(c);
    }
    for (std::size_t c : concepts) t.source_tokens.push_back(shared.maps.to_source[c]);

    if (noisy) {
      int attempt = 0;
      while (!corrupt(concepts, cfg, shared, rng, slots, stats)) {
        if (++attempt >= kMaxGenerationRetries) {
          throw GenerationError("generate_corpus: record " + std::to_string(t.id) +
                                " lost every target token after " +
                                std::to_string(kMaxGenerationRetries) + " attempts");
        }
      }
    } else {
      slots.clear();
      for (std::size_t p = 0; p < concepts.size(); ++p)
        slots.push_back({shared.maps.to_target[concepts[p]], static_cast<long>(p)});
    }
    for (std::size_t q = 0; q < slots.size(); ++q) {
      t.target_tokens.push_back(slots[q].token);
      if (slots[q].source_pos >= 0)
        t.gold_alignment.emplace_back(static_cast<std::size_t>(slots[q].source_pos), q);
    }
    std::sort(t.gold_alignment.begin(), t.gold_alignment.end());

    std::vector<double> feat(cfg.latent_dim, 0.0);
    for (std::size_t c : concepts) {
      auto row = shared.latents.row(c);
      for (std::size_t k = 0; k < feat.size(); ++k) feat[k] += row[k];
    }
    for (double& x : feat) x /= static_cast<double>(concepts.size());
    if (cfg.noise.vision_noise_sigma > 0.0) {
      for (double& x : feat) x += rng.normal(0.0, cfg.noise.vision_noise_sigma);
    }
    t.vision_feature = Vector(std::move(feat));
    out.push_back(std::move(t));
  }
  return out;
}

double round_sig9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace

void CorpusConfig::validate() const {
  const auto [lo, hi] = sentence_len_range;
  if (concept_vocab == 0) throw ConfigError("corpus: concept_vocab must be >= 1");
  if (source_vocab < concept_vocab || target_vocab < concept_vocab)
    throw ConfigError("corpus: source_vocab and target_vocab must be >= concept_vocab");
  if (latent_dim == 0) throw ConfigError("corpus: latent_dim must be >= 1");
  if (lo < 2 || hi < lo) throw ConfigError("corpus: sentence_len_range needs 2 <= min <= max");
  if (hi > concept_vocab) throw ConfigError("corpus: sentence length exceeds concept_vocab");
  if (train_size == 0 || val_size == 0 || test_size == 0)
    throw ConfigError("corpus: every split size must be >= 1");
  const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(noise.substitution_prob) || !in_unit(noise.deletion_prob) ||
      !in_unit(noise.insertion_prob))
    throw ConfigError("corpus: noise probabilities must be in [0,1]");
  if (noise.substitution_prob + noise.deletion_prob > 1.0)
    throw ConfigError("corpus: substitution_prob + deletion_prob must be <= 1");
  if (!(noise.vision_noise_sigma >= 0.0))
    throw ConfigError("corpus: vision_noise_sigma must be >= 0");
}

const std::vector<Triple>& Corpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + name + "'");
}

ConceptMaps concept_maps(const CorpusConfig& cfg) {
  cfg.validate();
  return make_shared_state(cfg).maps;
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const Shared shared = make_shared_state(cfg);
  Corpus corpus;
  NoiseStats ignored;
  std::uint64_t next_id = 0;
  corpus.train = generate_split(cfg, shared, cfg.train_size, kStreamTrain, true, next_id,
                                corpus.train_noise);
  corpus.val = generate_split(cfg, shared, cfg.val_size, kStreamVal, true, next_id, ignored);
  corpus.test =
      generate_split(cfg, shared, cfg.test_size, kStreamTest, false, next_id, ignored);
  return corpus;
}

std::string triple_to_json_line(const Triple& t) {
  ojson j;
  j["id"] = t.id;
  ojson feat = ojson::array();
  for (double x : t.vision_feature.values()) feat.push_back(round_sig9(x));
  j["vision_feature"] = std::move(feat);
  j["source_tokens"] = t.source_tokens;
  j["target_tokens"] = t.target_tokens;
  ojson gold = ojson::array();
  for (const auto& [s, q] : t.gold_alignment) gold.push_back({s, q});
  j["gold_alignment"] = std::move(gold);
  return j.dump();
}

Triple triple_from_json_line(const std::string& line, long line_number) {
  const std::string where =
      line_number >= 0 ? " at line " + std::to_string(line_number) : std::string();
  try {
    const ojson j = ojson::parse(line);
    Triple t;
    t.id = j.at("id").get<std::uint64_t>();
    t.vision_feature = Vector(j.at("vision_feature").get<std::vector<double>>());
    t.source_tokens = j.at("source_tokens").get<std::vector<TokenId>>();
    t.target_tokens = j.at("target_tokens").get<std::vector<TokenId>>();
    for (const auto& pair : j.at("gold_alignment")) {
      if (!pair.is_array() || pair.size() != 2) throw ParseError("gold_alignment entry is not a pair");
      t.gold_alignment.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
    }
    if (t.source_tokens.empty() || t.target_tokens.empty())
      throw ParseError("empty token sequence");
    for (const auto& [s, q] : t.gold_alignment) {
      if (s >= t.source_tokens.size() || q >= t.target_tokens.size())
        throw ParseError("gold_alignment position out of range");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed corpus record" + where + ": " + e.what(), line_number);
  } catch (const ParseError& e) {
    throw ParseError(std::string("malformed corpus record") + where + ": " + e.what(),
                     line_number);
  } catch (const Error& e) {
    throw ParseError(std::string("malformed corpus record") + where + ": " + e.what(),
                     line_number);
  }
}

void write_corpus(std::span<const Triple> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const Triple& t : records) out << triple_to_json_line(t) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Triple> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Triple> out;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    out.push_back(triple_from_json_line(line, number));
  }
  return out;
}

}  // namespace cl2cm
