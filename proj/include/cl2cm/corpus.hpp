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


#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cl2cm/encoders.hpp"
#include "cl2cm/numkit.hpp"

namespace cl2cm {

/// Corruption applied to target-language sentences of the train and val
/// splits. Substitution and deletion are exclusive per source token.
struct NoiseModel {
  double substitution_prob = 0.0;
  double deletion_prob = 0.0;
  double insertion_prob = 0.0;
  std::size_t reorder_window = 0;
  double vision_noise_sigma = 0.0;
};

struct CorpusConfig {
  std::size_t concept_vocab = 200;
  std::size_t source_vocab = 200;
  std::size_t target_vocab = 200;
  std::size_t latent_dim = 32;
  std::pair<std::size_t, std::size_t> sentence_len_range{4, 8};
  NoiseModel noise;
  std::size_t train_size = 2000;
  std::size_t val_size = 200;
  std::size_t test_size = 200;
  std::uint64_t seed = 42;

  void validate() const;
};

struct Triple {
  std::uint64_t id = 0;
  Vector vision_feature;
  std::vector<TokenId> source_tokens;
  std::vector<TokenId> target_tokens;
  /// (source position, target position) pairs that survived the noise.
  std::vector<std::pair<std::size_t, std::size_t>> gold_alignment;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Per-split tallies of the noise events, counted per source token.
struct NoiseStats {
  std::size_t source_tokens = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
};

struct Corpus {
  std::vector<Triple> train;
  std::vector<Triple> val;
  std::vector<Triple> test;
  NoiseStats train_noise;

  const std::vector<Triple>& split(const std::string& name) const;
};

inline constexpr int kMaxGenerationRetries = 16;

/// Generation fails when a record cannot be made nonempty within the retry
/// bound (e.g. deletion_prob = 1 with no insertions).
class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what)
      : Error(ErrorCode::kGeneration, what) {}
};

/// Deterministic in (cfg, cfg.seed). Each concept maps to a fixed source token
/// and a fixed target token; vision features are the mean of the sentence's
/// concept latents plus Gaussian noise. Test targets are never noised.
Corpus generate_corpus(const CorpusConfig& cfg);

/// Concept id -> source/target token maps used by generate_corpus.
struct ConceptMaps {
  std::vector<TokenId> to_source;
  std::vector<TokenId> to_target;
};
ConceptMaps concept_maps(const CorpusConfig& cfg);

/// One JSON object per line; vision features carry 9 significant digits.
void write_corpus(std::span<const Triple> records, const std::filesystem::path& path);
std::vector<Triple> read_corpus(const std::filesystem::path& path);

std::string triple_to_json_line(const Triple& t);
Triple triple_from_json_line(const std::string& line, long line_number = -1);

}  // namespace cl2cm
