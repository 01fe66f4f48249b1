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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cl2cm/corpus.hpp"
#include "cl2cm/trainer.hpp"

namespace cl2cm {

/// Every knob of every subcommand. Values come from defaults, then the TOML
/// file, then `--set key=value` overrides.
///
/// TOML layout:
///   [corpus]            CorpusConfig fields; `sentence_len_range = [min, max]`,
///   [corpus.noise]      `sizes = [train, val, test]`
///   [train]             batch_size, epochs, seed, mode, stage1_epochs,
///                       freeze_cl_stage2, eval_every, embed_dim, dim,
///                       threshold_mode, word_reduction
///   [train.weights]     alpha, lambda_level, tau, tau_contrastive, kd_bidirectional
///   [train.ot]          epsilon_entropy, max_iterations, marginal_tolerance
///   [train.optimizer]   learning_rate, beta1, beta2, eps
///   [train.toggles]     cl_instance, word_align, kd_sent, kd_word
///   [ablate]            seeds = [...]
/// A file without a [corpus] table whose root holds corpus keys is read as a
/// bare CorpusConfig.
struct GlobalConfig {
  CorpusConfig corpus;
  TrainConfig train;
  std::vector<std::uint64_t> ablate_seeds{1, 2, 3};

  void validate() const;
};

GlobalConfig parse_config_text(const std::string& toml_text,
                               const std::string& source_name = "<string>");
GlobalConfig load_config(const std::filesystem::path& path);

/// Applies one `dotted.key=value` override, e.g. `train.weights.alpha=0.5`.
void apply_override(GlobalConfig& cfg, const std::string& assignment);

/// Effective configuration as TOML; parse_config_text(to_toml(c)) == c.
std::string to_toml(const GlobalConfig& cfg);
std::string corpus_to_toml(const CorpusConfig& cfg);

const char* mode_name(TrainMode m);
const char* threshold_mode_name(ThresholdMode m);
const char* reduction_name(WordLossReduction r);

}  // namespace cl2cm
