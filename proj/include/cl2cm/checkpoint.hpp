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

#include <filesystem>
#include <string>

#include "cl2cm/config.hpp"
#include "cl2cm/encoders.hpp"

namespace cl2cm {

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kCheckpointManifest = "checkpoint.json";
inline constexpr const char* kCheckpointBlob = "params.bin";

struct Checkpoint {
  ModelParams params;
  GlobalConfig config;
  /// Corpus directory the model was trained on (may be empty).
  std::string corpus_dir;
};

/// Writes `dir/checkpoint.json` (dims, config, seed, step count, block table)
/// and `dir/params.bin` (parameters, then first and second moments, as
/// little-endian IEEE-754 doubles in manifest order).
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);

/// Accepts the checkpoint directory or its manifest path.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cl2cm
