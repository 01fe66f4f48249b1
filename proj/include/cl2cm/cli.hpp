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
#include <iosfwd>
#include <string>
#include <vector>

#include "cl2cm/config.hpp"
#include "cl2cm/corpus.hpp"

namespace cl2cm {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one subcommand (gen-corpus, train, eval, align, sinkhorn, gradcheck,
/// ablate, report). `args` excludes the program name. Diagnostics go to `err`
/// prefixed with `ERROR:<code>:`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Corpus directory layout written by gen-corpus.
void write_corpus_dir(const Corpus& corpus, const CorpusConfig& cfg,
                      const std::filesystem::path& dir);
struct LoadedCorpus {
  Corpus corpus;
  CorpusConfig config;
};
LoadedCorpus read_corpus_dir(const std::filesystem::path& dir);

/// TSV matrices: one row per line, tab-separated; values are written with 12
/// significant digits.
Matrix read_tsv_matrix(const std::filesystem::path& path);
std::string format_tsv_value(double x);
std::string matrix_to_tsv(const Matrix& m);

}  // namespace cl2cm
