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
#include <span>
#include <string>
#include <vector>

#include "cl2cm/numkit.hpp"

namespace cl2cm {

enum class Direction { kTextToVision, kVisionToText };
const char* direction_key(Direction d);  // "t2v" / "v2t"

/// Recalls and mAP for one retrieval direction, all in percent.
struct RetrievalReport {
  Direction direction = Direction::kTextToVision;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double map_score = 0.0;
  std::size_t queries = 0;

  double recall_sum() const { return r1 + r5 + r10; }
};

struct EvalReport {
  RetrievalReport t2v;
  RetrievalReport v2t;
  double sum_r = 0.0;

  friend bool operator==(const EvalReport& a, const EvalReport& b) {
    return a.to_json() == b.to_json();
  }
  /// {"t2v": {...}, "v2t": {...}, "sumr": ...} with 4 decimals.
  std::string to_json() const;
};

/// Rank (1-based) of each query's gold candidate under descending similarity.
/// Ties are broken by ascending candidate index.
std::vector<std::size_t> rank_matrix(const Matrix& similarity,
                                     std::span<const std::size_t> gold);

/// R@{1,5,10} and mAP. With one gold item per query AP is 1 / rank.
RetrievalReport compute_metrics(std::span<const std::size_t> ranks, Direction direction);

EvalReport combine_reports(const RetrievalReport& t2v, const RetrievalReport& v2t);

/// Evaluates both directions for a text x vision similarity matrix whose gold
/// pairs lie on the diagonal.
EvalReport evaluate_similarity(const Matrix& text_by_vision);

EvalReport eval_report_from_json(const std::string& text);

/// Markdown table: R@1, R@5, R@10, mAP per direction, then SumR; 1 decimal.
std::string render_report(const EvalReport& report);
std::string render_report_json(const std::string& json_text);

}  // namespace cl2cm
