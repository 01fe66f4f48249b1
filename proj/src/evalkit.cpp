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


#include "cl2cm/evalkit.hpp"

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "cl2cm/error.hpp"

namespace cl2cm {
namespace {

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string direction_json(const RetrievalReport& r) {
  return "{\"r1\": " + fixed(r.r1, 4) + ", \"r5\": " + fixed(r.r5, 4) +
         ", \"r10\": " + fixed(r.r10, 4) + ", \"map\": " + fixed(r.map_score, 4) + "}";
}

RetrievalReport direction_from_json(const nlohmann::json& j, Direction d) {
  if (!j.is_object() || j.empty())
    throw ParseError(std::string("report: direction '") + direction_key(d) + "' is empty");
  RetrievalReport r;
  r.direction = d;
  r.r1 = j.at("r1").get<double>();
  r.r5 = j.at("r5").get<double>();
  r.r10 = j.at("r10").get<double>();
  r.map_score = j.at("map").get<double>();
  return r;
}

}  // namespace

const char* direction_key(Direction d) {
  return d == Direction::kTextToVision ? "t2v" : "v2t";
}

std::vector<std::size_t> rank_matrix(const Matrix& similarity,
                                     std::span<const std::size_t> gold) {
  if (gold.size() != similarity.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "rank_matrix: missing gold entry (have " + std::to_string(gold.size()) +
                    " for " + std::to_string(similarity.rows()) + " queries)");
  }
  std::vector<std::size_t> ranks(similarity.rows());
  for (std::size_t q = 0; q < similarity.rows(); ++q) {
    const std::size_t g = gold[q];
    if (g >= similarity.cols())
      throw Error(ErrorCode::kInvalidArgument, "rank_matrix: gold index out of range");
    auto row = similarity.row(q);
    const double target = row[g];
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] > target || (row[c] == target && c < g)) ++ahead;
    }
    ranks[q] = ahead + 1;
  }
  return ranks;
}

RetrievalReport compute_metrics(std::span<const std::size_t> ranks, Direction direction) {
  if (ranks.empty()) throw Error(ErrorCode::kInvalidArgument, "compute_metrics: empty rank list");
  std::size_t hit1 = 0, hit5 = 0, hit10 = 0;
  double reciprocal = 0.0;
  for (std::size_t r : ranks) {
    if (r < 1) throw Error(ErrorCode::kInvalidArgument, "compute_metrics: ranks start at 1");
    hit1 += r <= 1;
    hit5 += r <= 5;
    hit10 += r <= 10;
    reciprocal += 1.0 / static_cast<double>(r);
  }
  const double q = static_cast<double>(ranks.size());
  RetrievalReport out;
  out.direction = direction;
  out.queries = ranks.size();
  out.r1 = 100.0 * static_cast<double>(hit1) / q;
  out.r5 = 100.0 * static_cast<double>(hit5) / q;
  out.r10 = 100.0 * static_cast<double>(hit10) / q;
  out.map_score = 100.0 * reciprocal / q;
  return out;
}

EvalReport combine_reports(const RetrievalReport& t2v, const RetrievalReport& v2t) {
  return {t2v, v2t, t2v.recall_sum() + v2t.recall_sum()};
}

EvalReport evaluate_similarity(const Matrix& text_by_vision) {
  if (text_by_vision.rows() != text_by_vision.cols())
    throw ShapeError("evaluate_similarity: expected one vision item per text");
  std::vector<std::size_t> gold(text_by_vision.rows());
  for (std::size_t i = 0; i < gold.size(); ++i) gold[i] = i;
  const auto t2v = compute_metrics(rank_matrix(text_by_vision, gold), Direction::kTextToVision);
  const auto v2t =
      compute_metrics(rank_matrix(text_by_vision.transposed(), gold), Direction::kVisionToText);
  return combine_reports(t2v, v2t);
}

std::string EvalReport::to_json() const {
  return "{\"t2v\": " + direction_json(t2v) + ", \"v2t\": " + direction_json(v2t) +
         ", \"sumr\": " + fixed(sum_r, 4) + "}";
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("t2v") || !j.contains("v2t"))
      throw ParseError("report: missing t2v/v2t directions");
    EvalReport r;
    r.t2v = direction_from_json(j.at("t2v"), Direction::kTextToVision);
    r.v2t = direction_from_json(j.at("v2t"), Direction::kVisionToText);
    r.sum_r = j.contains("sumr") ? j.at("sumr").get<double>()
                                 : r.t2v.recall_sum() + r.v2t.recall_sum();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: malformed JSON: ") + e.what());
  }
}

std::string render_report(const EvalReport& r) {
  std::string out =
      "| t2v R@1 | t2v R@5 | t2v R@10 | t2v mAP | v2t R@1 | v2t R@5 | v2t R@10 | v2t mAP | SumR |\n"
      "|---|---|---|---|---|---|---|---|---|\n|";
  for (const RetrievalReport* d : {&r.t2v, &r.v2t}) {
    for (double v : {d->r1, d->r5, d->r10, d->map_score}) out += " " + fixed(v, 1) + " |";
  }
  out += " " + fixed(r.sum_r, 1) + " |\n";
  return out;
}

std::string render_report_json(const std::string& json_text) {
  return render_report(eval_report_from_json(json_text));
}

}  // namespace cl2cm
