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
#include <vector>

#include "cl2cm/numkit.hpp"
#include "cl2cm/sinkhorn.hpp"

namespace cl2cm {

/// Which side of the threshold survives when turning a plan into labels.
/// kAbove keeps entries strictly greater than gamma. kBelow reproduces the
/// selector exactly as printed (entries <= gamma) and exists for auditing.
enum class ThresholdMode { kAbove, kBelow };

/// Row-stochastic alignment targets derived from a transport plan.
struct PseudoLabelMatrix {
  Matrix labels;
  double threshold_used = 0.0;
  /// Rows where nothing passed the threshold and a one-hot argmax was used.
  std::vector<std::size_t> fallback_rows;
};

/// gamma = mean of all plan entries. Surviving entries are renormalized per
/// row; an empty row becomes one-hot on its argmax (lowest index on ties).
PseudoLabelMatrix make_pseudo_labels(const Matrix& plan,
                                     ThresholdMode mode = ThresholdMode::kAbove);
inline PseudoLabelMatrix make_pseudo_labels(
    const TransportPlan& plan, ThresholdMode mode = ThresholdMode::kAbove) {
  return make_pseudo_labels(plan.plan, mode);
}

/// Normalization of the word loss over source words.
enum class WordLossReduction { kMeanOverSource, kSum };

/// Cross-entropy between the labels and softmax(similarity) taken per
/// source row (temperature 1). Labels are constants.
double word_alignment_loss(const Matrix& similarity, const PseudoLabelMatrix& labels,
                           WordLossReduction reduction = WordLossReduction::kMeanOverSource);

/// d loss / d similarity = (P - labels) / M for the mean reduction.
Matrix word_alignment_loss_grad(
    const Matrix& similarity, const PseudoLabelMatrix& labels,
    WordLossReduction reduction = WordLossReduction::kMeanOverSource);

/// Late-interaction similarity: average over source words of the best
/// cosine against any target word.
double maxsim_similarity(const Matrix& source_words, const Matrix& target_words);

/// B x B matrix of maxsim_similarity(sources[i], targets[j]); rows are
/// normalized once up front.
Matrix maxsim_matrix(std::span<const Matrix> sources, std::span<const Matrix> targets);

}  // namespace cl2cm
