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

#include <span>
#include <vector>

#include "cl2cm/numkit.hpp"

namespace cl2cm {

struct LossWeights {
  double alpha = 0.4;         // instance vs. transfer mix inside L^cm
  double lambda_level = 0.6;  // sentence vs. word mix of the teacher
  double tau = 0.07;          // distillation temperature
  double tau_contrastive = 0.07;
  bool kd_bidirectional = false;

  void validate() const;
};

/// Which loss components are active; the seven rows of the component
/// ablation are built from these four switches.
struct Toggles {
  bool cl_instance = true;
  bool word_align = true;
  bool kd_sent = true;
  bool kd_word = true;

  bool any_kd() const { return kd_sent || kd_word; }
  bool any_cl() const { return cl_instance || word_align; }
  friend bool operator==(const Toggles&, const Toggles&) = default;
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Symmetric InfoNCE over a square similarity matrix whose diagonal holds the
/// positive pairs; evaluated on S / tau_contrastive.
LossAndGrad infonce_symmetric(const Matrix& s, double tau_contrastive);

/// lambda * sent + (1 - lambda) * word.
Matrix fuse_cl_similarity(const Matrix& sent, const Matrix& word, double lambda_level);

/// Mean row KL(softmax(s_cm / tau) || softmax(s_cl / tau)). The teacher
/// s_cl is a constant; the gradient is with respect to s_cm only.
LossAndGrad kd_loss(const Matrix& s_cm, const Matrix& s_cl, double tau);

/// Similarities produced for one batch. `s_cl_sent` doubles as the
/// cross-lingual instance similarity S^c. `s_cl_word` may be empty when no
/// component needs it; `s_cl` is filled by fuse_cl_similarity.
struct BatchSimilarities {
  Matrix s_cm;
  Matrix s_cl_sent;
  Matrix s_cl_word;
  Matrix s_cl;
};

struct ObjectiveTerms {
  double cm_instance = 0.0;
  double kd = 0.0;
  double cl_instance = 0.0;
  double word = 0.0;
  double total = 0.0;
};

struct ObjectiveGrads {
  Matrix d_s_cm;
  Matrix d_s_cl_sent;
  /// d total / d word_losses[i]; identical for every pair.
  double d_word_loss = 0.0;
};

struct ObjectiveResult {
  ObjectiveTerms terms;
  ObjectiveGrads grads;
};

/// Teacher matrix selected by the kd toggles: the sentence matrix, the word
/// matrix, or their fusion when both are on.
Matrix select_teacher(const BatchSimilarities& batch, const LossWeights& weights,
                      const Toggles& toggles);

/// L = alpha * L^cm_inst + (1 - alpha) * L_kd + L^cl_inst + mean(word_losses).
/// Disabled components contribute exactly zero to value and gradients.
/// `teacher_override`, when non-null, replaces the toggle-selected teacher.
ObjectiveResult total_objective(const BatchSimilarities& batch,
                                std::span<const double> word_losses,
                                const LossWeights& weights, const Toggles& toggles,
                                const Matrix* teacher_override = nullptr);

}  // namespace cl2cm
