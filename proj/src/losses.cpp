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


#include "cl2cm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cl2cm/error.hpp"

namespace cl2cm {

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("weights: alpha must be in [0,1]");
  if (!(lambda_level >= 0.0 && lambda_level <= 1.0))
    throw ConfigError("weights: lambda_level must be in [0,1]");
  if (!(tau > 0.0)) throw ConfigError("weights: tau must be > 0");
  if (!(tau_contrastive > 0.0)) throw ConfigError("weights: tau_contrastive must be > 0");
}

LossAndGrad infonce_symmetric(const Matrix& s, double tau_contrastive) {
  if (s.rows() != s.cols()) {
    throw ShapeError("infonce_symmetric: expected a square matrix, got " +
                     std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  }
  const std::size_t b = s.rows();
  LossAndGrad out{0.0, Matrix(b, b)};
  if (b == 0) return out;
  const Matrix by_row = row_softmax(s, tau_contrastive);
  const Matrix by_col = col_softmax(s, tau_contrastive);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    total += std::log(by_row(i, i)) + std::log(by_col(i, i));
  }
  const double scale = 1.0 / (2.0 * static_cast<double>(b));
  out.loss = -scale * total;
  // Each half contributes (softmax - onehot) / tau, row-wise and column-wise.
  const double g = scale / tau_contrastive;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double delta = i == j ? 1.0 : 0.0;
      out.grad(i, j) = g * ((by_row(i, j) - delta) + (by_col(i, j) - delta));
    }
  }
  return out;
}

Matrix fuse_cl_similarity(const Matrix& sent, const Matrix& word, double lambda_level) {
  require_same_shape(sent, word, "fuse_cl_similarity");
  if (!(lambda_level >= 0.0 && lambda_level <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "fuse_cl_similarity: lambda_level outside [0,1]");
  if (lambda_level == 1.0) return sent;
  if (lambda_level == 0.0) return word;
  Matrix out(sent.rows(), sent.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.flat()[i] =
        lambda_level * sent.flat()[i] + (1.0 - lambda_level) * word.flat()[i];
  }
  return out;
}

LossAndGrad kd_loss(const Matrix& s_cm, const Matrix& s_cl, double tau) {
  require_same_shape(s_cm, s_cl, "kd_loss");
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kd_loss: tau must be > 0");
  const Matrix student = row_softmax(s_cm, tau);
  const Matrix teacher = row_softmax(s_cl, tau);
  LossAndGrad out{kl_divergence_rows(student, teacher), Matrix(s_cm.rows(), s_cm.cols())};
  if (s_cm.rows() == 0) return out;
  // d KL(p||q) / d s_j = p_j (log p_j - log q_j - KL) / tau, per row.
  const double scale = 1.0 / (static_cast<double>(s_cm.rows()) * tau);
  for (std::size_t r = 0; r < s_cm.rows(); ++r) {
    double row_kl = 0.0;
    for (std::size_t c = 0; c < s_cm.cols(); ++c) {
      const double p = student(r, c);
      if (p > 0.0)
        row_kl += p * (std::log(p) - std::log(std::max(teacher(r, c), kProbabilityFloor)));
    }
    for (std::size_t c = 0; c < s_cm.cols(); ++c) {
      const double p = student(r, c);
      if (p <= 0.0) continue;
      const double log_ratio =
          std::log(p) - std::log(std::max(teacher(r, c), kProbabilityFloor));
      out.grad(r, c) = scale * p * (log_ratio - row_kl);
    }
  }
  return out;
}

Matrix select_teacher(const BatchSimilarities& batch, const LossWeights& weights,
                      const Toggles& toggles) {
  if (toggles.kd_sent && toggles.kd_word) {
    if (!batch.s_cl.empty()) return batch.s_cl;
    return fuse_cl_similarity(batch.s_cl_sent, batch.s_cl_word, weights.lambda_level);
  }
  if (toggles.kd_sent) return batch.s_cl_sent;
  if (toggles.kd_word) return batch.s_cl_word;
  throw Error(ErrorCode::kInvalidArgument, "select_teacher: no kd toggle enabled");
}

ObjectiveResult total_objective(const BatchSimilarities& batch,
                                std::span<const double> word_losses,
                                const LossWeights& weights, const Toggles& toggles,
                                const Matrix* teacher_override) {
  const std::size_t b = batch.s_cm.rows();
  if (batch.s_cm.cols() != b) throw ShapeError("total_objective: s_cm must be square");
  ObjectiveResult out;
  out.grads.d_s_cm = Matrix(b, b);
  out.grads.d_s_cl_sent = Matrix(b, b);
  auto& t = out.terms;

  const LossAndGrad cm = infonce_symmetric(batch.s_cm, weights.tau_contrastive);
  t.cm_instance = cm.loss;
  for (std::size_t i = 0; i < cm.grad.size(); ++i)
    out.grads.d_s_cm.flat()[i] = weights.alpha * cm.grad.flat()[i];

  if (toggles.any_kd()) {
    const Matrix teacher = teacher_override != nullptr
                               ? *teacher_override
                               : select_teacher(batch, weights, toggles);
    require_same_shape(batch.s_cm, teacher, "total_objective teacher");
    LossAndGrad kd = kd_loss(batch.s_cm, teacher, weights.tau);
    if (weights.kd_bidirectional) {
      const LossAndGrad kd_t =
          kd_loss(batch.s_cm.transposed(), teacher.transposed(), weights.tau);
      const Matrix back = kd_t.grad.transposed();
      kd.loss = 0.5 * (kd.loss + kd_t.loss);
      for (std::size_t i = 0; i < kd.grad.size(); ++i)
        kd.grad.flat()[i] = 0.5 * (kd.grad.flat()[i] + back.flat()[i]);
    }
    t.kd = kd.loss;
    for (std::size_t i = 0; i < kd.grad.size(); ++i)
      out.grads.d_s_cm.flat()[i] += (1.0 - weights.alpha) * kd.grad.flat()[i];
  }

  if (toggles.cl_instance) {
    require_same_shape(batch.s_cm, batch.s_cl_sent, "total_objective s_cl_sent");
    const LossAndGrad cl = infonce_symmetric(batch.s_cl_sent, weights.tau_contrastive);
    t.cl_instance = cl.loss;
    out.grads.d_s_cl_sent = cl.grad;
  }

  if (toggles.word_align) {
    if (word_losses.size() != b)
      throw ShapeError("total_objective: expected one word loss per pair");
    double sum = 0.0;
    for (double w : word_losses) sum += w;
    t.word = b == 0 ? 0.0 : sum / static_cast<double>(b);
    out.grads.d_word_loss = b == 0 ? 0.0 : 1.0 / static_cast<double>(b);
  }

  t.total = weights.alpha * t.cm_instance + (1.0 - weights.alpha) * t.kd +
            t.cl_instance + t.word;
  return out;
}

}  // namespace cl2cm
