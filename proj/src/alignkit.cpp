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


#include "cl2cm/alignkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cl2cm/error.hpp"
#include "cl2cm/kernels.hpp"

namespace cl2cm {

PseudoLabelMatrix make_pseudo_labels(const Matrix& plan, ThresholdMode mode) {
  if (plan.empty()) throw ShapeError("make_pseudo_labels: empty plan");
  PseudoLabelMatrix out;
  out.threshold_used = plan.mean();
  out.labels = Matrix(plan.rows(), plan.cols());
  const double gamma = out.threshold_used;

  for (std::size_t m = 0; m < plan.rows(); ++m) {
    auto in = plan.row(m);
    auto lab = out.labels.row(m);
    double kept = 0.0;
    for (std::size_t n = 0; n < in.size(); ++n) {
      // sgn(0) = -1, so an entry equal to gamma is never "above".
      const bool above = in[n] > gamma;
      const bool keep = mode == ThresholdMode::kAbove ? above : !above;
      if (keep && in[n] > 0.0) {
        lab[n] = in[n];
        kept += in[n];
      }
    }
    if (kept > 0.0) {
      for (double& x : lab) x /= kept;
    } else {
      const auto best = std::max_element(in.begin(), in.end()) - in.begin();
      std::fill(lab.begin(), lab.end(), 0.0);
      lab[static_cast<std::size_t>(best)] = 1.0;
      out.fallback_rows.push_back(m);
    }
  }
  return out;
}

namespace {

double reduction_scale(std::size_t rows, WordLossReduction reduction) {
  return reduction == WordLossReduction::kMeanOverSource ? 1.0 / static_cast<double>(rows)
                                                         : 1.0;
}

}  // namespace

double word_alignment_loss(const Matrix& similarity, const PseudoLabelMatrix& labels,
                           WordLossReduction reduction) {
  require_same_shape(similarity, labels.labels, "word_alignment_loss");
  double total = 0.0;
  for (std::size_t m = 0; m < similarity.rows(); ++m) {
    auto s = similarity.row(m);
    const double peak = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double x : s) z += std::exp(x - peak);
    const double log_z = peak + std::log(z);
    for (std::size_t n = 0; n < s.size(); ++n) {
      const double target = labels.labels(m, n);
      if (target != 0.0) total -= target * (s[n] - log_z);
    }
  }
  return total * reduction_scale(similarity.rows(), reduction);
}

Matrix word_alignment_loss_grad(const Matrix& similarity, const PseudoLabelMatrix& labels,
                                WordLossReduction reduction) {
  require_same_shape(similarity, labels.labels, "word_alignment_loss_grad");
  Matrix grad = row_softmax(similarity, 1.0);
  const double scale = reduction_scale(similarity.rows(), reduction);
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad.flat()[i] = scale * (grad.flat()[i] - labels.labels.flat()[i]);
  return grad;
}

double maxsim_similarity(const Matrix& source_words, const Matrix& target_words) {
  const Matrix sim = cosine_matrix(source_words, target_words);
  double total = 0.0;
  for (std::size_t m = 0; m < sim.rows(); ++m) {
    auto r = sim.row(m);
    total += *std::max_element(r.begin(), r.end());
  }
  return total / static_cast<double>(sim.rows());
}

namespace {

Matrix normalized_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = std::sqrt(kernels::dot(row, row));
    if (n == 0.0) {
      throw ZeroNormError("maxsim_matrix: zero word vector at row " + std::to_string(r),
                          static_cast<long>(r));
    }
    for (double& x : row) x /= n;
  }
  return out;
}

}  // namespace

Matrix maxsim_matrix(std::span<const Matrix> sources, std::span<const Matrix> targets) {
  std::vector<Matrix> src, tgt;
  src.reserve(sources.size());
  tgt.reserve(targets.size());
  for (const Matrix& m : sources) src.push_back(normalized_rows(m));
  for (const Matrix& m : targets) tgt.push_back(normalized_rows(m));
  const auto& k = kernels::active();
  Matrix out(src.size(), tgt.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      if (src[i].cols() != tgt[j].cols()) throw ShapeError("maxsim_matrix: width mismatch");
      double total = 0.0;
      for (std::size_t m = 0; m < src[i].rows(); ++m) {
        double best = -1.0;
        for (std::size_t n = 0; n < tgt[j].rows(); ++n)
          best = std::max(best, k.dot(src[i].row(m).data(), tgt[j].row(n).data(),
                                      src[i].cols()));
        total += std::clamp(best, -1.0, 1.0);
      }
      out(i, j) = total / static_cast<double>(src[i].rows());
    }
  }
  return out;
}

}  // namespace cl2cm
