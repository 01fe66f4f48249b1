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

#include <cmath>

#include <gtest/gtest.h>

#include "cl2cm/error.hpp"
#include "test_util.hpp"

namespace cl2cm {
namespace {

using testing::random_matrix;

// Loop form of the symmetric InfoNCE loss.
double infonce_oracle(const Matrix& s, double tau) {
  const std::size_t b = s.rows();
  double total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    double row = 0, col = 0;
    for (std::size_t j = 0; j < b; ++j) {
      row += std::exp(s(i, j) / tau);
      col += std::exp(s(j, i) / tau);
    }
    total -= std::log(std::exp(s(i, i) / tau) / row) + std::log(std::exp(s(i, i) / tau) / col);
  }
  return total / (2.0 * b);
}

double kd_oracle(const Matrix& cm, const Matrix& cl, double tau) {
  double total = 0;
  for (std::size_t i = 0; i < cm.rows(); ++i) {
    double zp = 0, zq = 0;
    for (std::size_t j = 0; j < cm.cols(); ++j) {
      zp += std::exp(cm(i, j) / tau);
      zq += std::exp(cl(i, j) / tau);
    }
    for (std::size_t j = 0; j < cm.cols(); ++j) {
      const double p = std::exp(cm(i, j) / tau) / zp, q = std::exp(cl(i, j) / tau) / zq;
      total += p * std::log(p / q);
    }
  }
  return total / static_cast<double>(cm.rows());
}

Matrix numeric_grad(const std::function<double(const Matrix&)>& f, const Matrix& x) {
  Matrix g(x.rows(), x.cols());
  const double h = 1e-5;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Matrix up = x, dn = x;
    up.flat()[k] += h;
    dn.flat()[k] -= h;
    g.flat()[k] = (f(up) - f(dn)) / (2 * h);
  }
  return g;
}

double max_rel(const Matrix& a, const Matrix& n) {
  double worst = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::max({std::abs(a.flat()[k]), std::abs(n.flat()[k]), 1e-6});
    worst = std::max(worst, std::abs(a.flat()[k] - n.flat()[k]) / d);
  }
  return worst;
}

TEST(InfoNce, SingleCandidateIsZero) {
  const auto r = infonce_symmetric(Matrix{{0.3}}, 0.07);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad(0, 0), 0.0);
}

TEST(InfoNce, IdentityClosedForm) {
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  const auto r = infonce_symmetric(Matrix::identity(2), 1.0);
  EXPECT_NEAR(r.loss, expected, 1e-12);
  EXPECT_NEAR(r.loss, 0.313262, 1e-6);
}

TEST(InfoNce, MatchesLoopOracle) {
  Rng rng(301);
  for (double tau : {1.0, 0.3, 0.07}) {
    const Matrix s = random_matrix(5, 5, rng);
    EXPECT_NEAR(infonce_symmetric(s, tau).loss, infonce_oracle(s, tau), 1e-10);
  }
}

TEST(InfoNce, GlobalShiftInvariant) {
  Rng rng(303);
  const Matrix s = random_matrix(4, 4, rng);
  Matrix shifted = s;
  for (double& x : shifted.flat()) x += 3.25;
  const auto a = infonce_symmetric(s, 0.5), b = infonce_symmetric(shifted, 0.5);
  EXPECT_NEAR(a.loss, b.loss, 1e-10);
  EXPECT_LT(max_abs_diff(a.grad, b.grad), 1e-10);
}

TEST(InfoNce, NonNegativeAndVanishesWithDominantDiagonal) {
  Rng rng(307);
  for (int t = 0; t < 30; ++t) EXPECT_GE(infonce_symmetric(random_matrix(4, 4, rng), 0.2).loss, 0.0);
  Matrix s = random_matrix(4, 4, rng);
  for (std::size_t i = 0; i < 4; ++i) s(i, i) += 20.0;
  EXPECT_LT(infonce_symmetric(s, 1.0).loss, 1e-7);
}

TEST(InfoNce, GradientMatchesFiniteDifferences) {
  Rng rng(311);
  const Matrix s = random_matrix(4, 4, rng);
  const auto r = infonce_symmetric(s, 0.5);
  const Matrix n = numeric_grad([](const Matrix& m) { return infonce_symmetric(m, 0.5).loss; }, s);
  EXPECT_LT(max_rel(r.grad, n), 1e-6);
}

TEST(InfoNce, RejectsNonSquare) {
  EXPECT_THROW(infonce_symmetric(Matrix(2, 3), 1.0), ShapeError);
  EXPECT_THROW(infonce_symmetric(Matrix(2, 2), 0.0), Error);
}

TEST(Fuse, Examples) {
  Rng rng(313);
  const Matrix a = random_matrix(3, 3, rng), b = random_matrix(3, 3, rng);
  EXPECT_EQ(fuse_cl_similarity(a, b, 1.0), a);
  EXPECT_EQ(fuse_cl_similarity(a, b, 0.0), b);
  EXPECT_NEAR(fuse_cl_similarity(Matrix{{1}}, Matrix{{0}}, 0.6)(0, 0), 0.6, 1e-15);
  EXPECT_THROW(fuse_cl_similarity(a, Matrix(2, 2), 0.5), ShapeError);
  EXPECT_THROW(fuse_cl_similarity(a, b, 1.5), Error);
}

TEST(KdLoss, EqualInputsGiveZero) {
  Rng rng(317);
  const Matrix s = random_matrix(4, 4, rng);
  const auto r = kd_loss(s, s, 0.07);
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  for (double x : r.grad.flat()) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(KdLoss, ClosedFormExample) {
  const auto r = kd_loss(Matrix(2, 2, 0.0), Matrix::identity(2), 1.0);
  const double q = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(r.loss, 0.5 * std::log(0.5 / q) + 0.5 * std::log(0.5 / (1 - q)), 1e-12);
  EXPECT_NEAR(r.loss, 0.12015, 1e-4);
}

TEST(KdLoss, MatchesOracleAndFiniteDifferences) {
  Rng rng(331);
  for (double tau : {1.0, 0.5, 0.07}) {
    const Matrix cm = random_matrix(4, 4, rng), cl = random_matrix(4, 4, rng);
    const auto r = kd_loss(cm, cl, tau);
    EXPECT_NEAR(r.loss, kd_oracle(cm, cl, tau), 1e-10);
    const Matrix n = numeric_grad([&](const Matrix& m) { return kd_loss(m, cl, tau).loss; }, cm);
    EXPECT_LT(max_rel(r.grad, n), tau < 0.1 ? 1e-3 : 1e-6);
    for (std::size_t i = 0; i < 4; ++i) {
      double sum = 0;
      for (double x : r.grad.row(i)) sum += x;
      EXPECT_NEAR(sum, 0.0, 1e-10);
    }
  }
}

TEST(KdLoss, ShapeMismatch) {
  EXPECT_THROW(kd_loss(Matrix(2, 2), Matrix(3, 3), 1.0), ShapeError);
}

BatchSimilarities random_batch(std::size_t b, Rng& rng) {
  BatchSimilarities batch;
  batch.s_cm = random_matrix(b, b, rng);
  batch.s_cl_sent = random_matrix(b, b, rng);
  batch.s_cl_word = random_matrix(b, b, rng);
  return batch;
}

TEST(TotalObjective, BaselineIsAlphaTimesInstance) {
  Rng rng(337);
  const BatchSimilarities batch = random_batch(4, rng);
  const LossWeights w;
  const Toggles off{false, false, false, false};
  const std::vector<double> word{0.9, 1.1, 0.4, 0.2};
  const auto r = total_objective(batch, word, w, off);
  const auto inst = infonce_symmetric(batch.s_cm, w.tau_contrastive);
  EXPECT_NEAR(r.terms.total, w.alpha * inst.loss, 1e-15);
  EXPECT_EQ(r.terms.kd, 0.0);
  EXPECT_EQ(r.terms.cl_instance, 0.0);
  EXPECT_EQ(r.terms.word, 0.0);
  EXPECT_EQ(r.grads.d_word_loss, 0.0);
  for (double x : r.grads.d_s_cl_sent.flat()) EXPECT_EQ(x, 0.0);
}

TEST(TotalObjective, FullEqualsHandComposedSum) {
  Rng rng(347);
  const BatchSimilarities batch = random_batch(5, rng);
  LossWeights w;
  w.tau = 0.3;
  w.tau_contrastive = 0.2;
  const std::vector<double> word{0.5, 0.25, 1.0, 0.75, 0.0};
  const auto r = total_objective(batch, word, w, Toggles{});
  const Matrix teacher = fuse_cl_similarity(batch.s_cl_sent, batch.s_cl_word, w.lambda_level);
  const double expected = w.alpha * infonce_symmetric(batch.s_cm, w.tau_contrastive).loss +
                          (1 - w.alpha) * kd_loss(batch.s_cm, teacher, w.tau).loss +
                          infonce_symmetric(batch.s_cl_sent, w.tau_contrastive).loss + 0.5;
  EXPECT_NEAR(r.terms.total, expected, 1e-12);
  EXPECT_NEAR(r.grads.d_word_loss, 1.0 / 5.0, 1e-15);
}

TEST(TotalObjective, AlphaOneIgnoresKd) {
  Rng rng(349);
  BatchSimilarities a = random_batch(3, rng), b = a;
  b.s_cl_word = random_matrix(3, 3, rng);
  b.s_cl_sent = random_matrix(3, 3, rng);
  LossWeights w;
  w.alpha = 1.0;
  const Toggles kd_only{false, false, true, true};
  const auto ra = total_objective(a, {}, w, kd_only);
  const auto rb = total_objective(b, {}, w, kd_only);
  EXPECT_EQ(ra.terms.total, rb.terms.total);
  EXPECT_EQ(ra.grads.d_s_cm, rb.grads.d_s_cm);
}

TEST(TotalObjective, TeacherSelection) {
  Rng rng(353);
  const BatchSimilarities batch = random_batch(3, rng);
  const LossWeights w;
  EXPECT_EQ(select_teacher(batch, w, {true, true, true, false}), batch.s_cl_sent);
  EXPECT_EQ(select_teacher(batch, w, {true, true, false, true}), batch.s_cl_word);
  EXPECT_EQ(select_teacher(batch, w, {true, true, true, true}),
            fuse_cl_similarity(batch.s_cl_sent, batch.s_cl_word, w.lambda_level));
}

TEST(TotalObjective, ComponentIsolation) {
  Rng rng(359);
  const BatchSimilarities batch = random_batch(4, rng);
  const std::vector<double> word{0.3, 0.6, 0.9, 1.2};
  const LossWeights w;
  const auto base = total_objective(batch, word, w, {true, true, false, false});
  for (const Toggles t : {Toggles{true, true, true, false}, Toggles{true, true, false, true},
                          Toggles{true, true, true, true}}) {
    const auto r = total_objective(batch, word, w, t);
    EXPECT_EQ(r.terms.cm_instance, base.terms.cm_instance);
    EXPECT_EQ(r.terms.cl_instance, base.terms.cl_instance);
    EXPECT_EQ(r.terms.word, base.terms.word);
    EXPECT_EQ(r.grads.d_s_cl_sent, base.grads.d_s_cl_sent);
  }
}

TEST(TotalObjective, GradientMatchesFiniteDifferences) {
  Rng rng(367);
  for (bool bidir : {false, true}) {
    BatchSimilarities batch = random_batch(4, rng);
    LossWeights w;
    w.tau = 0.5;
    w.tau_contrastive = 0.5;
    w.kd_bidirectional = bidir;
    const Toggles all;
    const std::vector<double> word(4, 0.5);
    const Matrix teacher = select_teacher(batch, w, all);
    const auto r = total_objective(batch, word, w, all, &teacher);
    const auto f_cm = [&](const Matrix& m) {
      BatchSimilarities b = batch;
      b.s_cm = m;
      return total_objective(b, word, w, all, &teacher).terms.total;
    };
    const auto f_cl = [&](const Matrix& m) {
      BatchSimilarities b = batch;
      b.s_cl_sent = m;
      return total_objective(b, word, w, all, &teacher).terms.total;
    };
    EXPECT_LT(max_rel(r.grads.d_s_cm, numeric_grad(f_cm, batch.s_cm)), 1e-6);
    EXPECT_LT(max_rel(r.grads.d_s_cl_sent, numeric_grad(f_cl, batch.s_cl_sent)), 1e-6);
  }
}

TEST(TotalObjective, BidirectionalAveragesBothDirections) {
  Rng rng(373);
  const BatchSimilarities batch = random_batch(4, rng);
  LossWeights w;
  w.kd_bidirectional = true;
  const Matrix teacher = select_teacher(batch, w, Toggles{});
  const double rows = kd_loss(batch.s_cm, teacher, w.tau).loss;
  const double cols = kd_loss(batch.s_cm.transposed(), teacher.transposed(), w.tau).loss;
  const auto r = total_objective(batch, std::vector<double>(4, 0.0), w, Toggles{});
  EXPECT_NEAR(r.terms.kd, 0.5 * (rows + cols), 1e-12);
}

TEST(LossWeights, Validation) {
  LossWeights w;
  EXPECT_NO_THROW(w.validate());
  w.alpha = -0.1;
  EXPECT_THROW(w.validate(), ConfigError);
  w = {};
  w.tau = 0;
  EXPECT_THROW(w.validate(), ConfigError);
}

}  // namespace
}  // namespace cl2cm
