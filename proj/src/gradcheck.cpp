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


#include "cl2cm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cl2cm/alignkit.hpp"
#include "cl2cm/losses.hpp"
#include "cl2cm/sinkhorn.hpp"
#include "cl2cm/trainer.hpp"

namespace cl2cm {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return Matrix(rows, cols, std::move(v));
}

void merge(GradCheckResult& into, const GradCheckResult& r) {
  into.max_rel_error = std::max(into.max_rel_error, r.max_rel_error);
  into.max_abs_error = std::max(into.max_abs_error, r.max_abs_error);
  into.entries += r.entries;
}

struct TinyBatch {
  std::vector<std::vector<TokenId>> src, tgt;
  std::vector<Vector> feats;
};

TinyBatch tiny_batch(std::size_t b, std::size_t vocab, std::size_t feat_dim, Rng& rng) {
  TinyBatch out;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<TokenId> s(2 + rng.index(5)), t(2 + rng.index(5));
    for (auto& x : s) x = static_cast<TokenId>(rng.index(vocab));
    for (auto& x : t) x = static_cast<TokenId>(rng.index(vocab));
    std::vector<double> f(feat_dim);
    for (double& x : f) x = rng.normal();
    out.src.push_back(std::move(s));
    out.tgt.push_back(std::move(t));
    out.feats.emplace_back(std::move(f));
  }
  return out;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradient(const std::string& name,
                               const std::function<double(const Matrix&)>& f,
                               const Matrix& x, const Matrix& analytic, double h) {
  require_same_shape(x, analytic, "check_gradient");
  GradCheckResult out{name, 0.0, 0.0, x.size()};
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.flat()[i];
    probe.flat()[i] = orig + h;
    const double up = f(probe);
    probe.flat()[i] = orig - h;
    const double down = f(probe);
    probe.flat()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.flat()[i];
    out.max_abs_error = std::max(out.max_abs_error, std::abs(a - numeric));
    out.max_rel_error = std::max(out.max_rel_error, relative_error(a, numeric));
  }
  return out;
}

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckSuiteOptions& opts) {
  Rng rng(opts.seed, 0);
  std::vector<GradCheckResult> results;

  {
    GradCheckResult agg{"infonce_symmetric"};
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix s = random_matrix(4, 4, 1.0, rng);
      const double tau = trial == 0 ? 1.0 : 0.5;
      const auto lg = infonce_symmetric(s, tau);
      merge(agg, check_gradient(
                     agg.name, [&](const Matrix& m) { return infonce_symmetric(m, tau).loss; },
                     s, lg.grad, opts.h));
    }
    results.push_back(agg);
  }

  {
    GradCheckResult agg{"word_alignment_loss"};
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix sim = random_matrix(2 + rng.index(5), 2 + rng.index(5), 1.0, rng);
      const auto labels = make_pseudo_labels(sinkhorn_solve(sim, OtConfig{}));
      const Matrix g = word_alignment_loss_grad(sim, labels);
      merge(agg, check_gradient(
                     agg.name, [&](const Matrix& m) { return word_alignment_loss(m, labels); },
                     sim, g, opts.h));
    }
    results.push_back(agg);
  }

  {
    GradCheckResult agg{"kd_loss"};
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix s_cm = random_matrix(4, 4, 1.0, rng);
      const Matrix s_cl = random_matrix(4, 4, 1.0, rng);
      const double tau = trial == 0 ? 1.0 : 0.5;
      const auto lg = kd_loss(s_cm, s_cl, tau);
      merge(agg, check_gradient(
                     agg.name, [&](const Matrix& m) { return kd_loss(m, s_cl, tau).loss; },
                     s_cm, lg.grad, opts.h));
    }
    results.push_back(agg);
  }

  {
    GradCheckResult agg{"total_objective"};
    const ModelDims dims{10, 10, 4, 4, 4};
    for (const Toggles& toggles : ablation_grid()) {
      for (bool bidirectional : {false, true}) {
        TrainConfig cfg;
        cfg.toggles = toggles;
        cfg.weights.tau = 0.5;
        cfg.weights.tau_contrastive = 0.5;
        cfg.weights.kd_bidirectional = bidirectional;
        const ModelParams base(dims, opts.seed + 17);
        const TinyBatch batch = tiny_batch(3, dims.src_vocab, dims.feat_dim, rng);
        const ForwardPass pass = forward_batch(base, batch.src, batch.tgt, batch.feats);
        const BatchObjective obj = batch_objective(pass, cfg);
        const ParamGradients analytic = accumulate_gradients(pass, obj.grads, base);

        for (std::size_t bi = 0; bi < kNumParamBlocks; ++bi) {
          const auto block = static_cast<ParamBlock>(bi);
          const auto f = [&](const Matrix& values) {
            ModelParams probe = base;
            probe.mutable_block(block) = values;
            const ForwardPass p = forward_batch(probe, batch.src, batch.tgt, batch.feats);
            return batch_objective(p, cfg, ObjectiveScope::kFull, &obj.targets).terms.total;
          };
          merge(agg, check_gradient(agg.name, f, base.block(block), analytic[bi], opts.h));
        }
      }
    }
    results.push_back(agg);
  }
  return results;
}

}  // namespace cl2cm
