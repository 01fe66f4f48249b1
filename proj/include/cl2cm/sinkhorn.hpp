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

#include "cl2cm/numkit.hpp"

namespace cl2cm {

/// Entropic optimal transport settings. `epsilon_entropy` is the single
/// regularization knob: the kernel is exp(similarity / epsilon_entropy). It
/// plays the role of both the regularizer weight and the entropy scale.
struct OtConfig {
  double epsilon_entropy = 0.1;
  std::size_t max_iterations = 500;
  double marginal_tolerance = 1e-6;

  void validate() const;
};

/// M x N plan with row marginals 1/M and column marginals 1/N.
struct TransportPlan {
  Matrix plan;
  std::size_t iterations_used = 0;
  double final_marginal_error = 0.0;
  bool converged = false;
};

/// Solves max_A <A, similarity> + epsilon * H(A) over the uniform transport
/// polytope with Sinkhorn scaling. Similarity is a reward: the kernel is
/// exp(+similarity / epsilon). Throws NumericError when the kernel
/// underflows for the requested epsilon; returns an unconverged plan
/// (converged == false) when max_iterations is exhausted.
TransportPlan sinkhorn_solve(const Matrix& similarity, const OtConfig& cfg = {});

/// Total transported similarity sum_{m,n} plan(m,n) * similarity(m,n).
double ot_objective(const Matrix& plan, const Matrix& similarity);

}  // namespace cl2cm
