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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cl2cm/numkit.hpp"

namespace cl2cm {

/// Central-difference comparison of an analytic gradient.
struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor); the floor keeps
/// entries that are zero up to rounding from dominating.
inline constexpr double kRelErrorFloor = 1e-6;
double relative_error(double analytic, double numeric);

/// Compares `analytic` against central differences of `f` at `x` with step h.
GradCheckResult check_gradient(const std::string& name,
                               const std::function<double(const Matrix&)>& f,
                               const Matrix& x, const Matrix& analytic, double h = 1e-4);

struct GradCheckSuiteOptions {
  std::uint64_t seed = 7;
  double h = 1e-4;
};

/// infonce_symmetric, word_alignment_loss, kd_loss on random B=4 / M x N
/// inputs, then the end-to-end objective of a tiny model (V=10, d=4, B=3,
/// sentences of at most 6 tokens) under every ablation toggle pattern with
/// pseudo-labels and teacher held fixed.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckSuiteOptions& opts = {});

}  // namespace cl2cm
