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


#include "cl2cm/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cl2cm/error.hpp"
#include "cl2cm/kernels.hpp"

namespace cl2cm {
namespace {

constexpr double kAbsorbThreshold = 1e150;

std::string epsilon_advice(double eps) {
  return "sinkhorn: kernel underflow/overflow at epsilon_entropy=" + std::to_string(eps) +
         "; use a larger epsilon_entropy";
}

// K(m,n) = exp(base(m,n) + alpha[m] + beta[n])
void rebuild_kernel(const std::vector<double>& base, const std::vector<double>& alpha,
                    const std::vector<double>& beta, std::vector<double>& kernel) {
  const std::size_t cols = beta.size();
  for (std::size_t m = 0; m < alpha.size(); ++m)
    for (std::size_t n = 0; n < cols; ++n)
      kernel[m * cols + n] = std::exp(base[m * cols + n] + alpha[m] + beta[n]);
}

}  // namespace

void OtConfig::validate() const {
  if (!(epsilon_entropy > 0.0)) throw ConfigError("ot: epsilon_entropy must be > 0");
  if (max_iterations < 1) throw ConfigError("ot: max_iterations must be >= 1");
  if (!(marginal_tolerance > 0.0)) throw ConfigError("ot: marginal_tolerance must be > 0");
}

TransportPlan sinkhorn_solve(const Matrix& similarity, const OtConfig& cfg) {
  cfg.validate();
  const std::size_t rows = similarity.rows();
  const std::size_t cols = similarity.cols();
  if (rows == 0 || cols == 0) throw ShapeError("sinkhorn: empty similarity matrix");

  const auto& k = kernels::active();
  const double row_target = 1.0 / static_cast<double>(rows);
  const double col_target = 1.0 / static_cast<double>(cols);

  // Subtracting the global maximum is a constant factor on K, which the
  // scaling vectors absorb exactly.
  const double peak = similarity.max();
  std::vector<double> base(rows * cols);
  for (std::size_t i = 0; i < base.size(); ++i)
    base[i] = (similarity.flat()[i] - peak) / cfg.epsilon_entropy;

  std::vector<double> alpha(rows, 0.0), beta(cols, 0.0);
  std::vector<double> kernel(rows * cols);
  rebuild_kernel(base, alpha, beta, kernel);

  std::vector<double> u(rows, 1.0), v(cols, 1.0), kv(rows), ktu(cols);
  TransportPlan result;
  double residual = 0.0;

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    k.gemv(kernel.data(), rows, cols, v.data(), kv.data());
    for (std::size_t m = 0; m < rows; ++m) {
      u[m] = row_target / kv[m];
      if (!std::isfinite(u[m])) throw NumericError(epsilon_advice(cfg.epsilon_entropy));
    }
    k.gemv_t(kernel.data(), rows, cols, u.data(), ktu.data());
    for (std::size_t n = 0; n < cols; ++n) {
      v[n] = col_target / ktu[n];
      if (!std::isfinite(v[n])) throw NumericError(epsilon_advice(cfg.epsilon_entropy));
    }

    const double big = std::max(*std::max_element(u.begin(), u.end()),
                                *std::max_element(v.begin(), v.end()));
    if (big > kAbsorbThreshold) {
      for (std::size_t m = 0; m < rows; ++m) alpha[m] += std::log(u[m]);
      for (std::size_t n = 0; n < cols; ++n) beta[n] += std::log(v[n]);
      rebuild_kernel(base, alpha, beta, kernel);
      std::fill(u.begin(), u.end(), 1.0);
      std::fill(v.begin(), v.end(), 1.0);
    }

    // Columns are exact after the v update; the row residual decides.
    k.gemv(kernel.data(), rows, cols, v.data(), kv.data());
    residual = 0.0;
    for (std::size_t m = 0; m < rows; ++m)
      residual = std::max(residual, std::abs(u[m] * kv[m] - row_target));
    result.iterations_used = it;
    if (residual <= cfg.marginal_tolerance) {
      result.converged = true;
      break;
    }
  }

  Matrix plan(rows, cols);
  for (std::size_t m = 0; m < rows; ++m)
    for (std::size_t n = 0; n < cols; ++n)
      plan(m, n) = u[m] * kernel[m * cols + n] * v[n];

  double err = 0.0;
  for (std::size_t m = 0; m < rows; ++m) {
    double s = 0.0;
    for (double x : plan.row(m)) s += x;
    err = std::max(err, std::abs(s - row_target));
  }
  for (std::size_t n = 0; n < cols; ++n) {
    double s = 0.0;
    for (std::size_t m = 0; m < rows; ++m) s += plan(m, n);
    err = std::max(err, std::abs(s - col_target));
  }
  result.final_marginal_error = err;
  result.converged = result.converged && err <= cfg.marginal_tolerance;
  result.plan = std::move(plan);
  return result;
}

double ot_objective(const Matrix& plan, const Matrix& similarity) {
  require_same_shape(plan, similarity, "ot_objective");
  double total = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i)
    total += plan.flat()[i] * similarity.flat()[i];
  return total;
}

}  // namespace cl2cm
