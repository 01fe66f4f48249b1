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


#include "cl2cm/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cl2cm/error.hpp"
#include "cl2cm/kernels.hpp"

namespace cl2cm {
namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(what) + ": non-finite entry at flat index " +
                         std::to_string(i));
    }
  }
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

const char* error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "shape";
    case ErrorCode::kZeroNorm: return "zero_norm";
    case ErrorCode::kNonFinite: return "numeric";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kStaleCache: return "stale_cache";
    case ErrorCode::kGeneration: return "generation";
  }
  return "runtime";
}

Vector::Vector(std::size_t dim, double fill) : data_(dim, fill) {
  require_finite(data_, "Vector");
}

Vector::Vector(std::vector<double> data) : data_(std::move(data)) {
  require_finite(data_, "Vector");
}

Vector::Vector(std::initializer_list<double> init) : data_(init) {
  require_finite(data_, "Vector");
}

double Vector::norm() const { return std::sqrt(kernels::dot(data_, data_)); }

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Matrix::max() const { return *std::max_element(data_.begin(), data_.end()); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) +
                     " vs " + shape_str(b));
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.flat()[i] - b.flat()[i]));
  return worst;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::optional<double> try_cosine(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine: dimension mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(kernels::dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  auto c = try_cosine(a, b);
  if (!c) throw ZeroNormError("cosine: zero-norm input", -1);
  return *c;
}

namespace {

// Row norms of `m`; throws naming the first zero row.
std::vector<double> row_norms(const Matrix& m, const char* which) {
  std::vector<double> norms(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    norms[r] = std::sqrt(kernels::dot(m.row(r), m.row(r)));
    if (norms[r] == 0.0) {
      throw ZeroNormError(std::string("cosine_matrix: zero row ") + std::to_string(r) +
                              " in " + which,
                          static_cast<long>(r));
    }
  }
  return norms;
}

}  // namespace

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("cosine_matrix: width mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
  const auto na = row_norms(a, "left operand");
  const auto nb = row_norms(b, "right operand");
  Matrix out(a.rows(), b.rows());
  for (std::size_t m = 0; m < a.rows(); ++m) {
    for (std::size_t n = 0; n < b.rows(); ++n) {
      out(m, n) = std::clamp(kernels::dot(a.row(m), b.row(n)) / (na[m] * nb[n]), -1.0,
                             1.0);
    }
  }
  return out;
}

std::pair<Matrix, Matrix> cosine_matrix_backward(const Matrix& a, const Matrix& b,
                                                 const Matrix& sim,
                                                 const Matrix& upstream) {
  if (sim.rows() != a.rows() || sim.cols() != b.rows())
    throw ShapeError("cosine_matrix_backward: similarity shape mismatch");
  require_same_shape(sim, upstream, "cosine_matrix_backward");
  const auto na = row_norms(a, "left operand");
  const auto nb = row_norms(b, "right operand");
  Matrix da(a.rows(), a.cols());
  Matrix db(b.rows(), b.cols());
  // d cos / d a = b / (|a||b|) - cos * a / |a|^2, symmetric for b.
  for (std::size_t m = 0; m < a.rows(); ++m) {
    for (std::size_t n = 0; n < b.rows(); ++n) {
      const double g = upstream(m, n);
      if (g == 0.0) continue;
      const double s = sim(m, n);
      kernels::axpy(g / (na[m] * nb[n]), b.row(n), da.row(m));
      kernels::axpy(-g * s / (na[m] * na[m]), a.row(m), da.row(m));
      kernels::axpy(g / (na[m] * nb[n]), a.row(m), db.row(n));
      kernels::axpy(-g * s / (nb[n] * nb[n]), b.row(n), db.row(n));
    }
  }
  return {std::move(da), std::move(db)};
}

Matrix row_softmax(const Matrix& s, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorCode::kInvalidArgument, "row_softmax: temperature must be > 0");
  Matrix out(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto in = s.row(r);
    auto o = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp((in[c] - peak) / temperature);
      total += o[c];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

Matrix col_softmax(const Matrix& s, double temperature) {
  return row_softmax(s.transposed(), temperature).transposed();
}

double kl_divergence_rows(const Matrix& p, const Matrix& q) {
  require_same_shape(p, q, "kl_divergence_rows");
  if (p.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double row_kl = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const double pv = p(r, c);
      if (pv <= 0.0) continue;
      row_kl += pv * (std::log(pv) - std::log(std::max(q(r, c), kProbabilityFloor)));
    }
    total += row_kl;
  }
  return total / static_cast<double>(p.rows());
}

}  // namespace cl2cm
