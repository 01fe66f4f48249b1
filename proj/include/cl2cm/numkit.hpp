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
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace cl2cm {

/// Dense vector of doubles. Entries are checked to be finite on construction.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  explicit Vector(std::vector<double> data);
  Vector(std::initializer_list<double> init);

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double norm() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix of doubles. Entries are checked to be finite on
/// construction; element writes through operator() are not re-validated.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  Matrix transposed() const;
  double sum() const;
  double max() const;
  double mean() const { return sum() / static_cast<double>(data_.size()); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

/// Largest absolute entrywise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Seeded pseudo-random source. Identical (seed, stream) pairs produce
/// identical sequences within a build.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Cosine of two vectors, clamped to [-1, 1]. Throws ZeroNormError when
/// either input has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);
inline double cosine(const Vector& a, const Vector& b) {
  return cosine(a.span(), b.span());
}

/// Same as cosine() but reports a zero-norm input as nullopt.
std::optional<double> try_cosine(std::span<const double> a,
                                 std::span<const double> b);

/// Pairwise cosines between the rows of `a` (M x d) and `b` (N x d).
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

/// Backpropagates an upstream gradient through cosine_matrix. `sim` must be
/// the forward result for (a, b). Returns (d a, d b).
std::pair<Matrix, Matrix> cosine_matrix_backward(const Matrix& a, const Matrix& b,
                                                 const Matrix& sim,
                                                 const Matrix& upstream);

/// Row-wise softmax of `s / temperature`, stabilized by max subtraction.
Matrix row_softmax(const Matrix& s, double temperature = 1.0);

/// Column-wise softmax of `s / temperature`.
Matrix col_softmax(const Matrix& s, double temperature = 1.0);

/// Mean over rows of KL(P_i || Q_i). Q is clamped below at 1e-12 and
/// 0 * log 0 is taken as 0.
double kl_divergence_rows(const Matrix& p, const Matrix& q);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace cl2cm
