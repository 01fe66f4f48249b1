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


#include "cl2cm/kernels.hpp"

#include <cstdlib>
#include <vector>

#include <gtest/gtest.h>

#include "cl2cm/numkit.hpp"

namespace cl2cm {
namespace {

std::vector<double> draw(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// Sizes straddle the 4- and 8-element unroll boundaries.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 31, 32, 33, 100, 257};

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    simd_ = kernels::avx2_kernels();
    if (simd_ == nullptr) GTEST_SKIP() << "no AVX2/FMA on this host";
  }
  const kernels::KernelTable& ref_ = kernels::scalar_kernels();
  const kernels::KernelTable* simd_ = nullptr;
};

TEST_F(KernelEquivalence, Dot) {
  Rng rng(1);
  for (std::size_t n : kSizes) {
    const auto x = draw(n, rng), y = draw(n, rng);
    double mag = 0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(x[i] * y[i]);
    EXPECT_NEAR(ref_.dot(x.data(), y.data(), n), simd_->dot(x.data(), y.data(), n),
                1e-14 * (1.0 + mag))
        << "n=" << n;
  }
}

TEST_F(KernelEquivalence, Axpy) {
  Rng rng(2);
  for (std::size_t n : kSizes) {
    const auto x = draw(n, rng);
    auto y1 = draw(n, rng);
    auto y2 = y1;
    ref_.axpy(0.37, x.data(), y1.data(), n);
    simd_->axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15) << "n=" << n;
  }
}

TEST_F(KernelEquivalence, GemvBothOrientations) {
  Rng rng(3);
  for (std::size_t rows : {1, 3, 8, 33}) {
    for (std::size_t cols : kSizes) {
      if (cols == 0) continue;
      const auto a = draw(rows * cols, rng);
      const auto x = draw(cols, rng), xt = draw(rows, rng);
      std::vector<double> y1(rows), y2(rows), z1(cols), z2(cols);
      ref_.gemv(a.data(), rows, cols, x.data(), y1.data());
      simd_->gemv(a.data(), rows, cols, x.data(), y2.data());
      ref_.gemv_t(a.data(), rows, cols, xt.data(), z1.data());
      simd_->gemv_t(a.data(), rows, cols, xt.data(), z2.data());
      for (std::size_t i = 0; i < rows; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-12 * cols);
      for (std::size_t j = 0; j < cols; ++j) EXPECT_NEAR(z1[j], z2[j], 1e-12 * rows);
    }
  }
}

TEST(Kernels, ScalarMatchesNaiveLoops) {
  Rng rng(4);
  const auto& k = kernels::scalar_kernels();
  const std::size_t rows = 5, cols = 7;
  const auto a = draw(rows * cols, rng), x = draw(cols, rng), xt = draw(rows, rng);
  std::vector<double> y(rows), z(cols);
  k.gemv(a.data(), rows, cols, x.data(), y.data());
  k.gemv_t(a.data(), rows, cols, xt.data(), z.data());
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
    EXPECT_NEAR(y[i], s, 1e-14);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < rows; ++i) s += a[i * cols + j] * xt[i];
    EXPECT_NEAR(z[j], s, 1e-14);
  }
}

TEST(Kernels, ActiveHonoursOverride) {
  const char* forced = std::getenv("CL2CM_KERNELS");
  if (forced != nullptr && std::string(forced) == "scalar") {
    EXPECT_EQ(&kernels::active(), &kernels::scalar_kernels());
  } else if (kernels::avx2_kernels() != nullptr) {
    EXPECT_EQ(&kernels::active(), kernels::avx2_kernels());
  } else {
    EXPECT_EQ(&kernels::active(), &kernels::scalar_kernels());
  }
}

}  // namespace
}  // namespace cl2cm
