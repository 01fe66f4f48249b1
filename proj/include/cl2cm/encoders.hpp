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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cl2cm/error.hpp"
#include "cl2cm/numkit.hpp"

namespace cl2cm {

using TokenId = std::uint32_t;

enum class Language { kSource, kTarget };

/// Parameter blocks, in checkpoint order.
enum class ParamBlock : std::size_t {
  kSrcTable = 0,
  kTgtTable,
  kSrcProjection,
  kTgtProjection,
  kVisionProjection,
};
inline constexpr std::size_t kNumParamBlocks = 5;
const char* block_name(ParamBlock block);

struct ModelDims {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t feat_dim = 0;
  std::size_t embed_dim = 32;
  std::size_t dim = 32;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Set of blocks an optimizer step may touch.
using BlockMask = std::array<bool, kNumParamBlocks>;
inline constexpr BlockMask kAllBlocks{true, true, true, true, true};

class StaleCacheError : public Error {
 public:
  explicit StaleCacheError(const std::string& what)
      : Error(ErrorCode::kStaleCache, what) {}
};

/// Trainable tables and projections of the linear dual-stream encoders plus
/// their Adam moments. The target-language table and projection are a single
/// storage shared by the cross-lingual and cross-modal pathways.
///
/// Read access through block() is counted per block so callers can verify
/// which parameters a computation touched.
class ModelParams {
 public:
  ModelParams() = default;
  /// Uniform init: tables in [-1, 1] (one-hot fan-in), projections in
  /// [-1/sqrt(fan_in), 1/sqrt(fan_in)]. Each block draws from its own stream.
  ModelParams(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }

  const Matrix& block(ParamBlock b) const;
  /// Mutable access invalidates outstanding forward caches.
  Matrix& mutable_block(ParamBlock b);

  const Matrix& first_moment(ParamBlock b) const { return m_[idx(b)]; }
  const Matrix& second_moment(ParamBlock b) const { return v_[idx(b)]; }
  Matrix& mutable_first_moment(ParamBlock b) { return m_[idx(b)]; }
  Matrix& mutable_second_moment(ParamBlock b) { return v_[idx(b)]; }
  std::uint64_t block_steps(ParamBlock b) const { return block_steps_[idx(b)]; }
  void set_block_steps(ParamBlock b, std::uint64_t n) { block_steps_[idx(b)] = n; }

  /// Number of optimizer steps applied.
  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }
  std::uint64_t version() const { return version_; }

  void reset_access_counts() const { access_.fill(0); }
  std::uint64_t access_count(ParamBlock b) const { return access_[idx(b)]; }

  /// Adam update from precomputed gradients on the masked blocks.
  void adam_step(const std::array<Matrix, kNumParamBlocks>& grads,
                 const OptimizerConfig& opt, const BlockMask& mask = kAllBlocks);

  /// Builds an all-zero model with the given dims (checkpoint loading).
  static ModelParams zeros(const ModelDims& dims, std::uint64_t seed);

 private:
  static std::size_t idx(ParamBlock b) { return static_cast<std::size_t>(b); }

  ModelDims dims_;
  std::uint64_t seed_ = 0;
  std::array<Matrix, kNumParamBlocks> blocks_;
  std::array<Matrix, kNumParamBlocks> m_;
  std::array<Matrix, kNumParamBlocks> v_;
  std::array<std::uint64_t, kNumParamBlocks> block_steps_{};
  std::uint64_t step_count_ = 0;
  std::uint64_t version_ = 0;
  mutable std::array<std::uint64_t, kNumParamBlocks> access_{};
};

using ParamGradients = std::array<Matrix, kNumParamBlocks>;

ParamGradients zero_gradients(const ModelDims& dims);

struct EncodedSentence {
  Matrix word_reps;  // L x dim
  Vector sentence_rep;
};

EncodedSentence encode_text(std::span<const TokenId> tokens, Language which,
                            const ModelParams& params);

Vector encode_vision(const Vector& feature, const ModelParams& params);

/// Encoder outputs for one batch together with what backward needs.
struct ForwardPass {
  std::vector<std::vector<TokenId>> src_tokens;
  std::vector<std::vector<TokenId>> tgt_tokens;
  std::vector<Vector> features;
  std::vector<EncodedSentence> src;
  std::vector<EncodedSentence> tgt;
  std::vector<Vector> vision;
  std::uint64_t params_version = 0;
  bool valid = false;
};

ForwardPass forward_batch(const ModelParams& params,
                          std::vector<std::vector<TokenId>> src_tokens,
                          std::vector<std::vector<TokenId>> tgt_tokens,
                          std::vector<Vector> features);

/// Gradients of the loss with respect to every encoder output of a
/// ForwardPass. Empty matrices / vectors stand for zero.
struct OutputGradients {
  std::vector<Matrix> d_src_words;
  std::vector<Matrix> d_tgt_words;
  std::vector<Vector> d_src_sentence;
  std::vector<Vector> d_tgt_sentence;
  std::vector<Vector> d_vision;

  static OutputGradients zeros_like(const ForwardPass& pass);
};

/// Chain rule through mean pooling, projections and table lookups. Throws
/// StaleCacheError if the parameters changed since `pass` was computed.
ParamGradients accumulate_gradients(const ForwardPass& pass, const OutputGradients& grads,
                                    const ModelParams& params);

/// accumulate_gradients followed by one Adam step on the masked blocks.
void backward_and_step(const ForwardPass& pass, const OutputGradients& grads,
                       ModelParams& params, const OptimizerConfig& opt,
                       const BlockMask& mask = kAllBlocks);

}  // namespace cl2cm
