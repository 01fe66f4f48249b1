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


#include "cl2cm/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cl2cm/kernels.hpp"

namespace cl2cm {
namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  std::vector<double> data(rows * cols);
  for (double& x : data) x = rng.uniform(-scale, scale);
  return Matrix(rows, cols, std::move(data));
}

std::array<std::size_t, 2> block_shape(const ModelDims& d, ParamBlock b) {
  switch (b) {
    case ParamBlock::kSrcTable: return {d.src_vocab, d.embed_dim};
    case ParamBlock::kTgtTable: return {d.tgt_vocab, d.embed_dim};
    case ParamBlock::kSrcProjection: return {d.embed_dim, d.dim};
    case ParamBlock::kTgtProjection: return {d.embed_dim, d.dim};
    case ParamBlock::kVisionProjection: return {d.feat_dim, d.dim};
  }
  return {0, 0};
}

ParamBlock table_of(Language l) {
  return l == Language::kSource ? ParamBlock::kSrcTable : ParamBlock::kTgtTable;
}
ParamBlock projection_of(Language l) {
  return l == Language::kSource ? ParamBlock::kSrcProjection : ParamBlock::kTgtProjection;
}

void validate_dims(const ModelDims& d) {
  if (d.src_vocab == 0 || d.tgt_vocab == 0 || d.feat_dim == 0 || d.embed_dim == 0 ||
      d.dim == 0) {
    throw ConfigError("model: every dimension must be >= 1");
  }
}

}  // namespace

const char* block_name(ParamBlock block) {
  switch (block) {
    case ParamBlock::kSrcTable: return "src_token_table";
    case ParamBlock::kTgtTable: return "tgt_token_table";
    case ParamBlock::kSrcProjection: return "src_projection";
    case ParamBlock::kTgtProjection: return "tgt_projection";
    case ParamBlock::kVisionProjection: return "vision_projection";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must be in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer: eps must be > 0");
}

ModelParams ModelParams::zeros(const ModelDims& dims, std::uint64_t seed) {
  validate_dims(dims);
  ModelParams p;
  p.dims_ = dims;
  p.seed_ = seed;
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    const auto [r, c] = block_shape(dims, static_cast<ParamBlock>(i));
    p.blocks_[i] = Matrix(r, c);
    p.m_[i] = Matrix(r, c);
    p.v_[i] = Matrix(r, c);
  }
  return p;
}

ModelParams::ModelParams(const ModelDims& dims, std::uint64_t seed)
    : ModelParams(zeros(dims, seed)) {
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    const auto b = static_cast<ParamBlock>(i);
    const auto [r, c] = block_shape(dims, b);
    Rng rng(seed, i + 1);
    const bool is_table = b == ParamBlock::kSrcTable || b == ParamBlock::kTgtTable;
    const double scale = is_table ? 1.0 : 1.0 / std::sqrt(static_cast<double>(r));
    blocks_[i] = uniform_matrix(r, c, scale, rng);
  }
}

const Matrix& ModelParams::block(ParamBlock b) const {
  ++access_[idx(b)];
  return blocks_[idx(b)];
}

Matrix& ModelParams::mutable_block(ParamBlock b) {
  ++version_;
  return blocks_[idx(b)];
}

void ModelParams::adam_step(const ParamGradients& grads, const OptimizerConfig& opt,
                            const BlockMask& mask) {
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    if (!mask[i]) continue;
    require_same_shape(blocks_[i], grads[i], "adam_step");
    const std::uint64_t t = ++block_steps_[i];
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
    auto w = blocks_[i].flat();
    auto m = m_[i].flat();
    auto v = v_[i].flat();
    auto g = grads[i].flat();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
      w[k] -= opt.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt.eps);
    }
  }
  ++step_count_;
  ++version_;
}

ParamGradients zero_gradients(const ModelDims& dims) {
  ParamGradients g;
  for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
    const auto [r, c] = block_shape(dims, static_cast<ParamBlock>(i));
    g[i] = Matrix(r, c);
  }
  return g;
}

EncodedSentence encode_text(std::span<const TokenId> tokens, Language which,
                            const ModelParams& params) {
  if (tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "encode_text: empty sequence");
  const Matrix& table = params.block(table_of(which));
  const Matrix& proj = params.block(projection_of(which));
  const auto& k = kernels::active();
  EncodedSentence out{Matrix(tokens.size(), proj.cols()), Vector(proj.cols())};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= table.rows()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "encode_text: token id " + std::to_string(tokens[i]) +
                      " out of vocabulary (size " + std::to_string(table.rows()) + ")");
    }
    k.gemv_t(proj.flat().data(), proj.rows(), proj.cols(), table.row(tokens[i]).data(),
             out.word_reps.row(i).data());
    k.axpy(1.0, out.word_reps.row(i).data(), out.sentence_rep.span().data(), proj.cols());
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (double& x : out.sentence_rep.span()) x *= inv;
  return out;
}

Vector encode_vision(const Vector& feature, const ModelParams& params) {
  const Matrix& proj = params.block(ParamBlock::kVisionProjection);
  if (feature.dim() != proj.rows()) {
    throw ShapeError("encode_vision: feature dim " + std::to_string(feature.dim()) +
                     " != " + std::to_string(proj.rows()));
  }
  Vector out(proj.cols());
  kernels::active().gemv_t(proj.flat().data(), proj.rows(), proj.cols(),
                           feature.span().data(), out.span().data());
  return out;
}

ForwardPass forward_batch(const ModelParams& params,
                          std::vector<std::vector<TokenId>> src_tokens,
                          std::vector<std::vector<TokenId>> tgt_tokens,
                          std::vector<Vector> features) {
  if (src_tokens.size() != tgt_tokens.size() || src_tokens.size() != features.size())
    throw ShapeError("forward_batch: stream sizes differ");
  ForwardPass pass;
  pass.src_tokens = std::move(src_tokens);
  pass.tgt_tokens = std::move(tgt_tokens);
  pass.features = std::move(features);
  const std::size_t b = pass.features.size();
  pass.src.reserve(b);
  pass.tgt.reserve(b);
  pass.vision.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    pass.src.push_back(encode_text(pass.src_tokens[i], Language::kSource, params));
    pass.tgt.push_back(encode_text(pass.tgt_tokens[i], Language::kTarget, params));
    pass.vision.push_back(encode_vision(pass.features[i], params));
  }
  pass.params_version = params.version();
  pass.valid = true;
  return pass;
}

OutputGradients OutputGradients::zeros_like(const ForwardPass& pass) {
  OutputGradients g;
  const std::size_t b = pass.src.size();
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t dim = pass.vision[i].dim();
    g.d_src_words.emplace_back(pass.src[i].word_reps.rows(), dim);
    g.d_tgt_words.emplace_back(pass.tgt[i].word_reps.rows(), dim);
    g.d_src_sentence.emplace_back(dim);
    g.d_tgt_sentence.emplace_back(dim);
    g.d_vision.emplace_back(dim);
  }
  return g;
}

namespace {

// Pushes word-level gradients (plus the mean-pooled sentence gradient) of one
// sentence into the table and projection gradients of its language.
void backprop_text(std::span<const TokenId> tokens, const Matrix* d_words,
                   const Vector* d_sentence, const Matrix& table, const Matrix& proj,
                   Matrix& d_table, Matrix& d_proj) {
  const auto& k = kernels::active();
  const std::size_t len = tokens.size();
  const std::size_t dim = proj.cols();
  std::vector<double> g(dim);
  std::vector<double> d_emb(proj.rows());
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t i = 0; i < len; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    bool any = false;
    if (d_words != nullptr && !d_words->empty()) {
      k.axpy(1.0, d_words->row(i).data(), g.data(), dim);
      any = true;
    }
    if (d_sentence != nullptr && d_sentence->dim() != 0) {
      k.axpy(inv, d_sentence->span().data(), g.data(), dim);
      any = true;
    }
    if (!any) continue;
    const auto emb = table.row(tokens[i]);
    // word = emb^T P  =>  dP += emb g^T, d emb += P g
    for (std::size_t e = 0; e < emb.size(); ++e) {
      if (emb[e] != 0.0) k.axpy(emb[e], g.data(), d_proj.row(e).data(), dim);
    }
    k.gemv(proj.flat().data(), proj.rows(), dim, g.data(), d_emb.data());
    k.axpy(1.0, d_emb.data(), d_table.row(tokens[i]).data(), d_emb.size());
  }
}

template <typename T>
const T* at_or_null(const std::vector<T>& v, std::size_t i) {
  return i < v.size() ? &v[i] : nullptr;
}

}  // namespace

ParamGradients accumulate_gradients(const ForwardPass& pass, const OutputGradients& grads,
                                    const ModelParams& params) {
  if (!pass.valid) throw StaleCacheError("backward: no forward pass recorded");
  if (pass.params_version != params.version()) {
    throw StaleCacheError("backward: parameters changed since the forward pass (version " +
                          std::to_string(pass.params_version) + " vs " +
                          std::to_string(params.version()) + ")");
  }
  ParamGradients out = zero_gradients(params.dims());
  const auto idx = [](ParamBlock b) { return static_cast<std::size_t>(b); };
  const Matrix& src_table = params.block(ParamBlock::kSrcTable);
  const Matrix& tgt_table = params.block(ParamBlock::kTgtTable);
  const Matrix& src_proj = params.block(ParamBlock::kSrcProjection);
  const Matrix& tgt_proj = params.block(ParamBlock::kTgtProjection);
  const Matrix& vis_proj = params.block(ParamBlock::kVisionProjection);
  const auto& k = kernels::active();

  for (std::size_t i = 0; i < pass.src.size(); ++i) {
    backprop_text(pass.src_tokens[i], at_or_null(grads.d_src_words, i),
                  at_or_null(grads.d_src_sentence, i), src_table, src_proj,
                  out[idx(ParamBlock::kSrcTable)], out[idx(ParamBlock::kSrcProjection)]);
    backprop_text(pass.tgt_tokens[i], at_or_null(grads.d_tgt_words, i),
                  at_or_null(grads.d_tgt_sentence, i), tgt_table, tgt_proj,
                  out[idx(ParamBlock::kTgtTable)], out[idx(ParamBlock::kTgtProjection)]);
    if (const Vector* dv = at_or_null(grads.d_vision, i); dv != nullptr && dv->dim() != 0) {
      Matrix& d_vis = out[idx(ParamBlock::kVisionProjection)];
      const Vector& x = pass.features[i];
      for (std::size_t f = 0; f < x.dim(); ++f) {
        if (x[f] != 0.0) k.axpy(x[f], dv->span().data(), d_vis.row(f).data(), vis_proj.cols());
      }
    }
  }
  return out;
}

void backward_and_step(const ForwardPass& pass, const OutputGradients& grads,
                       ModelParams& params, const OptimizerConfig& opt,
                       const BlockMask& mask) {
  const ParamGradients g = accumulate_gradients(pass, grads, params);
  params.adam_step(g, opt, mask);
}

}  // namespace cl2cm
