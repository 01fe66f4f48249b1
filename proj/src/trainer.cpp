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


#include "cl2cm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

namespace cl2cm {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

Matrix stack_rows(std::span<const Vector> rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().dim();
  Matrix out(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].values().begin(), rows[i].values().end(), out.row(i).begin());
  return out;
}

std::vector<Vector> sentence_reps(const std::vector<EncodedSentence>& encoded) {
  std::vector<Vector> out;
  out.reserve(encoded.size());
  for (const auto& e : encoded) out.push_back(e.sentence_rep);
  return out;
}

void add_rows_into(const Matrix& grad, std::vector<Vector>& dest) {
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    auto src = grad.row(i);
    auto dst = dest[i].span();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

bool all_zero(const Matrix& m) {
  return std::all_of(m.flat().begin(), m.flat().end(), [](double x) { return x == 0.0; });
}

}  // namespace

void TrainConfig::validate() const {
  weights.validate();
  ot.validate();
  optimizer.validate();
  if (batch_size < 2)
    throw ConfigError("train: batch_size must be >= 2 (the cross-modal contrastive loss is always on)");
  if (embed_dim == 0 || dim == 0) throw ConfigError("train: embed_dim and dim must be >= 1");
  if (mode == TrainMode::kTwoStage) {
    if (!toggles.any_cl())
      throw ConfigError(
          "train: two_stage mode needs cl_instance or word_align (stage 1 trains the "
          "cross-lingual network and kd needs it as teacher)");
    if (stage1_epochs == 0 || stage1_epochs >= epochs)
      throw ConfigError("train: two_stage needs 1 <= stage1_epochs < epochs");
  }
}

ModelDims model_dims(const CorpusConfig& corpus, const TrainConfig& train) {
  return {corpus.source_vocab, corpus.target_vocab, corpus.latent_dim, train.embed_dim,
          train.dim};
}

BatchObjective batch_objective(const ForwardPass& pass, const TrainConfig& cfg,
                               ObjectiveScope scope, const BatchTargets* frozen) {
  const std::size_t b = pass.src.size();
  const bool use_cm = scope != ObjectiveScope::kCrossLingualOnly;
  const bool use_cl = scope != ObjectiveScope::kCrossModalOnly;
  Toggles on = cfg.toggles;
  if (!use_cl) on.cl_instance = on.word_align = false;
  if (!use_cm) on.kd_sent = on.kd_word = false;

  const auto src_sent_v = sentence_reps(pass.src);
  const auto tgt_sent_v = sentence_reps(pass.tgt);
  const Matrix src_sent = stack_rows(src_sent_v);
  const Matrix tgt_sent = stack_rows(tgt_sent_v);
  const Matrix vis = stack_rows(pass.vision);

  BatchSimilarities sims;
  sims.s_cm = cosine_matrix(vis, tgt_sent);
  sims.s_cl_sent = cosine_matrix(src_sent, tgt_sent);

  BatchObjective out;
  if (on.any_kd()) {
    if (frozen != nullptr) {
      out.targets.teacher = frozen->teacher;
    } else {
      if (on.kd_word) {
        std::vector<Matrix> sw, tw;
        for (std::size_t i = 0; i < b; ++i) {
          sw.push_back(pass.src[i].word_reps);
          tw.push_back(pass.tgt[i].word_reps);
        }
        sims.s_cl_word = maxsim_matrix(sw, tw);
      }
      out.targets.teacher = select_teacher(sims, cfg.weights, on);
    }
  }

  // Word-level alignment per aligned pair.
  std::vector<double> word_losses;
  std::vector<Matrix> word_sims, word_grads;
  if (on.word_align) {
    word_losses.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
      Matrix c = cosine_matrix(pass.src[i].word_reps, pass.tgt[i].word_reps);
      if (frozen != nullptr) {
        out.targets.labels.push_back(frozen->labels.at(i));
      } else {
        const TransportPlan plan = sinkhorn_solve(c, cfg.ot);
        if (!plan.converged) ++out.targets.sinkhorn_unconverged;
        out.targets.labels.push_back(make_pseudo_labels(plan, cfg.threshold_mode));
      }
      word_losses[i] = word_alignment_loss(c, out.targets.labels[i], cfg.word_reduction);
      word_grads.push_back(
          word_alignment_loss_grad(c, out.targets.labels[i], cfg.word_reduction));
      word_sims.push_back(std::move(c));
    }
  }

  ObjectiveResult res =
      total_objective(sims, word_losses, cfg.weights, on,
                      on.any_kd() ? &out.targets.teacher : nullptr);
  if (!use_cm) {
    res.terms.cm_instance = 0.0;
    res.terms.kd = 0.0;
    res.terms.total = res.terms.cl_instance + res.terms.word;
    res.grads.d_s_cm = Matrix(b, b);
  }
  out.terms = res.terms;

  out.grads = OutputGradients::zeros_like(pass);
  if (!all_zero(res.grads.d_s_cm)) {
    auto [d_vis, d_tgt] = cosine_matrix_backward(vis, tgt_sent, sims.s_cm, res.grads.d_s_cm);
    add_rows_into(d_vis, out.grads.d_vision);
    add_rows_into(d_tgt, out.grads.d_tgt_sentence);
  }
  if (!all_zero(res.grads.d_s_cl_sent)) {
    auto [d_src, d_tgt] =
        cosine_matrix_backward(src_sent, tgt_sent, sims.s_cl_sent, res.grads.d_s_cl_sent);
    add_rows_into(d_src, out.grads.d_src_sentence);
    add_rows_into(d_tgt, out.grads.d_tgt_sentence);
  }
  if (on.word_align && res.grads.d_word_loss != 0.0) {
    for (std::size_t i = 0; i < b; ++i) {
      Matrix upstream = word_grads[i];
      for (double& x : upstream.flat()) x *= res.grads.d_word_loss;
      auto [d_src, d_tgt] = cosine_matrix_backward(pass.src[i].word_reps,
                                                   pass.tgt[i].word_reps, word_sims[i],
                                                   upstream);
      out.grads.d_src_words[i] = std::move(d_src);
      out.grads.d_tgt_words[i] = std::move(d_tgt);
    }
  }
  return out;
}

std::string TrainLogRecord::to_json() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"type\": \"step\", \"step\": %zu, \"epoch\": %zu, \"stage\": %d, "
                "\"cm_instance\": %.12g, \"kd\": %.12g, \"cl_instance\": %.12g, "
                "\"word\": %.12g, \"total\": %.12g, \"wall_ms\": %.3f}",
                step, epoch, stage, cm_instance, kd, cl_instance, word, total, wall_ms);
  return buf;
}

TrainResult train(const Corpus& corpus, const CorpusConfig& corpus_cfg,
                  const TrainConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  const auto& data = corpus.train;
  TrainResult result{ModelParams(model_dims(corpus_cfg, cfg), cfg.seed), {}, {}};
  if (cfg.epochs == 0) return result;
  if (data.size() < cfg.batch_size) {
    throw ConfigError("train: corpus has " + std::to_string(data.size()) +
                      " records, fewer than one batch of " + std::to_string(cfg.batch_size));
  }

  Rng shuffle(cfg.seed, kShuffleStream);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t step = 0;
  const auto idx = [](ParamBlock b) { return static_cast<std::size_t>(b); };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ObjectiveScope scope = ObjectiveScope::kFull;
    BlockMask mask = kAllBlocks;
    int stage = 0;
    if (cfg.mode == TrainMode::kTwoStage) {
      if (epoch <= cfg.stage1_epochs) {
        stage = 1;
        scope = ObjectiveScope::kCrossLingualOnly;
        mask[idx(ParamBlock::kVisionProjection)] = false;
      } else {
        stage = 2;
        if (cfg.freeze_cl_stage2) {
          scope = ObjectiveScope::kCrossModalOnly;
          mask[idx(ParamBlock::kSrcTable)] = false;
          mask[idx(ParamBlock::kSrcProjection)] = false;
        }
      }
    }

    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

    for (std::size_t start = 0; start + cfg.batch_size <= order.size();
         start += cfg.batch_size) {
      std::vector<std::vector<TokenId>> src, tgt;
      std::vector<Vector> feats;
      for (std::size_t k = start; k < start + cfg.batch_size; ++k) {
        const Triple& t = data[order[k]];
        src.push_back(t.source_tokens);
        tgt.push_back(t.target_tokens);
        feats.push_back(t.vision_feature);
      }
      const ForwardPass pass =
          forward_batch(result.params, std::move(src), std::move(tgt), std::move(feats));
      const BatchObjective obj = batch_objective(pass, cfg, scope);
      backward_and_step(pass, obj.grads, result.params, cfg.optimizer, mask);

      TrainLogRecord rec;
      rec.step = ++step;
      rec.epoch = epoch;
      rec.stage = stage;
      rec.cm_instance = obj.terms.cm_instance;
      rec.kd = obj.terms.kd;
      rec.cl_instance = obj.terms.cl_instance;
      rec.word = obj.terms.word;
      rec.total = obj.terms.total;
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      if (on_step) on_step(rec);
      result.log.push_back(rec);
    }

    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && !corpus.val.empty()) {
      result.evals.push_back({epoch, evaluate(result.params, corpus.val)});
    }
  }
  return result;
}

EvalReport evaluate(const ModelParams& params, std::span<const Triple> records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate: empty split");
  std::vector<Vector> text, vision;
  text.reserve(records.size());
  vision.reserve(records.size());
  for (const Triple& t : records) {
    text.push_back(encode_text(t.target_tokens, Language::kTarget, params).sentence_rep);
    vision.push_back(encode_vision(t.vision_feature, params));
  }
  return evaluate_similarity(cosine_matrix(stack_rows(text), stack_rows(vision)));
}

AlignmentInspection inspect_alignment(const ModelParams& params, const Triple& record,
                                      const OtConfig& ot, ThresholdMode mode) {
  const auto src = encode_text(record.source_tokens, Language::kSource, params);
  const auto tgt = encode_text(record.target_tokens, Language::kTarget, params);
  AlignmentInspection out;
  out.similarity = cosine_matrix(src.word_reps, tgt.word_reps);
  out.plan = sinkhorn_solve(out.similarity, ot);
  out.labels = make_pseudo_labels(out.plan, mode);
  return out;
}

double pseudo_label_agreement(const ModelParams& params, std::span<const Triple> records,
                              const OtConfig& ot, ThresholdMode mode) {
  std::size_t total = 0, agree = 0;
  for (const Triple& t : records) {
    if (t.gold_alignment.empty()) continue;
    const auto insp = inspect_alignment(params, t, ot, mode);
    for (const auto& [s, q] : t.gold_alignment) {
      auto row = insp.labels.labels.row(s);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                                 row.begin());
      ++total;
      agree += best == q;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

std::vector<Toggles> ablation_grid() {
  return {
      {false, false, false, false},  // baseline, no cross-lingual network
      {true, false, false, false},
      {true, true, false, false},
      {true, false, true, false},
      {true, true, true, false},
      {true, true, false, true},
      {true, true, true, true},  // full model
  };
}

std::string toggles_label(const Toggles& t) {
  std::string out;
  const auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(t.cl_instance, "cl_instance");
  add(t.word_align, "word_align");
  add(t.kd_sent, "kd_sent");
  add(t.kd_word, "kd_word");
  return out.empty() ? "none" : out;
}

}  // namespace cl2cm
