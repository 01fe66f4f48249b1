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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cl2cm/alignkit.hpp"
#include "cl2cm/corpus.hpp"
#include "cl2cm/encoders.hpp"
#include "cl2cm/evalkit.hpp"
#include "cl2cm/losses.hpp"
#include "cl2cm/sinkhorn.hpp"

namespace cl2cm {

enum class TrainMode { kEndToEnd, kTwoStage };

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::size_t embed_dim = 32;
  std::size_t dim = 32;
  LossWeights weights;
  OtConfig ot;
  OptimizerConfig optimizer;
  Toggles toggles;
  ThresholdMode threshold_mode = ThresholdMode::kAbove;
  WordLossReduction word_reduction = WordLossReduction::kMeanOverSource;
  TrainMode mode = TrainMode::kEndToEnd;
  /// Two-stage only: epochs spent on the cross-lingual objective alone.
  std::size_t stage1_epochs = 0;
  /// Two-stage only: stage 2 stops updating the cross-lingual network.
  bool freeze_cl_stage2 = false;
  /// Validation cadence in epochs; 0 disables it.
  std::size_t eval_every = 1;

  void validate() const;
};

ModelDims model_dims(const CorpusConfig& corpus, const TrainConfig& train);

/// Which losses a step optimizes.
enum class ObjectiveScope {
  kFull,              // L^cm + L^cl
  kCrossLingualOnly,  // two-stage, stage 1
  kCrossModalOnly,    // two-stage, stage 2 with a frozen CL network
};

/// Per-step constants: pseudo-labels for every pair and the distillation
/// teacher. Freezing them makes the objective a smooth function of the
/// parameters.
struct BatchTargets {
  std::vector<PseudoLabelMatrix> labels;
  Matrix teacher;
  std::size_t sinkhorn_unconverged = 0;
};

struct BatchObjective {
  ObjectiveTerms terms;
  OutputGradients grads;
  BatchTargets targets;
};

/// Similarities, pseudo-labels, losses and encoder-output gradients for one
/// batch. When `frozen` is given its labels and teacher are reused instead of
/// being recomputed from the current embeddings.
BatchObjective batch_objective(const ForwardPass& pass, const TrainConfig& cfg,
                               ObjectiveScope scope = ObjectiveScope::kFull,
                               const BatchTargets* frozen = nullptr);

struct TrainLogRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  int stage = 0;  // 0 end-to-end, 1/2 two-stage
  double cm_instance = 0.0;
  double kd = 0.0;
  double cl_instance = 0.0;
  double word = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;

  std::string to_json() const;
};

struct EvalLogRecord {
  std::size_t epoch = 0;
  EvalReport report;
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainLogRecord> log;
  std::vector<EvalLogRecord> evals;
};

using StepCallback = std::function<void(const TrainLogRecord&)>;

/// Trains on corpus.train; validation on corpus.val every cfg.eval_every
/// epochs. Shuffling is seeded by cfg.seed and the last partial batch is
/// dropped.
TrainResult train(const Corpus& corpus, const CorpusConfig& corpus_cfg,
                  const TrainConfig& cfg, const StepCallback& on_step = {});

/// Retrieval on one split using only the cross-modal pathway (vision
/// projection and target-language encoder).
EvalReport evaluate(const ModelParams& params, std::span<const Triple> records);

/// Fraction of gold (source, target) pairs whose pseudo-label row argmax
/// points at the gold target position.
double pseudo_label_agreement(const ModelParams& params, std::span<const Triple> records,
                              const OtConfig& ot,
                              ThresholdMode mode = ThresholdMode::kAbove);

/// Plan, threshold and labels for one sentence pair.
struct AlignmentInspection {
  Matrix similarity;
  TransportPlan plan;
  PseudoLabelMatrix labels;
};
AlignmentInspection inspect_alignment(const ModelParams& params, const Triple& record,
                                      const OtConfig& ot,
                                      ThresholdMode mode = ThresholdMode::kAbove);

/// The seven toggle patterns of the component ablation, baseline first.
std::vector<Toggles> ablation_grid();
std::string toggles_label(const Toggles& t);

}  // namespace cl2cm
