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


// Acceptance suite: one PASS/FAIL line per criterion; exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cl2cm/alignkit.hpp"
#include "cl2cm/cli.hpp"
#include "cl2cm/corpus.hpp"
#include "cl2cm/evalkit.hpp"
#include "cl2cm/gradcheck.hpp"
#include "cl2cm/losses.hpp"
#include "cl2cm/sinkhorn.hpp"
#include "cl2cm/trainer.hpp"
#include "test_util.hpp"

namespace cl2cm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion1() {
  Rng rng(101);
  const Matrix s = testing::random_matrix(8, 5, rng);
  const OtConfig cfg{0.1, 500, 1e-6};
  const auto t0 = Clock::now();
  const TransportPlan p = sinkhorn_solve(s, cfg);
  const double ms = 1e3 * seconds_since(t0);
  const bool ok = p.converged && p.iterations_used <= 500 && p.final_marginal_error <= 1e-6 &&
                  ms < 10.0;
  report(1, ok,
         fmt("iterations=%zu residual=%.2e time=%.3fms", p.iterations_used,
             p.final_marginal_error, ms));
}

void criterion2() {
  Rng rng(202);
  const OtConfig cfg{0.01, 500, 1e-6};
  double worst = 1e300;
  int misses = 0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = testing::random_matrix(4, 4, rng);
    const TransportPlan p = sinkhorn_solve(s, cfg);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    double best = -1e300;
    do {
      double v = 0.0;
      for (std::size_t i = 0; i < 4; ++i) v += s(i, perm[i]) / 4.0;
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double got = ot_objective(p.plan, s);
    if (!(got >= 0.98 * best)) ++misses;
    if (best > 0) worst = std::min(worst, got / best);
  }
  const double secs = seconds_since(t0);
  report(2, misses == 0 && secs < 1.0,
         fmt("misses=%d worst ratio=%.5f time=%.3fs", misses, worst, secs));
}

void criterion3() {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 2 + rng.index(7), n = 2 + rng.index(7);
    const Matrix s = testing::random_matrix(m, n, rng);
    Matrix shifted = s;
    for (double& x : shifted.flat()) x += 0.7;
    const Matrix a = sinkhorn_solve(s).plan;
    const Matrix b = sinkhorn_solve(shifted).plan;
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(a.flat()[i] - b.flat()[i]));
  }
  report(3, worst < 1e-8, fmt("max entry difference=%.2e", worst));
}

void criterion4() {
  const auto t0 = Clock::now();
  const auto results = run_gradcheck_suite();
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string detail;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_rel_error);
    detail += fmt("%s=%.1e ", r.name.c_str(), r.max_rel_error);
  }
  report(4, results.size() == 4 && worst < 1e-4 && secs < 30.0,
         detail + fmt("time=%.2fs", secs));
}

void criterion5() {
  const double nce = infonce_symmetric(Matrix{{1, 0}, {0, 1}}, 1.0).loss;
  const double kd = kd_loss(Matrix(2, 2, 0.0), Matrix::identity(2), 1.0).loss;
  PseudoLabelMatrix onehot;
  onehot.labels = Matrix{{1, 0}};
  const double word = word_alignment_loss(Matrix{{0, 0}}, onehot);
  const bool ok = std::abs(nce - 0.313262) <= 1e-6 && std::abs(kd - 0.12015) <= 1e-4 &&
                  std::abs(word - std::log(2.0)) <= 1e-9;
  report(5, ok, fmt("infonce=%.7f kd=%.6f word=%.12f", nce, kd, word));
}

void criterion6() {
  Rng rng(606);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.index(8), n = 1 + rng.index(8);
    Matrix plan(m, n);
    for (double& x : plan.flat()) x = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    if (trial % 50 == 0) std::fill(plan.flat().begin(), plan.flat().end(), 0.25);
    const double gamma =
        std::accumulate(plan.flat().begin(), plan.flat().end(), 0.0) / static_cast<double>(m * n);
    const PseudoLabelMatrix y = make_pseudo_labels(plan);
    std::vector<std::size_t> expected_fallback;
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      bool any_above = false;
      for (std::size_t j = 0; j < n; ++j) {
        sum += y.labels(i, j);
        any_above = any_above || plan(i, j) > gamma;
      }
      if (std::abs(sum - 1.0) > 1e-9) ++bad;
      if (!any_above) {
        expected_fallback.push_back(i);
        std::size_t nonzero = 0;
        for (std::size_t j = 0; j < n; ++j) nonzero += y.labels(i, j) != 0.0;
        if (nonzero != 1) ++bad;
      } else {
        for (std::size_t j = 0; j < n; ++j)
          if ((y.labels(i, j) > 0.0) != (plan(i, j) > gamma)) ++bad;
      }
    }
    if (y.fallback_rows != expected_fallback) ++bad;
  }
  report(6, bad == 0, fmt("violations=%zu over 1000 plans", bad));
}

CorpusConfig ablation_corpus(double substitution, double sigma) {
  CorpusConfig c;
  c.concept_vocab = 200;
  c.source_vocab = 200;
  c.target_vocab = 200;
  c.latent_dim = 32;
  c.train_size = 2000;
  c.val_size = 200;
  c.test_size = 200;
  c.noise.substitution_prob = substitution;
  c.noise.vision_noise_sigma = sigma;
  return c;
}

TrainConfig ablation_train(const Toggles& toggles, std::uint64_t seed) {
  TrainConfig t;
  t.embed_dim = 32;
  t.dim = 32;
  t.epochs = 100;
  t.optimizer.learning_rate = 3e-3;
  t.eval_every = 0;
  t.toggles = toggles;
  t.seed = seed;
  return t;
}

double run_sumr(const Corpus& corpus, const CorpusConfig& cc, const Toggles& toggles,
                std::uint64_t seed) {
  const TrainResult r = train(corpus, cc, ablation_train(toggles, seed));
  return evaluate(r.params, corpus.test).sum_r;
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr double kSigma = 0.4;

void criterion7() {
  const auto t0 = Clock::now();
  const CorpusConfig cc = ablation_corpus(0.3, kSigma);
  const Corpus corpus = generate_corpus(cc);
  const auto grid = ablation_grid();
  std::vector<std::array<double, 3>> sumr(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t s = 0; s < 3; ++s) sumr[g][s] = run_sumr(corpus, cc, grid[g], kSeeds[s]);
    note(fmt("%-40s %7.1f %7.1f %7.1f  mean %.2f", toggles_label(grid[g]).c_str(), sumr[g][0],
             sumr[g][1], sumr[g][2], (sumr[g][0] + sumr[g][1] + sumr[g][2]) / 3.0));
  }
  const double secs = seconds_since(t0);
  const auto mean = [&](std::size_t g) { return (sumr[g][0] + sumr[g][1] + sumr[g][2]) / 3.0; };
  const std::size_t full = grid.size() - 1;
  bool ok = mean(full) > mean(0);
  // Single-component rows: instance CL, + word alignment, + sentence-level KD.
  for (std::size_t g : {1u, 2u, 3u}) {
    int wins = 0;
    for (std::size_t s = 0; s < 3; ++s) wins += sumr[full][s] >= sumr[g][s];
    note(fmt("full >= %s on %d/3 seeds", toggles_label(grid[g]).c_str(), wins));
    ok = ok && wins >= 2;
  }
  for (std::size_t g : {4u, 5u}) {
    int wins = 0;
    for (std::size_t s = 0; s < 3; ++s) wins += sumr[full][s] >= sumr[g][s];
    note(fmt("(informational) full >= %s on %d/3 seeds", toggles_label(grid[g]).c_str(), wins));
  }
  ok = ok && secs < 600.0;
  report(7, ok, fmt("full mean=%.2f baseline mean=%.2f time=%.1fs", mean(full), mean(0), secs));
}

void criterion8() {
  const Toggles baseline{false, false, false, false};
  const Toggles full{true, true, true, true};
  bool ok = true;
  std::string detail;
  for (double p : {0.1, 0.5}) {
    const CorpusConfig cc = ablation_corpus(p, kSigma);
    const Corpus corpus = generate_corpus(cc);
    double b = 0.0, f = 0.0;
    for (std::uint64_t seed : kSeeds) {
      b += run_sumr(corpus, cc, baseline, seed) / 3.0;
      f += run_sumr(corpus, cc, full, seed) / 3.0;
    }
    ok = ok && f >= b;
    detail += fmt("p=%.1f full=%.2f baseline=%.2f  ", p, f, b);
  }
  report(8, ok, detail);
}

void criterion9() {
  const CorpusConfig cc = ablation_corpus(0.0, 0.0);
  const Corpus corpus = generate_corpus(cc);
  const TrainResult r = train(corpus, cc, ablation_train(Toggles{}, 1));
  const OtConfig ot;
  const double trained = pseudo_label_agreement(r.params, corpus.train, ot);
  const double untrained =
      pseudo_label_agreement(ModelParams(model_dims(cc, ablation_train(Toggles{}, 1)), 1),
                             corpus.train, ot);
  report(9, trained >= 0.70,
         fmt("agreement=%.4f (untrained %.4f) on train split", trained, untrained));
}

void criterion10() {
  CorpusConfig cc = ablation_corpus(0.3, kSigma);
  cc.train_size = 64;
  cc.val_size = 16;
  cc.test_size = 32;
  const Corpus corpus = generate_corpus(cc);
  TrainConfig t = ablation_train(Toggles{}, 1);
  t.epochs = 1;
  const TrainResult r = train(corpus, cc, t);
  r.params.reset_access_counts();
  evaluate(r.params, corpus.test);
  const auto src_table = r.params.access_count(ParamBlock::kSrcTable);
  const auto src_proj = r.params.access_count(ParamBlock::kSrcProjection);
  const auto tgt_table = r.params.access_count(ParamBlock::kTgtTable);
  const auto vision = r.params.access_count(ParamBlock::kVisionProjection);
  // Target and vision counts prove the instrumentation is live.
  report(10, src_table == 0 && src_proj == 0 && tgt_table > 0 && vision > 0,
         fmt("source table=%llu source proj=%llu target table=%llu vision=%llu",
             static_cast<unsigned long long>(src_table),
             static_cast<unsigned long long>(src_proj),
             static_cast<unsigned long long>(tgt_table),
             static_cast<unsigned long long>(vision)));
}

void criterion11() {
  const std::vector<std::size_t> ranks{1, 3, 7, 12};
  const RetrievalReport r = compute_metrics(ranks, Direction::kTextToVision);
  const bool ok = r.r1 == 25.0 && r.r5 == 50.0 && r.r10 == 75.0 &&
                  std::abs(r.map_score - 38.99) <= 0.01;
  report(11, ok, fmt("R@1=%.2f R@5=%.2f R@10=%.2f mAP=%.4f", r.r1, r.r5, r.r10, r.map_score));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion12() {
  testing::TempDir dir("acceptance12");
  {
    std::ofstream cfg(dir / "cfg.toml");
    cfg << "[corpus]\nconcept_vocab = 60\nsource_vocab = 60\ntarget_vocab = 60\n"
           "latent_dim = 16\nsizes = [300, 50, 60]\nseed = 11\n"
           "[corpus.noise]\nsubstitution_prob = 0.3\nvision_noise_sigma = 0.4\n"
           "[train]\nepochs = 3\nembed_dim = 16\ndim = 16\nseed = 5\n";
  }
  const std::string cfg = (dir / "cfg.toml").string();
  std::string evals[2];
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    const std::string c = (dir / ("corpus" + std::to_string(run))).string();
    const std::string m = (dir / ("model" + std::to_string(run))).string();
    std::ostringstream out, err;
    ok = ok && dispatch({"gen-corpus", "--config", cfg, "--out", c}, out, err) == 0;
    ok = ok && dispatch({"train", "--config", cfg, "--corpus", c, "--out", m}, out, err) == 0;
    std::ostringstream eval_out;
    ok = ok && dispatch({"eval", "--checkpoint", m, "--corpus", c}, eval_out, err) == 0;
    evals[run] = eval_out.str();
    if (!err.str().empty()) note("stderr: " + err.str());
  }
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"})
    ok = ok && slurp(dir / "corpus0" / f) == slurp(dir / "corpus1" / f) &&
         !slurp(dir / "corpus0" / f).empty();
  ok = ok && slurp(dir / "model0" / "params.bin") == slurp(dir / "model1" / "params.bin");
  ok = ok && !evals[0].empty() && evals[0] == evals[1];
  report(12, ok, "corpus files, params.bin and eval JSON identical across two runs");
}

}  // namespace
}  // namespace cl2cm

// Optional arguments select criteria by number; default runs all.
int main(int argc, char** argv) {
  using namespace cl2cm;
  const std::vector<std::function<void()>> criteria{
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int id = std::atoi(argv[a]);
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
      return 2;
    }
    selected[static_cast<std::size_t>(id - 1)] = true;
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
