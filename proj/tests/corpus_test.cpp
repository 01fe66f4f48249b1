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


#include "cl2cm/corpus.hpp"

#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "cl2cm/checkpoint.hpp"
#include "test_util.hpp"

namespace cl2cm {
namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.concept_vocab = 30;
  c.source_vocab = 40;
  c.target_vocab = 35;
  c.latent_dim = 6;
  c.train_size = 60;
  c.val_size = 10;
  c.test_size = 10;
  return c;
}

// concept -> target token, inverted from the generator's map.
std::vector<long> target_to_concept(const ConceptMaps& maps, std::size_t vocab) {
  std::vector<long> inv(vocab, -1);
  for (std::size_t c = 0; c < maps.to_target.size(); ++c) inv[maps.to_target[c]] = static_cast<long>(c);
  return inv;
}

TEST(Corpus, ZeroNoiseGivesIdentityAlignment) {
  const CorpusConfig cfg = small_config();
  const Corpus c = generate_corpus(cfg);
  const ConceptMaps maps = concept_maps(cfg);
  std::vector<long> src_inv(cfg.source_vocab, -1);
  for (std::size_t k = 0; k < maps.to_source.size(); ++k) src_inv[maps.to_source[k]] = static_cast<long>(k);
  for (const auto* split : {&c.train, &c.val, &c.test}) {
    for (const Triple& t : *split) {
      ASSERT_EQ(t.source_tokens.size(), t.target_tokens.size());
      ASSERT_EQ(t.gold_alignment.size(), t.source_tokens.size());
      for (std::size_t i = 0; i < t.source_tokens.size(); ++i) {
        EXPECT_EQ(t.gold_alignment[i], std::make_pair(i, i));
        EXPECT_EQ(t.target_tokens[i], maps.to_target[src_inv[t.source_tokens[i]]]);
      }
    }
  }
  EXPECT_EQ(c.train_noise.substitutions + c.train_noise.deletions + c.train_noise.insertions, 0u);
}

TEST(Corpus, MapsAreInjective) {
  const ConceptMaps maps = concept_maps(small_config());
  EXPECT_EQ(std::set<TokenId>(maps.to_source.begin(), maps.to_source.end()).size(), 30u);
  EXPECT_EQ(std::set<TokenId>(maps.to_target.begin(), maps.to_target.end()).size(), 30u);
}

TEST(Corpus, SplitSizesLengthsAndIds) {
  CorpusConfig cfg = small_config();
  cfg.sentence_len_range = {3, 5};
  const Corpus c = generate_corpus(cfg);
  EXPECT_EQ(c.train.size(), 60u);
  EXPECT_EQ(c.val.size(), 10u);
  EXPECT_EQ(c.test.size(), 10u);
  std::set<std::uint64_t> ids;
  for (const auto* split : {&c.train, &c.val, &c.test}) {
    for (const Triple& t : *split) {
      EXPECT_GE(t.source_tokens.size(), 3u);
      EXPECT_LE(t.source_tokens.size(), 5u);
      EXPECT_EQ(t.vision_feature.dim(), cfg.latent_dim);
      ids.insert(t.id);
    }
  }
  EXPECT_EQ(ids.size(), 80u);
  EXPECT_THROW(c.split("dev"), Error);
}

TEST(Corpus, NoiseMarginals) {
  CorpusConfig cfg = small_config();
  cfg.train_size = 3000;
  cfg.noise.substitution_prob = 0.3;
  cfg.noise.deletion_prob = 0.1;
  cfg.noise.insertion_prob = 0.15;
  const Corpus c = generate_corpus(cfg);
  const auto& s = c.train_noise;
  ASSERT_GE(s.source_tokens, 10000u);
  const double n = static_cast<double>(s.source_tokens);
  EXPECT_NEAR(s.substitutions / n, 0.3, 0.02);
  EXPECT_NEAR(s.deletions / n, 0.1, 0.02);
  EXPECT_NEAR(s.insertions / n, 0.15, 0.02);
}

TEST(Corpus, TestTargetsAreClean) {
  CorpusConfig cfg = small_config();
  cfg.noise.substitution_prob = 0.5;
  cfg.noise.insertion_prob = 0.3;
  cfg.noise.reorder_window = 2;
  const Corpus c = generate_corpus(cfg);
  for (const Triple& t : c.test) {
    ASSERT_EQ(t.gold_alignment.size(), t.source_tokens.size());
    ASSERT_EQ(t.target_tokens.size(), t.source_tokens.size());
    for (std::size_t i = 0; i < t.source_tokens.size(); ++i)
      EXPECT_EQ(t.gold_alignment[i], std::make_pair(i, i));
  }
}

TEST(Corpus, GoldAlignmentEncodesTheSameConcept) {
  CorpusConfig cfg = small_config();
  cfg.noise.substitution_prob = 0.3;
  cfg.noise.deletion_prob = 0.2;
  cfg.noise.insertion_prob = 0.2;
  cfg.noise.reorder_window = 2;
  const Corpus c = generate_corpus(cfg);
  const ConceptMaps maps = concept_maps(cfg);
  const auto tgt_inv = target_to_concept(maps, cfg.target_vocab);
  std::vector<long> src_inv(cfg.source_vocab, -1);
  for (std::size_t k = 0; k < maps.to_source.size(); ++k) src_inv[maps.to_source[k]] = static_cast<long>(k);
  for (const Triple& t : c.train) {
    EXPECT_FALSE(t.target_tokens.empty());
    for (const auto& [sp, tp] : t.gold_alignment) {
      ASSERT_LT(sp, t.source_tokens.size());
      ASSERT_LT(tp, t.target_tokens.size());
      EXPECT_EQ(src_inv[t.source_tokens[sp]], tgt_inv[t.target_tokens[tp]]);
    }
  }
}

TEST(Corpus, VisionFeatureIsMeanOfLatentsWithoutNoise) {
  // Two records sharing the same concept set must share the feature; with
  // sigma > 0 the features of identical concept sets differ.
  CorpusConfig cfg = small_config();
  cfg.concept_vocab = 3;
  cfg.sentence_len_range = {3, 3};
  const Corpus c = generate_corpus(cfg);
  for (const Triple& t : c.train) {
    for (std::size_t k = 0; k < cfg.latent_dim; ++k)
      EXPECT_NEAR(t.vision_feature[k], c.train[0].vision_feature[k], 1e-12);
  }
  cfg.noise.vision_noise_sigma = 0.5;
  const Corpus noisy = generate_corpus(cfg);
  EXPECT_NE(noisy.train[0].vision_feature, noisy.train[1].vision_feature);
}

TEST(Corpus, DeterministicAndSeedSensitive) {
  CorpusConfig cfg = small_config();
  cfg.noise.substitution_prob = 0.2;
  const Corpus a = generate_corpus(cfg), b = generate_corpus(cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  cfg.seed = 43;
  EXPECT_NE(generate_corpus(cfg).train, a.train);
}

TEST(Corpus, FilesAreByteIdenticalAcrossRuns) {
  testing::TempDir dir("corpus_bytes");
  CorpusConfig cfg = small_config();
  cfg.noise.substitution_prob = 0.2;
  cfg.noise.vision_noise_sigma = 0.3;
  write_corpus(generate_corpus(cfg).train, dir / "a.jsonl");
  write_corpus(generate_corpus(cfg).train, dir / "b.jsonl");
  EXPECT_EQ(sha256_file(dir / "a.jsonl"), sha256_file(dir / "b.jsonl"));
}

TEST(Corpus, DegenerateDeletionFails) {
  CorpusConfig cfg = small_config();
  cfg.noise.deletion_prob = 1.0;
  EXPECT_THROW(generate_corpus(cfg), GenerationError);
}

TEST(Corpus, InvalidConfigs) {
  CorpusConfig cfg = small_config();
  cfg.source_vocab = 10;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = small_config();
  cfg.sentence_len_range = {1, 4};
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = small_config();
  cfg.noise.substitution_prob = 0.7;
  cfg.noise.deletion_prob = 0.4;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = small_config();
  cfg.test_size = 0;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
}

TEST(CorpusIo, EmptyRoundTrip) {
  testing::TempDir dir("corpus_empty");
  write_corpus({}, dir / "e.jsonl");
  EXPECT_EQ(std::filesystem::file_size(dir / "e.jsonl"), 0u);
  EXPECT_TRUE(read_corpus(dir / "e.jsonl").empty());
}

void expect_equal_within(const Triple& a, const Triple& b) {
  EXPECT_EQ(a.id, b.id);
  EXPECT_EQ(a.source_tokens, b.source_tokens);
  EXPECT_EQ(a.target_tokens, b.target_tokens);
  EXPECT_EQ(a.gold_alignment, b.gold_alignment);
  ASSERT_EQ(a.vision_feature.dim(), b.vision_feature.dim());
  for (std::size_t k = 0; k < a.vision_feature.dim(); ++k)
    EXPECT_NEAR(a.vision_feature[k], b.vision_feature[k], 1e-8 * (1 + std::abs(a.vision_feature[k])));
}

TEST(CorpusIo, SingleAndLargeRoundTrip) {
  testing::TempDir dir("corpus_rt");
  CorpusConfig cfg = small_config();
  cfg.train_size = 1000;
  cfg.noise.substitution_prob = 0.2;
  cfg.noise.insertion_prob = 0.1;
  cfg.noise.reorder_window = 1;
  cfg.noise.vision_noise_sigma = 0.4;
  const Corpus c = generate_corpus(cfg);
  write_corpus(std::span(c.train).first(1), dir / "one.jsonl");
  const auto one = read_corpus(dir / "one.jsonl");
  ASSERT_EQ(one.size(), 1u);
  expect_equal_within(one[0], c.train[0]);

  write_corpus(c.train, dir / "all.jsonl");
  const auto all = read_corpus(dir / "all.jsonl");
  ASSERT_EQ(all.size(), 1000u);
  for (std::size_t i = 0; i < all.size(); ++i) expect_equal_within(all[i], c.train[i]);
}

TEST(CorpusIo, WrittenFeaturesRereadExactly) {
  // After one write/read cycle the 9-digit decimal is a fixed point.
  testing::TempDir dir("corpus_fixed");
  CorpusConfig cfg = small_config();
  cfg.noise.vision_noise_sigma = 0.7;
  const Corpus c = generate_corpus(cfg);
  write_corpus(c.val, dir / "a.jsonl");
  const auto once = read_corpus(dir / "a.jsonl");
  write_corpus(once, dir / "b.jsonl");
  EXPECT_EQ(read_corpus(dir / "b.jsonl"), once);
}

TEST(CorpusIo, MalformedLineReportsLineNumber) {
  testing::TempDir dir("corpus_bad");
  const Corpus c = generate_corpus(small_config());
  {
    std::ofstream out(dir / "bad.jsonl");
    out << triple_to_json_line(c.train[0]) << "\n"
        << triple_to_json_line(c.train[1]) << "\n"
        << "{\"id\": 3, \"vision_feature\": [1, 2\n";
  }
  try {
    read_corpus(dir / "bad.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(CorpusIo, MissingFieldIsParseError) {
  EXPECT_THROW(triple_from_json_line("{\"id\": 1}", 1), ParseError);
  EXPECT_THROW(triple_from_json_line(
                   "{\"id\":1,\"vision_feature\":[1],\"source_tokens\":[],"
                   "\"target_tokens\":[1],\"gold_alignment\":[]}",
                   1),
               ParseError);
  EXPECT_THROW(read_corpus("/nonexistent/cl2cm.jsonl"), IoError);
}

}  // namespace
}  // namespace cl2cm
