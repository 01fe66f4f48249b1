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


#include "cl2cm/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

namespace cl2cm {
namespace {

// Reads typed fields from one TOML table and rejects keys it never asked for.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string prefix)
      : table_(table), prefix_(std::move(prefix)) {}

  void count(const char* key, std::size_t& out) {
    if (auto* node = find(key)) {
      auto v = node->value<std::int64_t>();
      if (!v || *v < 0 || !node->is_integer()) fail(key, "a non-negative integer");
      out = static_cast<std::size_t>(*v);
    }
  }

  void seed(const char* key, std::uint64_t& out) {
    if (auto* node = find(key)) {
      auto v = node->value<std::int64_t>();
      if (!v || *v < 0 || !node->is_integer()) fail(key, "a non-negative integer");
      out = static_cast<std::uint64_t>(*v);
    }
  }

  void real(const char* key, double& out) {
    if (auto* node = find(key)) {
      if (!node->is_number()) fail(key, "a number");
      out = *node->value<double>();
    }
  }

  void flag(const char* key, bool& out) {
    if (auto* node = find(key)) {
      if (!node->is_boolean()) fail(key, "a boolean");
      out = *node->value<bool>();
    }
  }

  void text(const char* key, std::string& out) {
    if (auto* node = find(key)) {
      if (!node->is_string()) fail(key, "a string");
      out = *node->value<std::string>();
    }
  }

  std::vector<std::int64_t> int_array(const char* key, std::size_t expected_len) {
    std::vector<std::int64_t> out;
    if (auto* node = find(key)) {
      const auto* arr = node->as_array();
      if (arr == nullptr) fail(key, "an array of integers");
      for (const auto& el : *arr) {
        auto v = el.value<std::int64_t>();
        if (!el.is_integer() || !v || *v < 0) fail(key, "an array of non-negative integers");
        out.push_back(*v);
      }
      if (expected_len != 0 && out.size() != expected_len)
        fail(key, "an array of " + std::to_string(expected_len) + " integers");
    }
    return out;
  }

  const toml::table* sub(const char* key) {
    if (auto* node = find(key)) {
      if (!node->is_table()) fail(key, "a table");
      return node->as_table();
    }
    return nullptr;
  }

  void finish() const {
    if (table_ == nullptr) return;
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!seen_.count(key)) throw ConfigError("config: unknown key '" + prefix_ + key + "'");
    }
  }

 private:
  const toml::node* find(const char* key) {
    seen_.insert(key);
    if (table_ == nullptr) return nullptr;
    return table_->get(key);
  }

  [[noreturn]] void fail(const char* key, const std::string& want) const {
    throw ConfigError("config: '" + prefix_ + key + "' must be " + want);
  }

  const toml::table* table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_corpus_table(const toml::table* t, CorpusConfig& c, const std::string& prefix,
                       const std::set<std::string>& extra_ok = {}) {
  TableReader r(t, prefix);
  r.count("concept_vocab", c.concept_vocab);
  r.count("source_vocab", c.source_vocab);
  r.count("target_vocab", c.target_vocab);
  r.count("latent_dim", c.latent_dim);
  if (auto range = r.int_array("sentence_len_range", 2); !range.empty()) {
    c.sentence_len_range = {static_cast<std::size_t>(range[0]),
                            static_cast<std::size_t>(range[1])};
  }
  if (auto sizes = r.int_array("sizes", 3); !sizes.empty()) {
    c.train_size = static_cast<std::size_t>(sizes[0]);
    c.val_size = static_cast<std::size_t>(sizes[1]);
    c.test_size = static_cast<std::size_t>(sizes[2]);
  }
  r.seed("seed", c.seed);
  TableReader n(r.sub("noise"), prefix + "noise.");
  n.real("substitution_prob", c.noise.substitution_prob);
  n.real("deletion_prob", c.noise.deletion_prob);
  n.real("insertion_prob", c.noise.insertion_prob);
  n.count("reorder_window", c.noise.reorder_window);
  n.real("vision_noise_sigma", c.noise.vision_noise_sigma);
  n.finish();
  if (extra_ok.empty()) {
    r.finish();
  } else if (t != nullptr) {
    for (const auto& [k, v] : *t) {
      const std::string key(k.str());
      static const std::set<std::string> corpus_keys{
          "concept_vocab", "source_vocab", "target_vocab", "latent_dim",
          "sentence_len_range", "sizes", "seed", "noise"};
      if (!corpus_keys.count(key) && !extra_ok.count(key))
        throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

void read_train_table(const toml::table* t, TrainConfig& c) {
  TableReader r(t, "train.");
  r.count("batch_size", c.batch_size);
  r.count("epochs", c.epochs);
  r.seed("seed", c.seed);
  r.count("embed_dim", c.embed_dim);
  r.count("dim", c.dim);
  r.count("stage1_epochs", c.stage1_epochs);
  r.flag("freeze_cl_stage2", c.freeze_cl_stage2);
  r.count("eval_every", c.eval_every);
  std::string mode = mode_name(c.mode);
  r.text("mode", mode);
  if (mode == "end_to_end") c.mode = TrainMode::kEndToEnd;
  else if (mode == "two_stage") c.mode = TrainMode::kTwoStage;
  else throw ConfigError("config: train.mode must be end_to_end or two_stage");
  std::string thr = threshold_mode_name(c.threshold_mode);
  r.text("threshold_mode", thr);
  if (thr == "above") c.threshold_mode = ThresholdMode::kAbove;
  else if (thr == "below") c.threshold_mode = ThresholdMode::kBelow;
  else throw ConfigError("config: train.threshold_mode must be above or below");
  std::string red = reduction_name(c.word_reduction);
  r.text("word_reduction", red);
  if (red == "mean") c.word_reduction = WordLossReduction::kMeanOverSource;
  else if (red == "sum") c.word_reduction = WordLossReduction::kSum;
  else throw ConfigError("config: train.word_reduction must be mean or sum");

  TableReader w(r.sub("weights"), "train.weights.");
  w.real("alpha", c.weights.alpha);
  w.real("lambda_level", c.weights.lambda_level);
  w.real("tau", c.weights.tau);
  w.real("tau_contrastive", c.weights.tau_contrastive);
  w.flag("kd_bidirectional", c.weights.kd_bidirectional);
  w.finish();

  TableReader o(r.sub("ot"), "train.ot.");
  o.real("epsilon_entropy", c.ot.epsilon_entropy);
  o.count("max_iterations", c.ot.max_iterations);
  o.real("marginal_tolerance", c.ot.marginal_tolerance);
  o.finish();

  TableReader a(r.sub("optimizer"), "train.optimizer.");
  a.real("learning_rate", c.optimizer.learning_rate);
  a.real("beta1", c.optimizer.beta1);
  a.real("beta2", c.optimizer.beta2);
  a.real("eps", c.optimizer.eps);
  a.finish();

  TableReader g(r.sub("toggles"), "train.toggles.");
  g.flag("cl_instance", c.toggles.cl_instance);
  g.flag("word_align", c.toggles.word_align);
  g.flag("kd_sent", c.toggles.kd_sent);
  g.flag("kd_word", c.toggles.kd_word);
  g.finish();
  r.finish();
}

GlobalConfig from_table(const toml::table& root) {
  GlobalConfig cfg;
  if (root.contains("corpus") || root.contains("train") || root.contains("ablate")) {
    TableReader r(&root, "");
    read_corpus_table(r.sub("corpus"), cfg.corpus, "corpus.");
    read_train_table(r.sub("train"), cfg.train);
    TableReader ab(r.sub("ablate"), "ablate.");
    if (auto seeds = ab.int_array("seeds", 0); !seeds.empty()) {
      cfg.ablate_seeds.assign(seeds.begin(), seeds.end());
    }
    ab.finish();
    r.finish();
  } else {
    read_corpus_table(&root, cfg.corpus, "");
  }
  return cfg;
}

std::int64_t as_toml_int(std::uint64_t v, const char* what) {
  if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw ConfigError(std::string("config: ") + what + " does not fit a TOML integer");
  return static_cast<std::int64_t>(v);
}

toml::table corpus_table(const CorpusConfig& c) {
  toml::table noise{{"substitution_prob", c.noise.substitution_prob},
                    {"deletion_prob", c.noise.deletion_prob},
                    {"insertion_prob", c.noise.insertion_prob},
                    {"reorder_window", static_cast<std::int64_t>(c.noise.reorder_window)},
                    {"vision_noise_sigma", c.noise.vision_noise_sigma}};
  return toml::table{
      {"concept_vocab", static_cast<std::int64_t>(c.concept_vocab)},
      {"source_vocab", static_cast<std::int64_t>(c.source_vocab)},
      {"target_vocab", static_cast<std::int64_t>(c.target_vocab)},
      {"latent_dim", static_cast<std::int64_t>(c.latent_dim)},
      {"sentence_len_range", toml::array{static_cast<std::int64_t>(c.sentence_len_range.first),
                                         static_cast<std::int64_t>(c.sentence_len_range.second)}},
      {"sizes", toml::array{static_cast<std::int64_t>(c.train_size),
                            static_cast<std::int64_t>(c.val_size),
                            static_cast<std::int64_t>(c.test_size)}},
      {"seed", as_toml_int(c.seed, "corpus.seed")},
      {"noise", std::move(noise)},
  };
}

toml::table train_table(const TrainConfig& c) {
  return toml::table{
      {"batch_size", static_cast<std::int64_t>(c.batch_size)},
      {"epochs", static_cast<std::int64_t>(c.epochs)},
      {"seed", as_toml_int(c.seed, "train.seed")},
      {"embed_dim", static_cast<std::int64_t>(c.embed_dim)},
      {"dim", static_cast<std::int64_t>(c.dim)},
      {"mode", mode_name(c.mode)},
      {"stage1_epochs", static_cast<std::int64_t>(c.stage1_epochs)},
      {"freeze_cl_stage2", c.freeze_cl_stage2},
      {"eval_every", static_cast<std::int64_t>(c.eval_every)},
      {"threshold_mode", threshold_mode_name(c.threshold_mode)},
      {"word_reduction", reduction_name(c.word_reduction)},
      {"weights", toml::table{{"alpha", c.weights.alpha},
                              {"lambda_level", c.weights.lambda_level},
                              {"tau", c.weights.tau},
                              {"tau_contrastive", c.weights.tau_contrastive},
                              {"kd_bidirectional", c.weights.kd_bidirectional}}},
      {"ot", toml::table{{"epsilon_entropy", c.ot.epsilon_entropy},
                         {"max_iterations", static_cast<std::int64_t>(c.ot.max_iterations)},
                         {"marginal_tolerance", c.ot.marginal_tolerance}}},
      {"optimizer", toml::table{{"learning_rate", c.optimizer.learning_rate},
                                {"beta1", c.optimizer.beta1},
                                {"beta2", c.optimizer.beta2},
                                {"eps", c.optimizer.eps}}},
      {"toggles", toml::table{{"cl_instance", c.toggles.cl_instance},
                              {"word_align", c.toggles.word_align},
                              {"kd_sent", c.toggles.kd_sent},
                              {"kd_word", c.toggles.kd_word}}},
  };
}

toml::table parse_toml(const std::string& text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

std::string dump(const toml::table& t) {
  std::ostringstream out;
  out << t << '\n';
  return out.str();
}

}  // namespace

const char* mode_name(TrainMode m) {
  return m == TrainMode::kEndToEnd ? "end_to_end" : "two_stage";
}
const char* threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::kAbove ? "above" : "below";
}
const char* reduction_name(WordLossReduction r) {
  return r == WordLossReduction::kMeanOverSource ? "mean" : "sum";
}

void GlobalConfig::validate() const {
  corpus.validate();
  train.validate();
  if (ablate_seeds.empty()) throw ConfigError("config: ablate.seeds must not be empty");
}

GlobalConfig parse_config_text(const std::string& toml_text, const std::string& source_name) {
  return from_table(parse_toml(toml_text, source_name));
}

GlobalConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void apply_override(GlobalConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("config: override '" + assignment + "' is not key=value");
  const auto trim = [](std::string text) {
    const auto first = text.find_first_not_of(" \t");
    const auto last = text.find_last_not_of(" \t");
    return first == std::string::npos ? std::string() : text.substr(first, last - first + 1);
  };
  const std::string key = trim(assignment.substr(0, eq));
  const std::string raw = trim(assignment.substr(eq + 1));
  if (key.empty()) throw ConfigError("config: override '" + assignment + "' has an empty key");

  toml::table root = parse_toml(to_toml(cfg), "<effective>");
  toml::table value_holder;
  try {
    value_holder = toml::parse("v = " + raw);
  } catch (const toml::parse_error&) {
    value_holder = toml::table{{"v", raw}};  // bare words are strings
  }

  toml::table* cursor = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (dot == std::string::npos) {
      cursor->insert_or_assign(part, *value_holder.get("v"));
      break;
    }
    auto* next = cursor->get(part);
    if (next == nullptr || !next->is_table())
      throw ConfigError("config: unknown override section '" + key.substr(0, dot) + "'");
    cursor = next->as_table();
    start = dot + 1;
  }
  cfg = from_table(root);
}

std::string corpus_to_toml(const CorpusConfig& cfg) { return dump(corpus_table(cfg)); }

std::string to_toml(const GlobalConfig& cfg) {
  toml::array seeds;
  for (auto s : cfg.ablate_seeds) seeds.push_back(as_toml_int(s, "ablate.seeds"));
  toml::table root{{"corpus", corpus_table(cfg.corpus)},
                   {"train", train_table(cfg.train)},
                   {"ablate", toml::table{{"seeds", std::move(seeds)}}}};
  return dump(root);
}

}  // namespace cl2cm
