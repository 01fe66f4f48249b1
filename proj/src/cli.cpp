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


#include "cl2cm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cl2cm/checkpoint.hpp"
#include "cl2cm/gradcheck.hpp"
#include "cl2cm/trainer.hpp"

namespace cl2cm {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kSplits[] = {"train", "val", "test"};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Defaults < config file < --seed < --set overrides.
GlobalConfig resolve_config(const std::string& config_path,
                            const std::vector<std::string>& overrides) {
  GlobalConfig cfg = config_path.empty() ? GlobalConfig{} : load_config(config_path);
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

void check_corpus_matches(const ModelParams& params, const CorpusConfig& corpus) {
  const ModelDims& d = params.dims();
  if (d.src_vocab != corpus.source_vocab || d.tgt_vocab != corpus.target_vocab ||
      d.feat_dim != corpus.latent_dim) {
    throw ShapeError("checkpoint dims (src_vocab " + std::to_string(d.src_vocab) +
                     ", tgt_vocab " + std::to_string(d.tgt_vocab) + ", feat_dim " +
                     std::to_string(d.feat_dim) + ") do not match the corpus (" +
                     std::to_string(corpus.source_vocab) + ", " +
                     std::to_string(corpus.target_vocab) + ", " +
                     std::to_string(corpus.latent_dim) + ")");
  }
}

int cmd_gen_corpus(const std::string& config_path, const std::string& out_dir,
                   const std::optional<std::uint64_t>& seed,
                   const std::vector<std::string>& overrides, std::ostream& out) {
  GlobalConfig cfg = resolve_config(config_path, overrides);
  if (seed) cfg.corpus.seed = *seed;
  const Corpus corpus = generate_corpus(cfg.corpus);
  write_corpus_dir(corpus, cfg.corpus, out_dir);
  out << "wrote " << corpus.train.size() << "/" << corpus.val.size() << "/"
      << corpus.test.size() << " records to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& corpus_dir,
              const std::string& out_dir, const std::optional<std::uint64_t>& seed,
              const std::vector<std::string>& overrides, std::ostream& out) {
  GlobalConfig cfg = resolve_config(config_path, overrides);
  if (seed) cfg.train.seed = *seed;
  LoadedCorpus loaded = read_corpus_dir(corpus_dir);
  cfg.corpus = loaded.config;
  cfg.validate();

  fs::create_directories(out_dir);
  std::ofstream log(fs::path(out_dir) / "log.jsonl", std::ios::trunc);
  if (!log) throw IoError("cannot write log in " + out_dir);
  TrainResult result = train(loaded.corpus, cfg.corpus, cfg.train,
                             [&log](const TrainLogRecord& r) { log << r.to_json() << '\n'; });
  for (const auto& e : result.evals) {
    log << "{\"type\": \"eval\", \"epoch\": " << e.epoch << ", \"split\": \"val\", \"report\": "
        << e.report.to_json() << "}\n";
  }
  save_checkpoint(out_dir, {result.params, cfg, fs::absolute(corpus_dir).string()});
  write_text(fs::path(out_dir) / "config.toml", to_toml(cfg));
  out << "trained " << result.log.size() << " steps; checkpoint sha256 "
      << sha256_file(fs::path(out_dir) / kCheckpointBlob) << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& corpus_dir,
             const std::string& split, const std::string& out_path, bool markdown,
             std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const LoadedCorpus loaded = read_corpus_dir(corpus_dir);
  check_corpus_matches(ckpt.params, loaded.config);
  const EvalReport report = evaluate(ckpt.params, loaded.corpus.split(split));
  const std::string json = report.to_json() + "\n";
  if (out_path.empty()) out << json;
  else write_text(out_path, json);
  if (markdown) out << render_report(report);
  return kExitOk;
}

int cmd_align(const std::string& checkpoint, std::uint64_t pair, std::string corpus_dir,
              const std::string& split, const std::string& out_path, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (corpus_dir.empty()) corpus_dir = ckpt.corpus_dir;
  if (corpus_dir.empty())
    throw ConfigError("align: checkpoint records no corpus directory; pass --corpus");
  const LoadedCorpus loaded = read_corpus_dir(corpus_dir);
  check_corpus_matches(ckpt.params, loaded.config);
  const auto& records = loaded.corpus.split(split);
  const auto it = std::find_if(records.begin(), records.end(),
                               [pair](const Triple& t) { return t.id == pair; });
  if (it == records.end())
    throw Error(ErrorCode::kInvalidArgument,
                "align: no record with id " + std::to_string(pair) + " in split " + split);
  const auto insp = inspect_alignment(ckpt.params, *it, ckpt.config.train.ot,
                                      ckpt.config.train.threshold_mode);
  std::string text = "# pair\t" + std::to_string(pair) + "\n# similarity\n" +
                     matrix_to_tsv(insp.similarity) + "# plan\n" + matrix_to_tsv(insp.plan.plan) +
                     "# gamma\t" + format_tsv_value(insp.labels.threshold_used) +
                     "\n# labels\n" + matrix_to_tsv(insp.labels.labels) + "# fallback_rows\t";
  for (std::size_t i = 0; i < insp.labels.fallback_rows.size(); ++i)
    text += (i ? "," : "") + std::to_string(insp.labels.fallback_rows[i]);
  text += "\n";
  if (out_path.empty()) out << text;
  else write_text(out_path, text);
  return kExitOk;
}

int cmd_sinkhorn(const std::string& input, double epsilon, std::size_t iters, double tol,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Matrix sim = read_tsv_matrix(input);
  const TransportPlan plan = sinkhorn_solve(sim, OtConfig{epsilon, iters, tol});
  if (!plan.converged) {
    err << "warning: not converged after " << plan.iterations_used
        << " iterations (marginal error " << plan.final_marginal_error << ")\n";
  }
  const std::string text = matrix_to_tsv(plan.plan);
  if (out_path.empty()) out << text;
  else write_text(out_path, text);
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  const auto results = run_gradcheck_suite({seed, 1e-4});
  bool ok = true;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-22s max_rel_error=%.3e max_abs_error=%.3e entries=%zu\n",
                  r.name.c_str(), r.max_rel_error, r.max_abs_error, r.entries);
    out << line;
    ok = ok && r.max_rel_error < 1e-4;
  }
  if (!ok) throw NumericError("gradcheck: relative error above 1e-4");
  return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::string& corpus_dir,
               const std::string& out_path, const std::vector<std::string>& overrides,
               std::ostream& err) {
  GlobalConfig cfg = resolve_config(config_path, overrides);
  const LoadedCorpus loaded = read_corpus_dir(corpus_dir);
  cfg.corpus = loaded.config;
  cfg.validate();

  std::string csv = "toggles";
  for (auto s : cfg.ablate_seeds) csv += ",sumr_seed" + std::to_string(s);
  csv += ",mean\n";
  for (const Toggles& t : ablation_grid()) {
    TrainConfig tc = cfg.train;
    tc.toggles = t;
    tc.eval_every = 0;
    double total = 0.0;
    csv += toggles_label(t);
    for (auto seed : cfg.ablate_seeds) {
      tc.seed = seed;
      const TrainResult r = train(loaded.corpus, cfg.corpus, tc);
      const double sumr = evaluate(r.params, loaded.corpus.test).sum_r;
      total += sumr;
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.4f", sumr);
      csv += buf;
      err << "ablate: " << toggles_label(t) << " seed " << seed << " sumr " << sumr << "\n";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.4f\n", total / static_cast<double>(cfg.ablate_seeds.size()));
    csv += buf;
  }
  write_text(out_path, csv);
  return kExitOk;
}

int cmd_report(const std::string& in_path, std::ostream& out) {
  out << render_report_json(read_text(in_path));
  return kExitOk;
}

}  // namespace

std::string format_tsv_value(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string matrix_to_tsv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += '\t';
      out += format_tsv_value(m(r, c));
    }
    out += '\n';
  }
  return out;
}

Matrix read_tsv_matrix(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t count = 0;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, '\t')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end == field.c_str() || *end != '\0')
        throw ParseError("tsv: bad number '" + field + "' at line " + std::to_string(number),
                         number);
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      throw ParseError("tsv: ragged row at line " + std::to_string(number), number);
    ++rows;
  }
  if (rows == 0) throw ParseError("tsv: no rows in " + path.string());
  return Matrix(rows, cols, std::move(values));
}

void write_corpus_dir(const Corpus& corpus, const CorpusConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  ojson files = ojson::object();
  for (const char* split : kSplits) {
    const fs::path file = dir / (std::string(split) + ".jsonl");
    write_corpus(corpus.split(split), file);
    files[std::string(split) + ".jsonl"] = {{"records", corpus.split(split).size()},
                                            {"sha256", sha256_file(file)}};
  }
  ojson manifest;
  manifest["format"] = "cl2cm-corpus";
  manifest["config_toml"] = corpus_to_toml(cfg);
  manifest["files"] = std::move(files);
  manifest["train_noise"] = {{"source_tokens", corpus.train_noise.source_tokens},
                             {"substitutions", corpus.train_noise.substitutions},
                             {"deletions", corpus.train_noise.deletions},
                             {"insertions", corpus.train_noise.insertions}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "config.toml", corpus_to_toml(cfg));
}

LoadedCorpus read_corpus_dir(const fs::path& dir) {
  LoadedCorpus out;
  try {
    const auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
    out.config = parse_config_text(manifest.at("config_toml").get<std::string>(),
                                   (dir / "manifest.json").string())
                     .corpus;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("corpus manifest: " + std::string(e.what()));
  }
  out.corpus.train = read_corpus(dir / "train.jsonl");
  out.corpus.val = read_corpus(dir / "val.jsonl");
  out.corpus.test = read_corpus(dir / "test.jsonl");
  return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cl2cm: cross-lingual to cross-modal alignment toolkit", "cl2cm"};
  app.require_subcommand(1);

  std::string config_path, corpus_dir, out_path, checkpoint, split = "test", similarity, report_in;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::uint64_t pair = 0, gradcheck_seed = 7;
  double epsilon = 0.1, tol = 1e-6;
  std::size_t max_iters = 500;
  bool markdown = false;

  const auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--set", overrides, "Override a config value, e.g. train.epochs=5 (repeatable)");
  };

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus directory");
  gen->add_option("--config", config_path, "TOML config (CorpusConfig keys)")->check(CLI::ExistingFile);
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--seed", seed, "Corpus seed (overrides the config)");
  add_overrides(gen);

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--config", config_path, "TOML config")->check(CLI::ExistingFile);
  tr->add_option("--corpus", corpus_dir, "Corpus directory from gen-corpus")->required();
  tr->add_option("--out", out_path, "Checkpoint directory")->required();
  tr->add_option("--seed", seed, "Training seed (overrides the config)");
  add_overrides(tr);

  auto* ev = app.add_subcommand("eval", "Evaluate retrieval with the cross-modal network");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint directory or manifest")->required();
  ev->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  ev->add_option("--split", split, "train | val | test")->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--out", out_path, "Report JSON path (stdout when omitted)");
  ev->add_flag("--markdown", markdown, "Also print a markdown table");

  auto* al = app.add_subcommand("align", "Dump plan, threshold and pseudo-labels for one pair");
  al->add_option("--checkpoint", checkpoint, "Checkpoint directory or manifest")->required();
  al->add_option("--pair", pair, "Record id")->required();
  al->add_option("--corpus", corpus_dir, "Corpus directory (default: the training corpus)");
  std::string align_split = "train";
  al->add_option("--split", align_split, "Split holding the record")->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test"}));
  al->add_option("--out", out_path, "Output TSV (stdout when omitted)");

  auto* sk = app.add_subcommand("sinkhorn", "Solve entropic OT for a TSV similarity matrix");
  sk->add_option("--similarity", similarity, "Input TSV")->required()->check(CLI::ExistingFile);
  sk->add_option("--epsilon", epsilon, "Entropic regularization")->capture_default_str();
  sk->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
  sk->add_option("--tol", tol, "Marginal tolerance")->capture_default_str();
  sk->add_option("--out", out_path, "Output TSV (stdout when omitted)");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gc->add_option("--seed", gradcheck_seed, "Random seed")->capture_default_str();

  auto* ab = app.add_subcommand("ablate", "Run the seven-row component ablation");
  ab->add_option("--config", config_path, "TOML config")->check(CLI::ExistingFile);
  ab->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  ab->add_option("--out", out_path, "CSV output")->required();
  add_overrides(ab);

  auto* rp = app.add_subcommand("report", "Render a report JSON as a markdown table");
  rp->add_option("--in", report_in, "report.json")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    err << "ERROR:usage:" << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(config_path, out_path, seed, overrides, out);
    if (tr->parsed()) return cmd_train(config_path, corpus_dir, out_path, seed, overrides, out);
    if (ev->parsed()) return cmd_eval(checkpoint, corpus_dir, split, out_path, markdown, out);
    if (al->parsed()) return cmd_align(checkpoint, pair, corpus_dir, align_split, out_path, out);
    if (sk->parsed()) return cmd_sinkhorn(similarity, epsilon, max_iters, tol, out_path, out, err);
    if (gc->parsed()) return cmd_gradcheck(gradcheck_seed, out);
    if (ab->parsed()) return cmd_ablate(config_path, corpus_dir, out_path, overrides, err);
    if (rp->parsed()) return cmd_report(report_in, out);
  } catch (const Error& e) {
    err << "ERROR:" << error_tag(e.code()) << ":" << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "ERROR:runtime:" << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help() << "ERROR:usage:no subcommand\n";
  return kExitUsage;
}

}  // namespace cl2cm
