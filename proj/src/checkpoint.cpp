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


#include "cl2cm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace cl2cm {
namespace {

using ojson = nlohmann::ordered_json;

enum class Slot { kValue, kFirstMoment, kSecondMoment };
constexpr const char* kSlotNames[] = {"value", "first_moment", "second_moment"};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void append_le(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double read_le(const std::string& blob, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

const Matrix& slot_matrix(const ModelParams& p, ParamBlock b, Slot s) {
  switch (s) {
    case Slot::kValue: return p.block(b);
    case Slot::kFirstMoment: return p.first_moment(b);
    case Slot::kSecondMoment: return p.second_moment(b);
  }
  return p.block(b);
}

Matrix& mutable_slot(ModelParams& p, ParamBlock b, Slot s) {
  switch (s) {
    case Slot::kValue: return p.mutable_block(b);
    case Slot::kFirstMoment: return p.mutable_first_moment(b);
    case Slot::kSecondMoment: return p.mutable_second_moment(b);
  }
  return p.mutable_block(b);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIo, "sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_all(path)); }

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  const ModelParams& p = ckpt.params;
  const ModelDims& d = p.dims();

  std::string blob;
  ojson blocks = ojson::array();
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < kNumParamBlocks; ++i) {
      const auto b = static_cast<ParamBlock>(i);
      const Matrix& m = slot_matrix(p, b, static_cast<Slot>(s));
      blocks.push_back({{"name", block_name(b)},
                        {"slot", kSlotNames[s]},
                        {"rows", m.rows()},
                        {"cols", m.cols()},
                        {"offset", blob.size()},
                        {"steps", p.block_steps(b)}});
      for (double x : m.flat()) append_le(blob, x);
    }
  }

  ojson manifest;
  manifest["format"] = "cl2cm-checkpoint";
  manifest["version"] = 1;
  manifest["seed"] = p.seed();
  manifest["step_count"] = p.step_count();
  manifest["dims"] = {{"src_vocab", d.src_vocab}, {"tgt_vocab", d.tgt_vocab},
                      {"feat_dim", d.feat_dim},   {"embed_dim", d.embed_dim},
                      {"dim", d.dim}};
  manifest["corpus_dir"] = ckpt.corpus_dir;
  manifest["blob"] = kCheckpointBlob;
  manifest["blob_sha256"] = sha256_hex(blob);
  manifest["blocks"] = std::move(blocks);
  manifest["config_toml"] = to_toml(ckpt.config);

  std::ofstream bin(dir / kCheckpointBlob, std::ios::binary | std::ios::trunc);
  if (!bin) throw IoError("cannot write " + (dir / kCheckpointBlob).string());
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream js(dir / kCheckpointManifest, std::ios::binary | std::ios::trunc);
  if (!js) throw IoError("cannot write " + (dir / kCheckpointManifest).string());
  js << manifest.dump(2) << '\n';
  if (!bin || !js) throw IoError("checkpoint write failed in " + dir.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto dir = std::filesystem::is_directory(path) ? path : path.parent_path();
  const auto manifest_path =
      std::filesystem::is_directory(path) ? path / kCheckpointManifest : path;
  try {
    const auto manifest = nlohmann::json::parse(read_all(manifest_path));
    if (manifest.at("format").get<std::string>() != "cl2cm-checkpoint")
      throw ParseError("checkpoint: unexpected format tag");
    const auto& jd = manifest.at("dims");
    ModelDims dims{jd.at("src_vocab").get<std::size_t>(), jd.at("tgt_vocab").get<std::size_t>(),
                   jd.at("feat_dim").get<std::size_t>(), jd.at("embed_dim").get<std::size_t>(),
                   jd.at("dim").get<std::size_t>()};
    Checkpoint out{ModelParams::zeros(dims, manifest.at("seed").get<std::uint64_t>()),
                   parse_config_text(manifest.at("config_toml").get<std::string>(),
                                     manifest_path.string()),
                   manifest.value("corpus_dir", std::string())};
    out.params.set_step_count(manifest.at("step_count").get<std::uint64_t>());

    const std::string blob = read_all(dir / manifest.at("blob").get<std::string>());
    for (const auto& entry : manifest.at("blocks")) {
      const std::string name = entry.at("name").get<std::string>();
      const std::string slot = entry.at("slot").get<std::string>();
      std::size_t bi = 0;
      while (bi < kNumParamBlocks && name != block_name(static_cast<ParamBlock>(bi))) ++bi;
      int si = 0;
      while (si < 3 && slot != kSlotNames[si]) ++si;
      if (bi == kNumParamBlocks || si == 3)
        throw ParseError("checkpoint: unknown block " + name + "/" + slot);
      const auto b = static_cast<ParamBlock>(bi);
      Matrix& target = mutable_slot(out.params, b, static_cast<Slot>(si));
      const auto rows = entry.at("rows").get<std::size_t>();
      const auto cols = entry.at("cols").get<std::size_t>();
      const auto offset = entry.at("offset").get<std::size_t>();
      if (rows != target.rows() || cols != target.cols())
        throw ParseError("checkpoint: block " + name + " shape disagrees with dims");
      if (offset + rows * cols * 8 > blob.size())
        throw ParseError("checkpoint: blob too short for block " + name);
      std::vector<double> values(rows * cols);
      for (std::size_t k = 0; k < values.size(); ++k) values[k] = read_le(blob, offset + 8 * k);
      target = Matrix(rows, cols, std::move(values));
      if (si == 0) out.params.set_block_steps(b, entry.at("steps").get<std::uint64_t>());
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint: malformed manifest " + manifest_path.string() + ": " +
                     e.what());
  }
}

}  // namespace cl2cm
