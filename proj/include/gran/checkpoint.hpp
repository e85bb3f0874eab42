#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gran/error.hpp"
#include "gran/layers.hpp"
#include "gran/model.hpp"

// Model checkpoint container: magic bytes, a format version, the config
// fingerprint of the producing run, the architecture text, and the named
// parameter tensors as little-endian 64-bit floats, in stable Θ order.
// A trailing checksum (same value Model::checksum() reports) is verified on
// load so a corrupted or hand-edited file is rejected.

namespace gran {

namespace ckpt_detail {

constexpr char kMagic[8] = {'G', 'R', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

inline void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint32_t read_u32(std::istream& in, const std::string& path) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw ArtifactError(path + ": truncated checkpoint");
  return v;
}

inline uint64_t read_u64(std::istream& in, const std::string& path) {
  uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8)) throw ArtifactError(path + ": truncated checkpoint");
  return v;
}

inline std::string read_string(std::istream& in, const std::string& path) {
  const uint32_t len = read_u32(in, path);
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw ArtifactError(path + ": truncated checkpoint");
  return s;
}

}  // namespace ckpt_detail

inline void save_model(const std::string& path, const Model& model, const std::string& fingerprint) {
  using namespace ckpt_detail;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError(path + ": cannot write checkpoint");
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_string(out, fingerprint);
  write_string(out, model.arch().to_text());
  write_u32(out, static_cast<uint32_t>(model.params().size()));
  for (size_t t = 0; t < model.params().size(); ++t) {
    const Tensor& p = model.params()[t];
    write_string(out, model.param_names()[t]);
    write_u32(out, static_cast<uint32_t>(p.ndim()));
    for (int d : p.shape()) write_u32(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(p.data()), p.numel() * 8);
  }
  write_u64(out, model.checksum());
  if (!out) throw ArtifactError(path + ": short write");
}

struct LoadedModel {
  Model model;
  std::string fingerprint;
};

inline LoadedModel load_model(const std::string& path) {
  using namespace ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path + ": checkpoint not found");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ArtifactError(path + ": not a model checkpoint (bad magic)");
  }
  const uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw ArtifactError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::string fingerprint = read_string(in, path);
  const ArchConfig arch = ArchConfig::parse(read_string(in, path));
  const uint32_t count = read_u32(in, path);

  std::vector<Tensor> params;
  std::vector<std::string> names;
  params.reserve(count);
  names.reserve(count);
  for (uint32_t t = 0; t < count; ++t) {
    names.push_back(read_string(in, path));
    const uint32_t ndim = read_u32(in, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_u32(in, path));
    Tensor p(shape);
    if (!in.read(reinterpret_cast<char*>(p.data()), p.numel() * 8)) {
      throw ArtifactError(path + ": truncated checkpoint");
    }
    params.push_back(std::move(p));
  }
  const uint64_t stored = read_u64(in, path);
  Model model(arch, std::move(params), std::move(names));
  if (model.checksum() != stored) {
    throw ArtifactError(path + ": checkpoint checksum mismatch, file corrupted or edited");
  }
  return LoadedModel{std::move(model), std::move(fingerprint)};
}

}  // namespace gran
