#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gran/dataset.hpp"
#include "gran/error.hpp"

// IDX container IO, bit-exact with the original MNIST distribution:
// two zero bytes, a dtype byte, a rank byte, rank big-endian uint32 extents,
// then the payload in row-major order. Unsigned-byte (0x08) files carry raw
// pixels/labels; double (0x0E) files carry [0,1] image tensors produced by
// the pipeline itself (perturbed set-up images).

namespace gran::idx {

static_assert(std::endian::native == std::endian::little,
              "IDX and checkpoint IO assume a little-endian host");

constexpr uint8_t kTypeU8 = 0x08;
constexpr uint8_t kTypeF64 = 0x0E;

namespace detail {

inline uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ArtifactError(path + ": truncated IDX header");
  }
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

inline void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::vector<int> read_header(std::istream& in, const std::string& path, uint8_t want_type) {
  unsigned char magic[4];
  if (!in.read(reinterpret_cast<char*>(magic), 4)) {
    throw ArtifactError(path + ": cannot parse IDX header (file empty or unreadable)");
  }
  if (magic[0] != 0 || magic[1] != 0) {
    throw ArtifactError(path + ": bad IDX magic number");
  }
  if (magic[2] != want_type) {
    throw ArtifactError(path + ": IDX dtype 0x" + std::to_string(magic[2]) + " does not match expected");
  }
  const int rank = magic[3];
  if (rank < 1 || rank > 4) {
    throw ArtifactError(path + ": unsupported IDX rank " + std::to_string(rank));
  }
  std::vector<int> dims(static_cast<size_t>(rank));
  for (auto& d : dims) d = static_cast<int>(read_be32(in, path));
  return dims;
}

inline int64_t count_of(const std::vector<int>& dims) {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

}  // namespace detail

struct U8File {
  std::vector<int> dims;
  std::vector<uint8_t> data;
};

struct F64File {
  std::vector<int> dims;
  std::vector<double> data;
};

inline U8File read_u8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path + ": cannot open IDX file");
  U8File f;
  f.dims = detail::read_header(in, path, kTypeU8);
  const int64_t n = detail::count_of(f.dims);
  f.data.resize(static_cast<size_t>(n));
  if (!in.read(reinterpret_cast<char*>(f.data.data()), n)) {
    throw ArtifactError(path + ": truncated IDX payload, header promises " + std::to_string(n) + " bytes");
  }
  return f;
}

inline F64File read_f64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path + ": cannot open IDX file");
  F64File f;
  f.dims = detail::read_header(in, path, kTypeF64);
  const int64_t n = detail::count_of(f.dims);
  f.data.resize(static_cast<size_t>(n));
  if (!in.read(reinterpret_cast<char*>(f.data.data()), n * 8)) {
    throw ArtifactError(path + ": truncated IDX payload, header promises " + std::to_string(n) + " values");
  }
  return f;
}

inline void write_u8(const std::string& path, const std::vector<int>& dims,
                     const std::vector<uint8_t>& data) {
  if (detail::count_of(dims) != static_cast<int64_t>(data.size())) {
    throw ShapeError(path + ": IDX dims do not match payload size");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError(path + ": cannot write IDX file");
  const unsigned char magic[4] = {0, 0, kTypeU8, static_cast<unsigned char>(dims.size())};
  out.write(reinterpret_cast<const char*>(magic), 4);
  for (int d : dims) detail::write_be32(out, static_cast<uint32_t>(d));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw ArtifactError(path + ": short write");
}

inline void write_f64(const std::string& path, const std::vector<int>& dims,
                      const std::vector<double>& data) {
  if (detail::count_of(dims) != static_cast<int64_t>(data.size())) {
    throw ShapeError(path + ": IDX dims do not match payload size");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError(path + ": cannot write IDX file");
  const unsigned char magic[4] = {0, 0, kTypeF64, static_cast<unsigned char>(dims.size())};
  out.write(reinterpret_cast<const char*>(magic), 4);
  for (int d : dims) detail::write_be32(out, static_cast<uint32_t>(d));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()) * 8);
  if (!out) throw ArtifactError(path + ": short write");
}

// Loads an image file plus its label file into a Dataset. Image files may be
// rank 3 (N,H,W — single channel) or rank 4 (N,C,H,W), ubyte (scaled to
// [0,1]) or double (validated to be within [0,1]). Sample ids are file
// positions, stable across runs.
inline Dataset load_dataset(const std::string& images_path, const std::string& labels_path,
                            int64_t limit = -1) {
  std::ifstream probe(images_path, std::ios::binary);
  if (!probe) throw ArtifactError(images_path + ": cannot open IDX file");
  unsigned char magic[4] = {0, 0, 0, 0};
  probe.read(reinterpret_cast<char*>(magic), 4);
  probe.close();

  std::vector<int> dims;
  std::vector<double> pixels;
  if (magic[2] == kTypeF64) {
    F64File f = read_f64(images_path);
    dims = f.dims;
    pixels = std::move(f.data);
  } else {
    U8File f = read_u8(images_path);
    dims = f.dims;
    pixels.resize(f.data.size());
    for (size_t i = 0; i < f.data.size(); ++i) pixels[i] = f.data[i] / 255.0;
  }
  if (dims.size() != 3 && dims.size() != 4) {
    throw ArtifactError(images_path + ": expected rank 3 or 4 image file, got rank " +
                        std::to_string(dims.size()));
  }

  const U8File labels = read_u8(labels_path);
  if (labels.dims.size() != 1) throw ArtifactError(labels_path + ": expected rank 1 label file");
  if (labels.dims[0] != dims[0]) {
    throw ArtifactError(images_path + ": image count " + std::to_string(dims[0]) +
                        " does not match label count " + std::to_string(labels.dims[0]) + " in " +
                        labels_path);
  }

  Dataset ds;
  ds.image_shape = dims.size() == 3 ? std::vector<int>{1, dims[1], dims[2]}
                                    : std::vector<int>{dims[1], dims[2], dims[3]};
  const int64_t per = static_cast<int64_t>(ds.image_shape[0]) * ds.image_shape[1] * ds.image_shape[2];
  int64_t n = dims[0];
  if (limit >= 0) n = std::min<int64_t>(n, limit);

  int max_label = 0;
  ds.items.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    Tensor px(ds.image_shape,
              std::vector<double>(pixels.begin() + i * per, pixels.begin() + (i + 1) * per));
    check_pixel_range(px, images_path + " sample " + std::to_string(i));
    const int label = labels.data[static_cast<size_t>(i)];
    max_label = std::max(max_label, label);
    ds.items.push_back(LabeledImage{std::move(px), label, i});
  }
  ds.class_count = max_label + 1;
  return ds;
}

}  // namespace gran::idx
