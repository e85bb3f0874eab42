#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gran/error.hpp"

namespace gran {

// Layer stack described by a small human-readable text format:
//
//   name mnist_cnn_desk
//   input 1 28 28
//   conv 8 3 3 1 0      # filters kh kw stride pad
//   relu
//   maxpool 2 2         # window stride
//   flatten
//   dense 64
//   relu
//   dense 10
//   softmax
//
// '#' starts a comment, blank lines are ignored. The stack must end with
// softmax; the last dense layer defines the class count.

enum class LayerKind { Conv2d, Dense, Relu, MaxPool, Flatten, Softmax };

struct LayerSpec {
  LayerKind kind{};
  int filters = 0, kh = 0, kw = 0, stride = 1, pad = 0;  // conv
  int units = 0;                                         // dense
  int window = 0, pool_stride = 0;                       // maxpool
};

struct ArchConfig {
  std::string name;
  std::vector<int> input_shape;  // C,H,W
  std::vector<LayerSpec> layers;

  int class_count() const {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
      if (it->kind == LayerKind::Dense) return it->units;
    }
    throw UsageError("architecture '" + name + "' has no dense layer");
  }

  static ArchConfig parse(const std::string& text) {
    ArchConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string word;
      if (!(ls >> word)) continue;
      auto want_ints = [&](int n, int* out) {
        for (int i = 0; i < n; ++i) {
          if (!(ls >> out[i])) {
            throw UsageError("architecture line " + std::to_string(lineno) + ": '" + word +
                             "' expects " + std::to_string(n) + " integer arguments");
          }
        }
      };
      if (word == "name") {
        ls >> cfg.name;
      } else if (word == "input") {
        int v[3];
        want_ints(3, v);
        cfg.input_shape = {v[0], v[1], v[2]};
      } else if (word == "conv") {
        LayerSpec l;
        l.kind = LayerKind::Conv2d;
        int v[5];
        want_ints(5, v);
        l.filters = v[0];
        l.kh = v[1];
        l.kw = v[2];
        l.stride = v[3];
        l.pad = v[4];
        cfg.layers.push_back(l);
      } else if (word == "dense") {
        LayerSpec l;
        l.kind = LayerKind::Dense;
        int v[1];
        want_ints(1, v);
        l.units = v[0];
        cfg.layers.push_back(l);
      } else if (word == "relu") {
        cfg.layers.push_back(LayerSpec{LayerKind::Relu});
      } else if (word == "maxpool") {
        LayerSpec l;
        l.kind = LayerKind::MaxPool;
        int v[2];
        want_ints(2, v);
        l.window = v[0];
        l.pool_stride = v[1];
        cfg.layers.push_back(l);
      } else if (word == "flatten") {
        cfg.layers.push_back(LayerSpec{LayerKind::Flatten});
      } else if (word == "softmax") {
        cfg.layers.push_back(LayerSpec{LayerKind::Softmax});
      } else {
        throw UsageError("architecture line " + std::to_string(lineno) + ": unknown layer '" + word + "'");
      }
    }
    cfg.validate();
    return cfg;
  }

  static ArchConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("architecture file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      return parse(buf.str());
    } catch (const UsageError& e) {
      throw UsageError(path + ": " + e.what());
    }
  }

  std::string to_text() const {
    std::ostringstream os;
    if (!name.empty()) os << "name " << name << "\n";
    os << "input " << input_shape[0] << ' ' << input_shape[1] << ' ' << input_shape[2] << "\n";
    for (const auto& l : layers) {
      switch (l.kind) {
        case LayerKind::Conv2d:
          os << "conv " << l.filters << ' ' << l.kh << ' ' << l.kw << ' ' << l.stride << ' ' << l.pad << "\n";
          break;
        case LayerKind::Dense:
          os << "dense " << l.units << "\n";
          break;
        case LayerKind::Relu:
          os << "relu\n";
          break;
        case LayerKind::MaxPool:
          os << "maxpool " << l.window << ' ' << l.pool_stride << "\n";
          break;
        case LayerKind::Flatten:
          os << "flatten\n";
          break;
        case LayerKind::Softmax:
          os << "softmax\n";
          break;
      }
    }
    return os.str();
  }

  void validate() const {
    if (input_shape.size() != 3) throw UsageError("architecture: missing or malformed 'input C H W' line");
    for (int d : input_shape) {
      if (d <= 0) throw UsageError("architecture: non-positive input extent");
    }
    if (layers.empty() || layers.back().kind != LayerKind::Softmax) {
      throw UsageError("architecture: stack must end with softmax");
    }
    for (size_t i = 0; i + 1 < layers.size(); ++i) {
      if (layers[i].kind == LayerKind::Softmax) {
        throw UsageError("architecture: softmax may only appear as the final layer");
      }
    }
    bool flat = false;
    for (const auto& l : layers) {
      if (l.kind == LayerKind::Flatten) flat = true;
      if (l.kind == LayerKind::Dense && !flat) {
        throw UsageError("architecture: dense before flatten");
      }
      if ((l.kind == LayerKind::Conv2d || l.kind == LayerKind::MaxPool) && flat) {
        throw UsageError("architecture: conv/maxpool after flatten");
      }
      if (l.kind == LayerKind::Conv2d && (l.filters <= 0 || l.kh <= 0 || l.kw <= 0 || l.stride <= 0 || l.pad < 0)) {
        throw UsageError("architecture: bad conv parameters");
      }
      if (l.kind == LayerKind::Dense && l.units <= 0) throw UsageError("architecture: bad dense units");
      if (l.kind == LayerKind::MaxPool && (l.window <= 0 || l.pool_stride <= 0)) {
        throw UsageError("architecture: bad maxpool parameters");
      }
    }
    class_count();  // throws when there is no dense layer
  }
};

}  // namespace gran
