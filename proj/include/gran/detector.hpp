#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gran/error.hpp"
#include "gran/rng.hpp"

namespace gran {

enum class DetectorKind : uint8_t { Gran = 0, Lid = 1 };

inline const char* detector_name(DetectorKind k) { return k == DetectorKind::Gran ? "gran" : "lid"; }

// Logistic regression over an n-feature vector: n weights plus one bias.
// Features are z-scored with statistics taken from the training partition
// (std floored at 1e-12); the head refuses to score against a model other
// than the one its features came from.
struct DetectorHead {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> stddev;
  uint64_t model_checksum = 0;
  DetectorKind kind = DetectorKind::Gran;

  size_t feature_count() const { return weights.size(); }
  size_t parameter_count() const { return weights.size() + 1; }
};

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline std::vector<double> standardize(const DetectorHead& head, const std::vector<double>& f) {
  if (f.size() != head.weights.size()) {
    throw ShapeError("score: feature length " + std::to_string(f.size()) + " does not match head (" +
                     std::to_string(head.weights.size()) + ")");
  }
  std::vector<double> z(f.size());
  for (size_t i = 0; i < f.size(); ++i) z[i] = (f[i] - head.mean[i]) / head.stddev[i];
  return z;
}

inline double score(const DetectorHead& head, const std::vector<double>& f) {
  const std::vector<double> z = standardize(head, f);
  double acc = head.bias;
  for (size_t i = 0; i < z.size(); ++i) acc += head.weights[i] * z[i];
  return sigmoid(acc);
}

// Full-batch gradient descent on the L2-penalized cross-entropy
// (lambda = 1e-4 on the weights, bias unpenalized), zero-initialized, with a
// halving line search per step. Stops when the gradient norm drops below
// 1e-6 or after 10,000 iterations. Deterministic; the seed parameter is
// accepted for interface symmetry with the rest of the pipeline but the
// convex fit does not consume randomness.
inline DetectorHead fit_detector(const std::vector<std::vector<double>>& features,
                                 const std::vector<int>& labels, uint64_t seed = 0) {
  (void)seed;
  if (features.size() != labels.size()) throw ShapeError("fit_detector: features/labels length mismatch");
  if (features.empty()) throw UsageError("fit_detector: empty training data");
  const size_t n = features[0].size();
  const size_t count = features.size();
  int64_t pos = 0;
  for (int l : labels) pos += l;
  if (pos == 0 || pos == static_cast<int64_t>(count)) {
    throw UsageError("fit_detector: training data contains a single class");
  }

  DetectorHead head;
  head.weights.assign(n, 0.0);
  head.mean.assign(n, 0.0);
  head.stddev.assign(n, 0.0);

  for (const auto& f : features) {
    if (f.size() != n) throw ShapeError("fit_detector: ragged feature matrix");
    for (size_t i = 0; i < n; ++i) head.mean[i] += f[i];
  }
  for (size_t i = 0; i < n; ++i) head.mean[i] /= static_cast<double>(count);
  for (const auto& f : features) {
    for (size_t i = 0; i < n; ++i) {
      const double d = f[i] - head.mean[i];
      head.stddev[i] += d * d;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    head.stddev[i] = std::max(std::sqrt(head.stddev[i] / static_cast<double>(count)), 1e-12);
  }

  std::vector<std::vector<double>> z(count, std::vector<double>(n));
  for (size_t r = 0; r < count; ++r) {
    for (size_t i = 0; i < n; ++i) z[r][i] = (features[r][i] - head.mean[i]) / head.stddev[i];
  }

  constexpr double kLambda = 1e-4;
  constexpr double kGradTol = 1e-6;
  constexpr int kMaxIters = 10000;

  auto objective = [&](const std::vector<double>& w, double b) {
    double loss = 0.0;
    for (size_t r = 0; r < count; ++r) {
      double m = b;
      for (size_t i = 0; i < n; ++i) m += w[i] * z[r][i];
      // log(1 + exp(-t)) without overflow
      const double t = labels[r] == 1 ? m : -m;
      loss += t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    }
    loss /= static_cast<double>(count);
    double pen = 0.0;
    for (double wi : w) pen += wi * wi;
    return loss + 0.5 * kLambda * pen;
  };

  std::vector<double> gw(n);
  double gb = 0.0;
  double step = 1.0;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    std::fill(gw.begin(), gw.end(), 0.0);
    gb = 0.0;
    for (size_t r = 0; r < count; ++r) {
      double m = head.bias;
      for (size_t i = 0; i < n; ++i) m += head.weights[i] * z[r][i];
      const double err = sigmoid(m) - labels[r];
      for (size_t i = 0; i < n; ++i) gw[i] += err * z[r][i];
      gb += err;
    }
    double gnorm2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
      gw[i] = gw[i] / static_cast<double>(count) + kLambda * head.weights[i];
      gnorm2 += gw[i] * gw[i];
    }
    gb /= static_cast<double>(count);
    gnorm2 += gb * gb;
    if (std::sqrt(gnorm2) < kGradTol) break;

    const double base = objective(head.weights, head.bias);
    std::vector<double> wtrial(n);
    double btrial = 0.0;
    step = std::min(step * 2.0, 64.0);
    for (int half = 0; half < 40; ++half) {
      for (size_t i = 0; i < n; ++i) wtrial[i] = head.weights[i] - step * gw[i];
      btrial = head.bias - step * gb;
      if (objective(wtrial, btrial) <= base - 1e-4 * step * gnorm2) break;
      step *= 0.5;
    }
    head.weights = wtrial;
    head.bias = btrial;
  }
  return head;
}

// ---- head file ----

namespace head_detail {
constexpr char kMagic[8] = {'G', 'R', 'A', 'N', 'H', 'E', 'A', 'D'};
constexpr uint32_t kVersion = 1;
}  // namespace head_detail

inline void save_head(const std::string& path, const DetectorHead& head, const std::string& fingerprint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError(path + ": cannot write detector head");
  out.write(head_detail::kMagic, 8);
  const uint32_t version = head_detail::kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const uint8_t kind = static_cast<uint8_t>(head.kind);
  out.write(reinterpret_cast<const char*>(&kind), 1);
  out.write(reinterpret_cast<const char*>(&head.model_checksum), 8);
  const uint32_t flen = static_cast<uint32_t>(fingerprint.size());
  out.write(reinterpret_cast<const char*>(&flen), 4);
  out.write(fingerprint.data(), flen);
  const uint32_t n = static_cast<uint32_t>(head.weights.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(head.weights.data()), n * 8);
  out.write(reinterpret_cast<const char*>(&head.bias), 8);
  out.write(reinterpret_cast<const char*>(head.mean.data()), n * 8);
  out.write(reinterpret_cast<const char*>(head.stddev.data()), n * 8);
  if (!out) throw ArtifactError(path + ": short write");
}

struct LoadedHead {
  DetectorHead head;
  std::string fingerprint;
};

inline LoadedHead load_head(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(path + ": detector head not found");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, head_detail::kMagic, 8) != 0) {
    throw ArtifactError(path + ": not a detector head file");
  }
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != head_detail::kVersion) {
    throw ArtifactError(path + ": unsupported head version " + std::to_string(version));
  }
  LoadedHead out;
  uint8_t kind = 0;
  in.read(reinterpret_cast<char*>(&kind), 1);
  out.head.kind = static_cast<DetectorKind>(kind);
  in.read(reinterpret_cast<char*>(&out.head.model_checksum), 8);
  uint32_t flen = 0;
  in.read(reinterpret_cast<char*>(&flen), 4);
  out.fingerprint.assign(flen, '\0');
  if (flen) in.read(out.fingerprint.data(), flen);
  uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  out.head.weights.resize(n);
  out.head.mean.resize(n);
  out.head.stddev.resize(n);
  in.read(reinterpret_cast<char*>(out.head.weights.data()), n * 8);
  in.read(reinterpret_cast<char*>(&out.head.bias), 8);
  in.read(reinterpret_cast<char*>(out.head.mean.data()), n * 8);
  in.read(reinterpret_cast<char*>(out.head.stddev.data()), n * 8);
  if (!in) throw ArtifactError(path + ": truncated detector head");
  return out;
}

}  // namespace gran
