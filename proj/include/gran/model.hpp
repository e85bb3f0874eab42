#pragma once

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "gran/layers.hpp"
#include "gran/ops.hpp"
#include "gran/rng.hpp"
#include "gran/tape.hpp"
#include "gran/tensor.hpp"

namespace gran {

struct Prediction {
  Tensor probs;  // length-C, sums to 1 within 1e-6
  int label;     // argmax, ties broken by lowest index
};

// A classifier: an ordered layer stack plus its named parameter tensors.
// Parameter order is stable (layer order, weight before bias) and feature
// vector positions depend on it, so it is preserved across save/load.
class Model {
 public:
  Model(ArchConfig arch, std::vector<Tensor> params, std::vector<std::string> names)
      : arch_(std::move(arch)), params_(std::move(params)), names_(std::move(names)) {}

  // Fresh model with uniform fan-in initialization: weights ~ U(-a, a) with
  // a = sqrt(1 / fan_in), biases zero.
  static Model init(const ArchConfig& arch, uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    std::vector<Tensor> params;
    std::vector<std::string> names;
    std::vector<int> shape = arch.input_shape;
    int conv_i = 0, dense_i = 0;
    for (const auto& l : arch.layers) {
      switch (l.kind) {
        case LayerKind::Conv2d: {
          ++conv_i;
          const int c = shape[0];
          Tensor w({l.filters, c, l.kh, l.kw});
          const double a = std::sqrt(1.0 / (static_cast<double>(c) * l.kh * l.kw));
          for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-a, a);
          params.push_back(std::move(w));
          names.push_back("conv" + std::to_string(conv_i) + ".weight");
          params.push_back(Tensor({l.filters}));
          names.push_back("conv" + std::to_string(conv_i) + ".bias");
          shape = {l.filters, (shape[1] + 2 * l.pad - l.kh) / l.stride + 1,
                   (shape[2] + 2 * l.pad - l.kw) / l.stride + 1};
          break;
        }
        case LayerKind::Dense: {
          ++dense_i;
          const int in = shape[1];
          Tensor w({in, l.units});
          const double a = std::sqrt(1.0 / in);
          for (int64_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-a, a);
          params.push_back(std::move(w));
          names.push_back("dense" + std::to_string(dense_i) + ".weight");
          params.push_back(Tensor({l.units}));
          names.push_back("dense" + std::to_string(dense_i) + ".bias");
          shape = {1, l.units};
          break;
        }
        case LayerKind::MaxPool:
          shape = {shape[0], (shape[1] - l.window) / l.pool_stride + 1,
                   (shape[2] - l.window) / l.pool_stride + 1};
          break;
        case LayerKind::Flatten:
          shape = {1, shape[0] * shape[1] * shape[2]};
          break;
        case LayerKind::Relu:
        case LayerKind::Softmax:
          break;
      }
      if (shape.size() == 3 && (shape[1] <= 0 || shape[2] <= 0)) {
        throw UsageError("architecture '" + arch.name + "': spatial extent collapsed to zero");
      }
    }
    return Model(arch, std::move(params), std::move(names));
  }

  const ArchConfig& arch() const { return arch_; }
  int class_count() const { return arch_.class_count(); }

  int param_tensor_count() const { return static_cast<int>(params_.size()); }
  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
  }
  const std::vector<Tensor>& params() const { return params_; }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }

  // FNV over the architecture text and all parameter bytes; binds feature
  // caches, detector heads and reference files to one set of weights.
  uint64_t checksum() const {
    uint64_t h = fnv1a64(arch_.to_text());
    for (const auto& p : params_) {
      h = fnv1a64(p.data(), static_cast<size_t>(p.numel()) * sizeof(double), h);
    }
    return h;
  }

  struct TapedRun {
    ValueId input = -1;
    ValueId logits = -1;  // input of the final softmax
    ValueId probs = -1;
    std::vector<ValueId> param_ids;            // one per parameter tensor, Θ order
    std::vector<ValueId> activations;          // post-nonlinearity outputs, see below
  };

  // Runs the layer stack on the given tape. `input_grad` registers x as a
  // differentiable leaf (used by the attacks). `collect_activations` records
  // the post-nonlinearity output of each parameterized layer (relu after
  // conv/dense, final softmax), flattened order, for the LID baseline.
  TapedRun forward(Tape& tape, const Tensor& x, bool input_grad = false,
                   bool collect_activations = false) const {
    check_input(x);
    run_counters().model_forwards++;
    TapedRun run;
    run.input = tape.leaf(x, input_grad);
    ValueId cur = run.input;
    size_t pi = 0;
    bool prev_parameterized = false;
    for (const auto& l : arch_.layers) {
      switch (l.kind) {
        case LayerKind::Conv2d: {
          const ValueId w = tape.leaf(params_[pi], true);
          run.param_ids.push_back(w);
          ++pi;
          const ValueId b = tape.leaf(params_[pi], true);
          run.param_ids.push_back(b);
          ++pi;
          cur = tape.add_bias(tape.conv2d(cur, w, l.stride, l.pad), b);
          prev_parameterized = true;
          break;
        }
        case LayerKind::Dense: {
          const ValueId w = tape.leaf(params_[pi], true);
          run.param_ids.push_back(w);
          ++pi;
          const ValueId b = tape.leaf(params_[pi], true);
          run.param_ids.push_back(b);
          ++pi;
          cur = tape.add_bias(tape.matmul(cur, w), b);
          prev_parameterized = true;
          break;
        }
        case LayerKind::Relu:
          cur = tape.relu(cur);
          if (collect_activations && prev_parameterized) run.activations.push_back(cur);
          prev_parameterized = false;
          break;
        case LayerKind::MaxPool:
          cur = tape.maxpool(cur, l.window, l.pool_stride);
          prev_parameterized = false;
          break;
        case LayerKind::Flatten: {
          const auto& s = tape.value(cur).shape();
          int64_t n = 1;
          for (int d : s) n *= d;
          cur = tape.reshape(cur, {1, static_cast<int>(n)});
          break;
        }
        case LayerKind::Softmax:
          run.logits = cur;
          cur = tape.softmax(cur);
          if (collect_activations) run.activations.push_back(cur);
          prev_parameterized = false;
          break;
      }
    }
    run.probs = cur;
    return run;
  }

  Prediction predict(const Tensor& x) const {
    Tape tape(false);
    const TapedRun run = forward(tape, x);
    Tensor probs = tape.value(run.probs).reshaped({class_count()});
    return Prediction{probs, ops::argmax(probs)};
  }

  // Flattened post-nonlinearity activations per parameterized layer.
  std::vector<Tensor> activations(const Tensor& x) const {
    Tape tape(false);
    const TapedRun run = forward(tape, x, false, true);
    std::vector<Tensor> out;
    out.reserve(run.activations.size());
    for (ValueId id : run.activations) {
      const Tensor& t = tape.value(id);
      out.push_back(t.reshaped({static_cast<int>(t.numel())}));
    }
    return out;
  }

  void check_input(const Tensor& x) const {
    const auto& in = arch_.input_shape;
    if (x.shape() != in) {
      throw ShapeError("model '" + arch_.name + "': input shape " + x.shape_str() + " does not match " +
                       Tensor::shape_to_string(in));
    }
  }

 private:
  ArchConfig arch_;
  std::vector<Tensor> params_;
  std::vector<std::string> names_;
};

// -log(probs[y]) with the probability floored at 1e-12. The taped training
// and feature paths use Tape::softmax_cross_entropy, which produces the same
// value from the logits.
inline double cross_entropy_loss(const Tensor& probs, int label) {
  return ops::cross_entropy(probs, label);
}

}  // namespace gran
