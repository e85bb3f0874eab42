#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gran/ops.hpp"
#include "gran/tensor.hpp"

namespace gran {

using ValueId = int32_t;

// Per-thread counters used by tests to assert how much work an operation
// performed (e.g. feature extraction costs one forward + one backward).
struct RunCounters {
  uint64_t model_forwards = 0;
  uint64_t tape_backwards = 0;
};

inline RunCounters& run_counters() {
  thread_local RunCounters c;
  return c;
}

// Reverse-mode automatic differentiation over an explicit operation tape.
//
// Forward primitives append one record each; backward() replays the records
// once, in reverse order, accumulating adjoints additively (a value consumed
// by k operations receives the sum of k contributions). A tape and its
// tensors are a single-owner unit: no concurrent use of one tape, but any
// number of independent tapes may run in parallel on disjoint data.
//
// With recording disabled the same kernels run in the same order, so forward
// values are bit-identical to a recorded run; only the ability to call
// backward() is lost.
class Tape {
 private:
  enum class Op : uint8_t {
    LeafMarker,
    MatMul,
    Conv2d,
    MaxPool,
    Relu,
    AddBias,
    Reshape,
    Softmax,
    Add,
    Sub,
    Mul,
    Scale,
    Sum,
    Select,
    SoftmaxXent,
  };

  static constexpr ValueId kNone = -1;

  struct Node {
    Tensor value;
    bool requires_grad = false;
  };

  struct Record {
    Op op = Op::LeafMarker;
    ValueId a = kNone;
    ValueId b = kNone;
    ValueId out = kNone;
    int i0 = 0;  // stride / window / label / index
    int i1 = 0;  // padding / stride
    double c = 0.0;
    std::vector<int32_t> indices;  // maxpool argmax
    Tensor cached;                 // softmax probs for the fused loss
  };

 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  size_t op_count() const { return records_.size(); }
  size_t node_count() const { return nodes_.size(); }

  ValueId leaf(Tensor value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), requires_grad});
    return static_cast<ValueId>(nodes_.size() - 1);
  }

  const Tensor& value(ValueId id) const { return nodes_[check(id)].value; }
  bool requires_grad(ValueId id) const { return nodes_[check(id)].requires_grad; }

  // ---- recorded primitives ----

  ValueId matmul(ValueId a, ValueId b) {
    return emit(Op::MatMul, a, b, ops::matmul(value(a), value(b)));
  }

  ValueId conv2d(ValueId x, ValueId w, int stride = 1, int pad = 0) {
    Record r{};
    r.i0 = stride;
    r.i1 = pad;
    return emit(Op::Conv2d, x, w, ops::conv2d(value(x), value(w), stride, pad), std::move(r));
  }

  ValueId maxpool(ValueId x, int window, int stride) {
    Record r{};
    r.i0 = window;
    r.i1 = stride;
    Tensor out = ops::maxpool(value(x), window, stride, recording_ ? &r.indices : nullptr);
    return emit(Op::MaxPool, x, kNone, std::move(out), std::move(r));
  }

  ValueId relu(ValueId x) { return emit(Op::Relu, x, kNone, ops::relu(value(x))); }

  ValueId add_bias(ValueId x, ValueId b) {
    return emit(Op::AddBias, x, b, ops::add_bias(value(x), value(b)));
  }

  ValueId reshape(ValueId x, std::vector<int> shape) {
    return emit(Op::Reshape, x, kNone, value(x).reshaped(std::move(shape)));
  }

  ValueId softmax(ValueId x) { return emit(Op::Softmax, x, kNone, ops::softmax(value(x))); }

  ValueId add(ValueId a, ValueId b) { return emit(Op::Add, a, b, ops::add(value(a), value(b))); }
  ValueId sub(ValueId a, ValueId b) { return emit(Op::Sub, a, b, ops::sub(value(a), value(b))); }
  ValueId mul(ValueId a, ValueId b) { return emit(Op::Mul, a, b, ops::mul(value(a), value(b))); }

  ValueId scale(ValueId x, double c) {
    Record r{};
    r.c = c;
    return emit(Op::Scale, x, kNone, ops::scale(value(x), c), std::move(r));
  }

  ValueId sum(ValueId x) { return emit(Op::Sum, x, kNone, ops::sum_to_scalar(value(x))); }

  // scalar pick out of a flat tensor
  ValueId select(ValueId x, int64_t index) {
    if (index < 0 || index >= value(x).numel()) {
      throw ShapeError("select: index " + std::to_string(index) + " out of range for " +
                       value(x).shape_str());
    }
    Record r{};
    r.i0 = static_cast<int>(index);
    return emit(Op::Select, x, kNone, Tensor::scalar(value(x)[index]), std::move(r));
  }

  // Fused softmax + cross-entropy against a fixed class index. The value is
  // -log(max(softmax(logits)[y], 1e-12)); the adjoint at the logits is the
  // numerically stable (softmax - onehot(y)) * upstream.
  ValueId softmax_cross_entropy(ValueId logits, int label) {
    Tensor probs = ops::softmax(value(logits));
    const double loss = ops::cross_entropy(probs, label);
    Record r{};
    r.i0 = label;
    r.cached = std::move(probs);
    return emit(Op::SoftmaxXent, logits, kNone, Tensor::scalar(loss), std::move(r));
  }

  // Replays the adjoints of every recorded operation once, in reverse
  // recording order, seeded with d(loss)/d(loss) = 1. Returns the gradient
  // for every requires_grad leaf that the replay reached. May be called
  // multiple times (with different roots) on one recorded tape.
  std::unordered_map<ValueId, Tensor> backward(ValueId loss) const {
    if (!recording_) throw Error("backward: tape was not recording");
    check(loss);
    if (value(loss).numel() != 1) {
      throw ShapeError("backward: loss has shape " + value(loss).shape_str() + ", expected a scalar");
    }
    if (!produced_.count(loss)) {
      throw Error("backward: loss value was not produced by an operation on this tape");
    }
    run_counters().tape_backwards++;

    std::vector<Tensor> grads(nodes_.size());
    std::vector<char> has(nodes_.size(), 0);
    auto accum = [&](ValueId id, Tensor g) {
      if (!has[static_cast<size_t>(id)]) {
        grads[static_cast<size_t>(id)] = std::move(g);
        has[static_cast<size_t>(id)] = 1;
      } else {
        Tensor& dst = grads[static_cast<size_t>(id)];
        for (int64_t i = 0; i < dst.numel(); ++i) dst[i] += g[i];
      }
    };
    accum(loss, Tensor::scalar(1.0));

    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      const Record& r = *it;
      if (!has[static_cast<size_t>(r.out)]) continue;  // zero adjoint, nothing to propagate
      const Tensor& g = grads[static_cast<size_t>(r.out)];
      switch (r.op) {
        case Op::MatMul:
          accum(r.a, ops::matmul(g, ops::transpose2d(value(r.b))));
          accum(r.b, ops::matmul(ops::transpose2d(value(r.a)), g));
          break;
        case Op::Conv2d:
          accum(r.a, ops::conv2d_backward_input(g, value(r.b), r.i0, r.i1, value(r.a).shape()));
          accum(r.b, ops::conv2d_backward_kernel(g, value(r.a), r.i0, r.i1, value(r.b).shape()));
          break;
        case Op::MaxPool:
          accum(r.a, ops::maxpool_backward(g, r.indices, value(r.a).shape()));
          break;
        case Op::Relu:
          accum(r.a, ops::relu_backward(g, value(r.a)));
          break;
        case Op::AddBias:
          accum(r.a, g);
          accum(r.b, ops::add_bias_backward_bias(g, value(r.b)));
          break;
        case Op::Reshape:
          accum(r.a, g.reshaped(value(r.a).shape()));
          break;
        case Op::Softmax:
          accum(r.a, ops::softmax_backward(g, value(r.out)));
          break;
        case Op::Add:
          accum(r.a, g);
          accum(r.b, g);
          break;
        case Op::Sub:
          accum(r.a, g);
          accum(r.b, ops::scale(g, -1.0));
          break;
        case Op::Mul:
          accum(r.a, ops::mul(g, value(r.b)));
          accum(r.b, ops::mul(g, value(r.a)));
          break;
        case Op::Scale:
          accum(r.a, ops::scale(g, r.c));
          break;
        case Op::Sum:
          accum(r.a, Tensor::full(value(r.a).shape(), g[0]));
          break;
        case Op::Select: {
          Tensor dx(value(r.a).shape());
          dx[r.i0] = g[0];
          accum(r.a, std::move(dx));
          break;
        }
        case Op::SoftmaxXent: {
          Tensor dz = r.cached;  // softmax probs
          dz[r.i0] -= 1.0;
          for (int64_t i = 0; i < dz.numel(); ++i) dz[i] *= g[0];
          accum(r.a, std::move(dz));
          break;
        }
        case Op::LeafMarker:
          break;
      }
    }

    std::unordered_map<ValueId, Tensor> out;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].requires_grad && has[i]) {
        out.emplace(static_cast<ValueId>(i), std::move(grads[i]));
      }
    }
    return out;
  }

 private:
  ValueId check(ValueId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
      throw Error("tape: value id " + std::to_string(id) + " is not on this tape");
    }
    return id;
  }

  ValueId emit(Op op, ValueId a, ValueId b, Tensor out_value) {
    return emit(op, a, b, std::move(out_value), Record{});
  }

  ValueId emit(Op op, ValueId a, ValueId b, Tensor out_value, Record r) {
    check(a);
    if (b != kNone) check(b);
    const bool grad = nodes_[static_cast<size_t>(a)].requires_grad ||
                      (b != kNone && nodes_[static_cast<size_t>(b)].requires_grad);
    nodes_.push_back(Node{std::move(out_value), grad});
    const ValueId out = static_cast<ValueId>(nodes_.size() - 1);
    if (recording_) {
      r.op = op;
      r.a = a;
      r.b = b;
      r.out = out;
      records_.push_back(std::move(r));
      produced_.insert(out);
    }
    return out;
  }

  bool recording_;
  std::vector<Node> nodes_;
  std::vector<Record> records_;
  std::unordered_set<ValueId> produced_;
};

}  // namespace gran
