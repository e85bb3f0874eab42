#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gran/tensor.hpp"

// Primitive kernels shared by the taped and untaped execution paths. Every
// kernel validates shapes up front and scans its output for NaN/Inf before
// returning, so a non-finite value never propagates past the operation that
// produced it. All loops are single-threaded and run in a fixed order, which
// keeps results bit-reproducible.

namespace gran::ops {

inline void ensure_finite(const Tensor& t, const char* op) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string(op) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

[[noreturn]] inline void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] inline void shape_fail(const char* op, const Tensor& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + a.shape_str());
}

// ---- dense algebra ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) shape_fail("matmul", a, b);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double av = pa[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = pb + kk * n;
      double* orow = po + i * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

inline Tensor transpose2d(const Tensor& a) {
  if (a.ndim() != 2) shape_fail("transpose", a);
  const int m = a.dim(0), n = a.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

// ---- elementwise ----

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail("add", a, b);
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += b[i];
  ensure_finite(out, "add");
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail("sub", a, b);
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= b[i];
  ensure_finite(out, "sub");
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail("mul", a, b);
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= b[i];
  ensure_finite(out, "mul");
  return out;
}

inline Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
  ensure_finite(out, "scale");
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return out;
}

// adjoint mask: derivative 0 at x == 0
inline Tensor relu_backward(const Tensor& g, const Tensor& x) {
  Tensor out = g;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = x[i] > 0.0 ? out[i] : 0.0;
  return out;
}

inline Tensor sum_to_scalar(const Tensor& x) {
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x[i];
  Tensor out = Tensor::scalar(s);
  ensure_finite(out, "sum");
  return out;
}

// ---- bias broadcast ----
// Two layouts: per-channel over a [C,H,W] map, or per-element over a [1,n]
// (or [n]) vector. Disambiguated by the input rank.

inline Tensor add_bias(const Tensor& x, const Tensor& b) {
  Tensor out = x;
  if (x.ndim() == 3 && b.numel() == x.dim(0)) {
    const int c = x.dim(0);
    const int64_t hw = static_cast<int64_t>(x.dim(1)) * x.dim(2);
    for (int ch = 0; ch < c; ++ch) {
      const double bv = b[ch];
      double* p = out.data() + ch * hw;
      for (int64_t i = 0; i < hw; ++i) p[i] += bv;
    }
  } else if (x.ndim() <= 2 && b.numel() == x.numel()) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += b[i % b.numel()];
  } else {
    shape_fail("add_bias", x, b);
  }
  ensure_finite(out, "add_bias");
  return out;
}

inline Tensor add_bias_backward_bias(const Tensor& g, const Tensor& b_like) {
  Tensor out(b_like.shape());
  if (g.ndim() == 3 && b_like.numel() == g.dim(0)) {
    const int c = g.dim(0);
    const int64_t hw = static_cast<int64_t>(g.dim(1)) * g.dim(2);
    for (int ch = 0; ch < c; ++ch) {
      double s = 0.0;
      const double* p = g.data() + ch * hw;
      for (int64_t i = 0; i < hw; ++i) s += p[i];
      out[ch] = s;
    }
  } else {
    for (int64_t i = 0; i < g.numel(); ++i) out[i % out.numel()] += g[i];
  }
  return out;
}

// ---- 2D convolution ----
// x: [C,H,W], w: [F,C,kh,kw], zero padding `pad`, stride `stride`,
// valid output extent floor((H + 2 pad - kh) / stride) + 1.

inline void conv2d_check(const Tensor& x, const Tensor& w, int stride, int pad) {
  if (x.ndim() != 3 || w.ndim() != 4 || x.dim(0) != w.dim(1)) shape_fail("conv2d", x, w);
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d: negative padding");
  const int oh = (x.dim(1) + 2 * pad - w.dim(2)) / stride + 1;
  const int ow = (x.dim(2) + 2 * pad - w.dim(3)) / stride + 1;
  if (x.dim(1) + 2 * pad < w.dim(2) || x.dim(2) + 2 * pad < w.dim(3) || oh < 1 || ow < 1) {
    shape_fail("conv2d", x, w);
  }
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
  conv2d_check(x, w, stride, pad);
  const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int f = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor out({f, oh, ow});
  const double* px = x.data();
  const double* pw = w.data();
  double* po = out.data();
  for (int fo = 0; fo < f; ++fo) {
    for (int ci = 0; ci < c; ++ci) {
      const double* xch = px + static_cast<int64_t>(ci) * h * wd;
      const double* wch = pw + ((static_cast<int64_t>(fo) * c + ci) * kh) * kw;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy0 = oy * stride - pad;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix0 = ox * stride - pad;
          double acc = 0.0;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            const double* xrow = xch + static_cast<int64_t>(iy) * wd;
            const double* wrow = wch + static_cast<int64_t>(ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= wd) continue;
              acc += xrow[ix] * wrow[kx];
            }
          }
          po[(static_cast<int64_t>(fo) * oh + oy) * ow + ox] += acc;
        }
      }
    }
  }
  ensure_finite(out, "conv2d");
  return out;
}

inline Tensor conv2d_backward_input(const Tensor& g, const Tensor& w, int stride, int pad,
                                    const std::vector<int>& xshape) {
  const int c = xshape[0], h = xshape[1], wd = xshape[2];
  const int f = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = g.dim(1), ow = g.dim(2);
  Tensor dx({c, h, wd});
  for (int fo = 0; fo < f; ++fo) {
    for (int ci = 0; ci < c; ++ci) {
      double* dxch = dx.data() + static_cast<int64_t>(ci) * h * wd;
      const double* wch = w.data() + ((static_cast<int64_t>(fo) * c + ci) * kh) * kw;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy0 = oy * stride - pad;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix0 = ox * stride - pad;
          const double gv = g[(static_cast<int64_t>(fo) * oh + oy) * ow + ox];
          if (gv == 0.0) continue;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= wd) continue;
              dxch[static_cast<int64_t>(iy) * wd + ix] += gv * wch[static_cast<int64_t>(ky) * kw + kx];
            }
          }
        }
      }
    }
  }
  return dx;
}

inline Tensor conv2d_backward_kernel(const Tensor& g, const Tensor& x, int stride, int pad,
                                     const std::vector<int>& wshape) {
  const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int f = wshape[0], kh = wshape[2], kw = wshape[3];
  const int oh = g.dim(1), ow = g.dim(2);
  Tensor dw(wshape);
  for (int fo = 0; fo < f; ++fo) {
    for (int ci = 0; ci < c; ++ci) {
      const double* xch = x.data() + static_cast<int64_t>(ci) * h * wd;
      double* dwch = dw.data() + ((static_cast<int64_t>(fo) * c + ci) * kh) * kw;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy0 = oy * stride - pad;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix0 = ox * stride - pad;
          const double gv = g[(static_cast<int64_t>(fo) * oh + oy) * ow + ox];
          if (gv == 0.0) continue;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= wd) continue;
              dwch[static_cast<int64_t>(ky) * kw + kx] += gv * xch[static_cast<int64_t>(iy) * wd + ix];
            }
          }
        }
      }
    }
  }
  return dw;
}

// ---- max pooling ----
// x: [C,H,W], square window, no padding. Ties break toward the first index
// in scan order (strict > comparison), and the adjoint routes the whole
// gradient to that single index.

inline Tensor maxpool(const Tensor& x, int window, int stride, std::vector<int32_t>* argmax) {
  if (x.ndim() != 3) shape_fail("maxpool", x);
  if (window < 1 || stride < 1) throw ShapeError("maxpool: window and stride must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h < window || w < window) shape_fail("maxpool", x);
  const int oh = (h - window) / stride + 1;
  const int ow = (w - window) / stride + 1;
  Tensor out({c, oh, ow});
  if (argmax) argmax->assign(static_cast<size_t>(out.numel()), -1);
  for (int ch = 0; ch < c; ++ch) {
    const double* xch = x.data() + static_cast<int64_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int32_t besti = -1;
        for (int ky = 0; ky < window; ++ky) {
          for (int kx = 0; kx < window; ++kx) {
            const int iy = oy * stride + ky;
            const int ix = ox * stride + kx;
            const double v = xch[static_cast<int64_t>(iy) * w + ix];
            if (v > best) {
              best = v;
              besti = static_cast<int32_t>(ch * h * w + iy * w + ix);
            }
          }
        }
        const int64_t oi = (static_cast<int64_t>(ch) * oh + oy) * ow + ox;
        out[oi] = best;
        if (argmax) (*argmax)[static_cast<size_t>(oi)] = besti;
      }
    }
  }
  ensure_finite(out, "maxpool");
  return out;
}

inline Tensor maxpool_backward(const Tensor& g, const std::vector<int32_t>& argmax,
                               const std::vector<int>& xshape) {
  Tensor dx(xshape);
  for (int64_t i = 0; i < g.numel(); ++i) dx[argmax[static_cast<size_t>(i)]] += g[i];
  return dx;
}

// ---- softmax over a flat vector ----

inline Tensor softmax(const Tensor& x) {
  Tensor out = x;
  double mx = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < x.numel(); ++i) mx = std::max(mx, x[i]);
  double denom = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    out[i] = std::exp(x[i] - mx);
    denom += out[i];
  }
  for (int64_t i = 0; i < x.numel(); ++i) out[i] /= denom;
  ensure_finite(out, "softmax");
  return out;
}

// adjoint of softmax s given upstream g: s * (g - <g, s>)
inline Tensor softmax_backward(const Tensor& g, const Tensor& s) {
  double dot = 0.0;
  for (int64_t i = 0; i < g.numel(); ++i) dot += g[i] * s[i];
  Tensor out = g;
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = s[i] * (g[i] - dot);
  return out;
}

// -log(p[y]) with the probability floored at 1e-12 before the log
inline double cross_entropy(const Tensor& probs, int label) {
  if (label < 0 || label >= probs.numel()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.numel()) + " classes");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

inline int argmax(const Tensor& t) {
  int best = 0;
  for (int64_t i = 1; i < t.numel(); ++i) {
    if (t[i] > t[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace gran::ops
