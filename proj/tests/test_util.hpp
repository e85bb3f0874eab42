#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gran/rng.hpp"
#include "gran/tensor.hpp"

// Shared helpers for the test suites: random tensors, the central
// finite-difference oracle, and a naive convolution reference. Everything in
// here is deliberately independent of the library's backward path.

namespace testutil {

inline gran::Tensor random_tensor(std::vector<int> shape, gran::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
  gran::Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Central finite differences of a scalar function with respect to one tensor
// argument, evaluated entry by entry.
inline gran::Tensor fd_gradient(const std::function<double(const gran::Tensor&)>& f,
                                const gran::Tensor& x, double step = 1e-5) {
  gran::Tensor g(x.shape());
  gran::Tensor probe = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double hi = f(probe);
    probe[i] = orig - step;
    const double lo = f(probe);
    probe[i] = orig;
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

// Relative error with an absolute floor so that near-zero gradients compare
// on an absolute scale.
inline double rel_err(double a, double b, double floor_ = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor_});
}

inline double max_rel_err(const gran::Tensor& a, const gran::Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, rel_err(a[i], b[i]));
  return m;
}

// Direct nested-loop 2D convolution, written independently of ops::conv2d:
// iterates input-major instead of output-major and scatters contributions.
inline gran::Tensor naive_conv2d(const gran::Tensor& x, const gran::Tensor& w, int stride, int pad) {
  const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int f = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (wd + 2 * pad - kw) / stride + 1;
  gran::Tensor out({f, oh, ow});
  for (int fo = 0; fo < f; ++fo) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int ci = 0; ci < c; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += x.at({ci, iy, ix}) * w.at({fo, ci, ky, kx});
            }
          }
        }
        out.at({fo, oy, ox}) = acc;
      }
    }
  }
  return out;
}

}  // namespace testutil
