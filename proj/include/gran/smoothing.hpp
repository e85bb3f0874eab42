#pragma once

#include <cmath>
#include <vector>

#include "gran/tensor.hpp"

namespace gran {

// Separable 2D Gaussian blur applied per channel of a [C,H,W] image.
// Kernel radius ceil(3s), taps exp(-i^2 / 2s^2) normalized to sum 1.
// Borders reflect with edge duplication: index -1 maps to 0, -2 to 1, and
// symmetrically past the far edge. s below 1e-6 is the identity.
inline Tensor gaussian_smooth(const Tensor& x, double s) {
  if (x.ndim() != 3) throw ShapeError("gaussian_smooth: expected [C,H,W], got " + x.shape_str());
  if (s < 0.0) throw NumericError("gaussian_smooth: negative standard deviation");
  if (s < 1e-6) return x;

  const int radius = static_cast<int>(std::ceil(3.0 * s));
  std::vector<double> taps(static_cast<size_t>(2 * radius + 1));
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * s * s));
    taps[static_cast<size_t>(i + radius)] = v;
    norm += v;
  }
  for (auto& t : taps) t /= norm;

  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -1 - i;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };

  Tensor mid(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += taps[static_cast<size_t>(i + radius)] * x.at({ch, y, reflect(xx + i, w)});
        }
        mid.at({ch, y, xx}) = acc;
      }
    }
  }
  Tensor out(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += taps[static_cast<size_t>(i + radius)] * mid.at({ch, reflect(y + i, h), xx});
        }
        out.at({ch, y, xx}) = acc;
      }
    }
  }
  return out;
}

}  // namespace gran
