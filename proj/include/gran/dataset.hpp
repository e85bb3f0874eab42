#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gran/error.hpp"
#include "gran/tensor.hpp"

namespace gran {

// One image with its ground-truth class. Pixels live in [0,1]; ids are
// unique within a dataset and stable across runs (they seed per-image noise
// and appear in set-up manifests).
struct LabeledImage {
  Tensor pixels;  // [C,H,W]
  int label = 0;
  int64_t id = 0;
};

struct Dataset {
  std::vector<LabeledImage> items;
  std::vector<int> image_shape;  // C,H,W
  int class_count = 0;

  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  Dataset take(size_t n) const {
    Dataset out;
    out.image_shape = image_shape;
    out.class_count = class_count;
    out.items.assign(items.begin(), items.begin() + std::min(n, items.size()));
    return out;
  }
};

inline void check_pixel_range(const Tensor& pixels, const std::string& what) {
  for (int64_t i = 0; i < pixels.numel(); ++i) {
    if (!(pixels[i] >= 0.0 && pixels[i] <= 1.0)) {
      throw NumericError(what + ": pixel value " + std::to_string(pixels[i]) + " outside [0,1]");
    }
  }
}

}  // namespace gran
