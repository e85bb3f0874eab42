#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>

#include "gran/dataset.hpp"
#include "gran/rng.hpp"

namespace gran {

// Two-Gaussian 2D toy data, stored as 1x1x2 images so the whole pipeline
// (training, attacks, set-ups, detectors) runs on it unchanged.
//
// The clean clusters are linearly separable with a wide margin, so a tiny
// classifier reaches ~100% accuracy on them. Optionally the *test* split
// plants a tight "outlier" cluster: points carrying label 0 placed deep on
// the class-1 side, beyond the reach of both clean clusters. A trained
// classifier confidently misclassifies exactly those points, which gives the
// wrong set-up a planted, cleanly separable positive class.
struct TwoGaussianSpec {
  int train_count = 400;     // clean points, both classes
  int test_count = 200;      // clean points, both classes
  int outlier_count = 0;     // extra label-0 points appended to the test split
  double mean_lo = 0.35;     // class-0 center (both coordinates)
  double mean_hi = 0.65;     // class-1 center
  double stddev = 0.04;
  double outlier_center = 0.97;
  double outlier_stddev = 0.005;
  uint64_t seed = 0;
};

inline std::pair<Dataset, Dataset> make_two_gaussians(const TwoGaussianSpec& spec) {
  Rng rng(spec.seed);
  int64_t next_id = 0;

  auto sample = [&](Dataset& out, int label, double cx, double sd) {
    Tensor px({1, 1, 2});
    px[0] = std::clamp(cx + sd * rng.normal(), 0.0, 1.0);
    px[1] = std::clamp(cx + sd * rng.normal(), 0.0, 1.0);
    out.items.push_back(LabeledImage{std::move(px), label, next_id++});
  };

  Dataset train, test;
  train.image_shape = test.image_shape = {1, 1, 2};
  train.class_count = test.class_count = 2;

  for (int i = 0; i < spec.train_count; ++i) {
    const int label = i % 2;
    sample(train, label, label == 0 ? spec.mean_lo : spec.mean_hi, spec.stddev);
  }
  for (int i = 0; i < spec.test_count; ++i) {
    const int label = i % 2;
    sample(test, label, label == 0 ? spec.mean_lo : spec.mean_hi, spec.stddev);
  }
  for (int i = 0; i < spec.outlier_count; ++i) {
    sample(test, 0, spec.outlier_center, spec.outlier_stddev);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace gran
