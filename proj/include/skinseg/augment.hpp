#pragma once

#include "skinseg/dataset.hpp"
#include "skinseg/rng.hpp"

namespace skinseg {

/// Random perturbations applied per training sample. Magnitudes are mild
/// conventional defaults; every transform can be disabled independently.
struct AugmentConfig {
  double delta_h = 0.03;   // hue shift range, fraction of the full circle
  double delta_s = 0.15;   // saturation shift range
  double delta_v = 0.15;   // value shift range
  double max_shift = 0.10; // translation range, fraction of each dimension
  double flip_prob = 0.5;
  bool jitter_enabled = true;
  bool shift_enabled = true;
  bool flip_enabled = true;
};

void validate(const AugmentConfig& cfg);

/// One draw per image: an HSV shift on the pixels only, then a translation
/// and possible horizontal flip applied identically to pixels and mask.
/// Pixels stay in [0,1] and the mask stays binary.
ImageSample augment_sample(const ImageSample& sample, const AugmentConfig& cfg,
                           RngStream& rng);

}  // namespace skinseg
