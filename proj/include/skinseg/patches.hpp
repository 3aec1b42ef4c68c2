#pragma once

#include <vector>

#include "skinseg/dataset.hpp"

namespace skinseg {

/// A square crop with the mask value at its center pixel as label.
struct Patch {
  Image pixels;
  float label = 0.0f;
  int center_y = 0;
  int center_x = 0;
};

struct PatchConfig {
  int size = 17;               // odd window side
  bool class_balanced = false; // draw ~n/2 centers per class instead of uniformly
};

/// Crops a size×size window centered on (cy, cx); pixels outside the image
/// are zero. The center itself must be inside the image.
Image extract_patch(const Image& img, int cy, int cx, int size);

/// Draws n patch centers from the positions where the whole window fits
/// inside the image (without replacement when there are at least n such
/// positions) and returns the crops with their center labels.
std::vector<Patch> extract_training_patches(const ImageSample& sample, int n,
                                            const PatchConfig& cfg, uint64_t seed);

}  // namespace skinseg
