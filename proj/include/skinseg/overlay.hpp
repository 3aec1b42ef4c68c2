#pragma once

#include <filesystem>

#include "skinseg/dataset.hpp"

namespace skinseg {

/// Writes a horizontal comparison strip as a PPM: the sample's pixels, its
/// ground-truth mask when present (white = 1), then each prediction map
/// thresholded at `threshold`. Every map must match the sample's size.
void emit_overlay(const ImageSample& sample, const std::vector<Plane>& maps,
                  const std::filesystem::path& path, double threshold = 0.5);

}  // namespace skinseg
