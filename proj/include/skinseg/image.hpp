#pragma once

#include <array>

#include "skinseg/common.hpp"
#include "skinseg/pnm.hpp"

namespace skinseg {

/// RGB image with values in [0,1], stored as one plane per channel.
/// Plane element (y, x) addresses row y, column x.
struct Image {
  std::array<Plane, 3> ch;

  Image() = default;
  Image(int height, int width) {
    for (auto& p : ch) p = Plane::Zero(height, width);
  }

  int height() const { return static_cast<int>(ch[0].rows()); }
  int width() const { return static_cast<int>(ch[0].cols()); }
};

/// Binary mask with values in {0,1}.
using Mask = Plane;

Image image_from_pnm(const PnmImage& p);
PnmImage pnm_from_image(const Image& img);

/// Grayscale plane with values in [0,255].
Plane gray_from_pnm(const PnmImage& p);
PnmImage pnm_from_gray(const Plane& g);

/// Output is 1 where gray >= threshold, else 0.
Mask binarize_mask(const Plane& gray, int threshold);

Plane resize_bilinear(const Plane& src, int out_h, int out_w);
Plane resize_nearest(const Plane& src, int out_h, int out_w);
Image resize_bilinear(const Image& src, int out_h, int out_w);

Image flip_horizontal(const Image& img);
Plane flip_horizontal(const Plane& p);

/// Translates by (dy, dx); vacated pixels are filled with `fill`.
Plane shift(const Plane& p, int dy, int dx, float fill);
Image shift(const Image& img, int dy, int dx, float fill);

/// Per-pixel RGB <-> HSV with all components in [0,1] (hue wraps).
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v);
void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b);

}  // namespace skinseg
