#include "skinseg/framing.hpp"

#include <algorithm>
#include <cmath>

namespace skinseg {

FrameTransform make_frame_transform(int h, int w, int frame_h, int frame_w) {
  if (h <= 0 || w <= 0 || frame_h <= 0 || frame_w <= 0) {
    throw DataError("framing: dimensions must be positive");
  }
  FrameTransform t;
  t.orig_h = h;
  t.orig_w = w;
  t.frame_h = frame_h;
  t.frame_w = frame_w;
  if (h <= frame_h && w <= frame_w) {
    t.scale = 1.0;
    t.scaled_h = h;
    t.scaled_w = w;
  } else {
    t.scale = std::min(static_cast<double>(frame_h) / h, static_cast<double>(frame_w) / w);
    t.scaled_h = std::clamp(static_cast<int>(std::lround(h * t.scale)), 1, frame_h);
    t.scaled_w = std::clamp(static_cast<int>(std::lround(w * t.scale)), 1, frame_w);
  }
  t.offset_y = (frame_h - t.scaled_h) / 2;
  t.offset_x = (frame_w - t.scaled_w) / 2;
  return t;
}

namespace {

Plane place_plane(const Plane& src, const FrameTransform& t, bool nearest) {
  Plane scaled;
  if (t.scale == 1.0) {
    scaled = src;
  } else if (nearest) {
    scaled = resize_nearest(src, t.scaled_h, t.scaled_w);
  } else {
    scaled = resize_bilinear(src, t.scaled_h, t.scaled_w);
  }
  Plane out = Plane::Zero(t.frame_h, t.frame_w);
  out.block(t.offset_y, t.offset_x, t.scaled_h, t.scaled_w) = scaled;
  return out;
}

}  // namespace

Image frame_image(const Image& img, int frame_h, int frame_w, FrameTransform* t_out) {
  const FrameTransform t = make_frame_transform(img.height(), img.width(), frame_h, frame_w);
  Image out(frame_h, frame_w);
  for (int c = 0; c < 3; ++c) out.ch[c] = place_plane(img.ch[c], t, /*nearest=*/false);
  if (t_out) *t_out = t;
  return out;
}

Mask frame_mask(const Mask& mask, int frame_h, int frame_w, FrameTransform* t_out) {
  const FrameTransform t = make_frame_transform(static_cast<int>(mask.rows()),
                                                static_cast<int>(mask.cols()), frame_h, frame_w);
  if (t_out) *t_out = t;
  return place_plane(mask, t, /*nearest=*/true);
}

Plane unframe_prediction(const Plane& pred, const FrameTransform& t) {
  if (pred.rows() != t.frame_h || pred.cols() != t.frame_w) {
    throw DataError("unframe_prediction: prediction does not match the frame size");
  }
  Plane cropped = pred.block(t.offset_y, t.offset_x, t.scaled_h, t.scaled_w);
  if (t.scale == 1.0) return cropped;
  return resize_bilinear(cropped, t.orig_h, t.orig_w);
}

}  // namespace skinseg
