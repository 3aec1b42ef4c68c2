#pragma once

#include "skinseg/image.hpp"

namespace skinseg {

/// How an image was placed into a fixed network frame, enough to undo it.
struct FrameTransform {
  int orig_h = 0, orig_w = 0;
  int frame_h = 0, frame_w = 0;
  double scale = 1.0;          // applied to the original before centering
  int offset_y = 0, offset_x = 0;
  int scaled_h = 0, scaled_w = 0;  // size of the placed region
};

/// Computes the placement of an H×W image into an Hf×Wf frame: images that
/// fit are centered at scale 1; larger ones are shrunk uniformly until they
/// fit, then centered.
FrameTransform make_frame_transform(int h, int w, int frame_h, int frame_w);

/// Zero-pads/centers (and, when needed, bilinearly shrinks) pixels into the
/// frame.
Image frame_image(const Image& img, int frame_h, int frame_w, FrameTransform* t = nullptr);

/// Same placement for a mask, with nearest-neighbor resampling so values
/// stay binary.
Mask frame_mask(const Mask& mask, int frame_h, int frame_w, FrameTransform* t = nullptr);

/// Crops the placed region out of a frame-sized prediction and resizes it
/// back to the original H×W. Exact inverse of frame_image when scale is 1.
Plane unframe_prediction(const Plane& pred, const FrameTransform& t);

}  // namespace skinseg
