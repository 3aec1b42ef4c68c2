#include "skinseg/augment.hpp"

#include <cmath>

namespace skinseg {

void validate(const AugmentConfig& cfg) {
  if (cfg.delta_h < 0 || cfg.delta_s < 0 || cfg.delta_v < 0) {
    throw DataError("augment: jitter ranges must be non-negative");
  }
  if (cfg.max_shift < 0 || cfg.max_shift > 1) {
    throw DataError("augment: shift fraction must lie in [0,1]");
  }
  if (cfg.flip_prob < 0 || cfg.flip_prob > 1) {
    throw DataError("augment: flip probability must lie in [0,1]");
  }
}

namespace {

void jitter_hsv(Image& img, float dh, float ds, float dv) {
  const int h = img.height(), w = img.width();
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      float hh, ss, vv;
      rgb_to_hsv(img.ch[0](y, x), img.ch[1](y, x), img.ch[2](y, x), hh, ss, vv);
      hh += dh;
      hh -= std::floor(hh);  // hue wraps
      ss = std::clamp(ss + ds, 0.0f, 1.0f);
      vv = std::clamp(vv + dv, 0.0f, 1.0f);
      float r, g, b;
      hsv_to_rgb(hh, ss, vv, r, g, b);
      img.ch[0](y, x) = std::clamp(r, 0.0f, 1.0f);
      img.ch[1](y, x) = std::clamp(g, 0.0f, 1.0f);
      img.ch[2](y, x) = std::clamp(b, 0.0f, 1.0f);
    }
  }
}

}  // namespace

ImageSample augment_sample(const ImageSample& sample, const AugmentConfig& cfg,
                           RngStream& rng) {
  validate(cfg);
  ImageSample out = sample;

  if (cfg.jitter_enabled) {
    const float dh = static_cast<float>(rng.uniform(-cfg.delta_h, cfg.delta_h));
    const float ds = static_cast<float>(rng.uniform(-cfg.delta_s, cfg.delta_s));
    const float dv = static_cast<float>(rng.uniform(-cfg.delta_v, cfg.delta_v));
    if (dh != 0.0f || ds != 0.0f || dv != 0.0f) jitter_hsv(out.pixels, dh, ds, dv);
  }

  if (cfg.shift_enabled) {
    const int sy = static_cast<int>(std::floor(cfg.max_shift * out.pixels.height()));
    const int sx = static_cast<int>(std::floor(cfg.max_shift * out.pixels.width()));
    const int dy = static_cast<int>(rng.uniform_int(2 * sy + 1)) - sy;
    const int dx = static_cast<int>(rng.uniform_int(2 * sx + 1)) - sx;
    if (dy != 0 || dx != 0) {
      out.pixels = shift(out.pixels, dy, dx, 0.0f);
      if (out.mask) *out.mask = shift(*out.mask, dy, dx, 0.0f);
    }
  }

  if (cfg.flip_enabled && rng.bernoulli(cfg.flip_prob)) {
    out.pixels = flip_horizontal(out.pixels);
    if (out.mask) *out.mask = flip_horizontal(*out.mask);
  }
  return out;
}

}  // namespace skinseg
