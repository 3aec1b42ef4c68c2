#include "skinseg/image.hpp"

#include <algorithm>
#include <cmath>

namespace skinseg {

Image image_from_pnm(const PnmImage& p) {
  if (p.channels != 3) throw DataError("image_from_pnm: expected 3 channels");
  Image img(p.height, p.width);
  const float inv = 1.0f / 255.0f;
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t base = 3 * (static_cast<std::size_t>(y) * p.width + x);
      img.ch[0](y, x) = static_cast<float>(p.data[base + 0]) * inv;
      img.ch[1](y, x) = static_cast<float>(p.data[base + 1]) * inv;
      img.ch[2](y, x) = static_cast<float>(p.data[base + 2]) * inv;
    }
  }
  return img;
}

PnmImage pnm_from_image(const Image& img) {
  PnmImage p;
  p.width = img.width();
  p.height = img.height();
  p.channels = 3;
  p.data.resize(static_cast<std::size_t>(p.width) * p.height * 3);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t base = 3 * (static_cast<std::size_t>(y) * p.width + x);
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(img.ch[c](y, x), 0.0f, 1.0f);
        p.data[base + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return p;
}

Plane gray_from_pnm(const PnmImage& p) {
  if (p.channels != 1) throw DataError("gray_from_pnm: expected 1 channel");
  Plane g(p.height, p.width);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      g(y, x) = static_cast<float>(p.data[static_cast<std::size_t>(y) * p.width + x]);
    }
  }
  return g;
}

PnmImage pnm_from_gray(const Plane& g) {
  PnmImage p;
  p.height = static_cast<int>(g.rows());
  p.width = static_cast<int>(g.cols());
  p.channels = 1;
  p.data.resize(static_cast<std::size_t>(p.width) * p.height);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const float v = std::clamp(g(y, x), 0.0f, 255.0f);
      p.data[static_cast<std::size_t>(y) * p.width + x] =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return p;
}

Mask binarize_mask(const Plane& gray, int threshold) {
  if (threshold < 0 || threshold > 255) {
    throw DataError("binarize_mask: threshold must be in [0,255]");
  }
  return (gray >= static_cast<float>(threshold)).cast<float>();
}

namespace {

// Half-pixel-center source coordinate for output index i.
inline float src_coord(int i, float scale) {
  return (static_cast<float>(i) + 0.5f) * scale - 0.5f;
}

}  // namespace

Plane resize_bilinear(const Plane& src, int out_h, int out_w) {
  const int h = static_cast<int>(src.rows());
  const int w = static_cast<int>(src.cols());
  if (h == out_h && w == out_w) return src;
  Plane dst(out_h, out_w);
  const float sy = static_cast<float>(h) / static_cast<float>(out_h);
  const float sx = static_cast<float>(w) / static_cast<float>(out_w);
  for (int y = 0; y < out_h; ++y) {
    const float fy = src_coord(y, sy);
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float wy = std::clamp(fy - static_cast<float>(y0), 0.0f, 1.0f);
    for (int x = 0; x < out_w; ++x) {
      const float fx = src_coord(x, sx);
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const float wx = std::clamp(fx - static_cast<float>(x0), 0.0f, 1.0f);
      const float top = src(y0, x0) * (1.0f - wx) + src(y0, x1) * wx;
      const float bot = src(y1, x0) * (1.0f - wx) + src(y1, x1) * wx;
      dst(y, x) = top * (1.0f - wy) + bot * wy;
    }
  }
  return dst;
}

Plane resize_nearest(const Plane& src, int out_h, int out_w) {
  const int h = static_cast<int>(src.rows());
  const int w = static_cast<int>(src.cols());
  if (h == out_h && w == out_w) return src;
  Plane dst(out_h, out_w);
  const float sy = static_cast<float>(h) / static_cast<float>(out_h);
  const float sx = static_cast<float>(w) / static_cast<float>(out_w);
  for (int y = 0; y < out_h; ++y) {
    const int yi = std::clamp(static_cast<int>(std::floor((y + 0.5f) * sy)), 0, h - 1);
    for (int x = 0; x < out_w; ++x) {
      const int xi = std::clamp(static_cast<int>(std::floor((x + 0.5f) * sx)), 0, w - 1);
      dst(y, x) = src(yi, xi);
    }
  }
  return dst;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  Image dst;
  for (int c = 0; c < 3; ++c) dst.ch[c] = resize_bilinear(src.ch[c], out_h, out_w);
  return dst;
}

Plane flip_horizontal(const Plane& p) { return p.rowwise().reverse(); }

Image flip_horizontal(const Image& img) {
  Image out;
  for (int c = 0; c < 3; ++c) out.ch[c] = flip_horizontal(img.ch[c]);
  return out;
}

Plane shift(const Plane& p, int dy, int dx, float fill) {
  const int h = static_cast<int>(p.rows());
  const int w = static_cast<int>(p.cols());
  Plane out = Plane::Constant(h, w, fill);
  const int src_y = std::max(0, -dy);
  const int src_x = std::max(0, -dx);
  const int dst_y = std::max(0, dy);
  const int dst_x = std::max(0, dx);
  const int bh = h - std::abs(dy);
  const int bw = w - std::abs(dx);
  if (bh > 0 && bw > 0) {
    out.block(dst_y, dst_x, bh, bw) = p.block(src_y, src_x, bh, bw);
  }
  return out;
}

Image shift(const Image& img, int dy, int dx, float fill) {
  Image out;
  for (int c = 0; c < 3; ++c) out.ch[c] = shift(img.ch[c], dy, dx, fill);
  return out;
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float maxc = std::max({r, g, b});
  const float minc = std::min({r, g, b});
  const float d = maxc - minc;
  v = maxc;
  s = maxc <= 0.0f ? 0.0f : d / maxc;
  if (d <= 0.0f) {
    h = 0.0f;
    return;
  }
  if (maxc == r) {
    h = (g - b) / d;
  } else if (maxc == g) {
    h = (b - r) / d + 2.0f;
  } else {
    h = (r - g) / d + 4.0f;
  }
  h /= 6.0f;
  if (h < 0.0f) h += 1.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  h -= std::floor(h);
  const float k = h * 6.0f;
  const int i = std::min(5, static_cast<int>(k));
  const float f = k - static_cast<float>(i);
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace skinseg
