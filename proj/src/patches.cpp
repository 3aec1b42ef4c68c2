#include "skinseg/patches.hpp"

#include <algorithm>

#include "skinseg/rng.hpp"

namespace skinseg {

Image extract_patch(const Image& img, int cy, int cx, int size) {
  const int h = img.height(), w = img.width();
  if (cy < 0 || cy >= h || cx < 0 || cx >= w) {
    throw DataError("extract_patch: center outside the image");
  }
  const int r = size / 2;
  Image out(size, size);
  const int y0 = std::max(0, cy - r), y1 = std::min(h - 1, cy + r);
  const int x0 = std::max(0, cx - r), x1 = std::min(w - 1, cx + r);
  for (int c = 0; c < 3; ++c) {
    out.ch[c].block(y0 - (cy - r), x0 - (cx - r), y1 - y0 + 1, x1 - x0 + 1) =
        img.ch[c].block(y0, x0, y1 - y0 + 1, x1 - x0 + 1);
  }
  return out;
}

namespace {

std::vector<int> draw_centers(const std::vector<int>& pool, int n, RngStream& rng) {
  std::vector<int> picked;
  picked.reserve(n);
  if (static_cast<int>(pool.size()) >= n) {
    std::vector<int> shuffled = pool;
    rng.shuffle(shuffled);
    picked.assign(shuffled.begin(), shuffled.begin() + n);
  } else {
    for (int i = 0; i < n; ++i) {
      picked.push_back(pool[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int64_t>(pool.size())))]);
    }
  }
  return picked;
}

}  // namespace

std::vector<Patch> extract_training_patches(const ImageSample& sample, int n,
                                            const PatchConfig& cfg, uint64_t seed) {
  if (n < 1) throw DataError("extract_training_patches: need n >= 1");
  if (cfg.size < 1 || cfg.size % 2 == 0) {
    throw DataError("extract_training_patches: patch size must be odd and positive");
  }
  const Mask* mask = visible_mask(sample);
  if (!mask) throw DataError("extract_training_patches: sample is not labeled");

  const int h = sample.pixels.height(), w = sample.pixels.width();
  if (h < cfg.size || w < cfg.size) {
    throw DataError("extract_training_patches: image smaller than the patch size");
  }
  const int r = cfg.size / 2;
  const int ih = h - 2 * r, iw = w - 2 * r;  // interior where the window fits

  RngStream rng(derive_seed(seed, "patches"));
  std::vector<int> centers;  // encoded as y * w + x
  if (!cfg.class_balanced) {
    std::vector<int> pool;
    pool.reserve(static_cast<std::size_t>(ih) * iw);
    for (int y = r; y < h - r; ++y) {
      for (int x = r; x < w - r; ++x) pool.push_back(y * w + x);
    }
    centers = draw_centers(pool, n, rng);
  } else {
    std::vector<int> pos, neg;
    for (int y = r; y < h - r; ++y) {
      for (int x = r; x < w - r; ++x) {
        ((*mask)(y, x) > 0.5f ? pos : neg).push_back(y * w + x);
      }
    }
    if (pos.empty() || neg.empty()) {
      centers = draw_centers(pos.empty() ? neg : pos, n, rng);
    } else {
      centers = draw_centers(pos, (n + 1) / 2, rng);
      std::vector<int> from_neg = draw_centers(neg, n / 2, rng);
      centers.insert(centers.end(), from_neg.begin(), from_neg.end());
    }
  }

  std::vector<Patch> out;
  out.reserve(centers.size());
  for (int code : centers) {
    Patch p;
    p.center_y = code / w;
    p.center_x = code % w;
    p.pixels = extract_patch(sample.pixels, p.center_y, p.center_x, cfg.size);
    p.label = (*mask)(p.center_y, p.center_x);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace skinseg
