#include "skinseg/overlay.hpp"

#include "skinseg/image.hpp"

namespace skinseg {

void emit_overlay(const ImageSample& sample, const std::vector<Plane>& maps,
                  const std::filesystem::path& path, double threshold) {
  const int h = sample.pixels.height(), w = sample.pixels.width();
  for (const auto& map : maps) {
    if (map.rows() != h || map.cols() != w) {
      throw DataError("emit_overlay: prediction map does not match the image size");
    }
  }
  const bool has_mask = sample.mask.has_value();
  const int panels = 1 + (has_mask ? 1 : 0) + static_cast<int>(maps.size());
  Image strip(h, panels * w);
  for (int c = 0; c < 3; ++c) {
    strip.ch[static_cast<std::size_t>(c)].block(0, 0, h, w) =
        sample.pixels.ch[static_cast<std::size_t>(c)];
  }
  int panel = 1;
  const auto put_binary = [&](const Plane& bin) {
    for (int c = 0; c < 3; ++c) {
      strip.ch[static_cast<std::size_t>(c)].block(0, panel * w, h, w) = bin;
    }
    ++panel;
  };
  if (has_mask) put_binary((*sample.mask != 0.0f).cast<float>());
  for (const auto& map : maps) {
    put_binary((map >= static_cast<float>(threshold)).cast<float>());
  }
  write_pnm(path, pnm_from_image(strip));
}

}  // namespace skinseg
