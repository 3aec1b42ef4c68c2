#include <doctest.h>

#include <set>

#include "skinseg/patches.hpp"
#include "skinseg/synth.hpp"

using namespace skinseg;

namespace {

ImageSample labeled_sample(int h, int w, uint64_t seed) {
  DomainSpec spec;
  spec.name = "p";
  spec.noise = 0.01;
  Dataset ds = make_synthetic_domain(spec, 1, h, w, seed);
  return ds.samples[0];
}

}  // namespace

TEST_CASE("patches: full-size draw of 512 windows of 35 pixels") {
  const ImageSample s = labeled_sample(100, 100, 51);
  PatchConfig cfg;
  cfg.size = 35;
  const auto patches = extract_training_patches(s, 512, cfg, 1);
  REQUIRE(patches.size() == 512);
  for (const auto& p : patches) {
    CHECK(p.pixels.height() == 35);
    CHECK(p.pixels.width() == 35);
  }
}

TEST_CASE("patches: labels equal the mask at the recorded centers") {
  const ImageSample s = labeled_sample(64, 48, 52);
  PatchConfig cfg;
  cfg.size = 9;
  const auto patches = extract_training_patches(s, 1000, cfg, 2);
  const int r = cfg.size / 2;
  for (const auto& p : patches) {
    CHECK(p.label == (*s.mask)(p.center_y, p.center_x));
    CHECK(p.center_y >= r);
    CHECK(p.center_y < 64 - r);
    CHECK(p.center_x >= r);
    CHECK(p.center_x < 48 - r);
    // The crop really is the window around the center.
    CHECK(p.pixels.ch[0](r, r) == s.pixels.ch[0](p.center_y, p.center_x));
    CHECK(p.pixels.ch[2](0, 0) == s.pixels.ch[2](p.center_y - r, p.center_x - r));
  }
}

TEST_CASE("patches: uniform-skin mask yields all-ones labels") {
  ImageSample s = labeled_sample(32, 32, 53);
  s.mask = Mask::Ones(32, 32);
  PatchConfig cfg;
  cfg.size = 7;
  for (const auto& p : extract_training_patches(s, 64, cfg, 3)) {
    CHECK(p.label == 1.0f);
  }
}

TEST_CASE("patches: centers are distinct while the interior can supply them") {
  const ImageSample s = labeled_sample(13, 13, 54);
  PatchConfig cfg;
  cfg.size = 9;  // interior is 5x5 = 25 positions
  const auto patches = extract_training_patches(s, 25, cfg, 4);
  std::set<std::pair<int, int>> centers;
  for (const auto& p : patches) centers.insert({p.center_y, p.center_x});
  CHECK(centers.size() == 25);

  // Asking for more than the interior falls back to replacement.
  const auto more = extract_training_patches(s, 40, cfg, 4);
  CHECK(more.size() == 40);
}

TEST_CASE("patches: deterministic in the seed") {
  const ImageSample s = labeled_sample(40, 40, 55);
  PatchConfig cfg;
  cfg.size = 11;
  const auto a = extract_training_patches(s, 32, cfg, 6);
  const auto b = extract_training_patches(s, 32, cfg, 6);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].center_y == b[i].center_y);
    CHECK(a[i].center_x == b[i].center_x);
    CHECK(a[i].label == b[i].label);
  }
  const auto c = extract_training_patches(s, 32, cfg, 7);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    differs |= (a[i].center_y != c[i].center_y) || (a[i].center_x != c[i].center_x);
  }
  CHECK(differs);
}

TEST_CASE("patches: class-balanced draw splits the classes") {
  ImageSample s = labeled_sample(33, 33, 56);
  // Left half skin, right half background.
  Mask m = Mask::Zero(33, 33);
  m.leftCols(16).setConstant(1.0f);
  s.mask = m;
  PatchConfig cfg;
  cfg.size = 5;
  cfg.class_balanced = true;
  const auto patches = extract_training_patches(s, 100, cfg, 8);
  int pos = 0;
  for (const auto& p : patches) pos += p.label == 1.0f;
  CHECK(pos == 50);
}

TEST_CASE("patches: input validation") {
  const ImageSample s = labeled_sample(16, 16, 57);
  PatchConfig cfg;
  cfg.size = 17;
  CHECK_THROWS_AS(extract_training_patches(s, 4, cfg, 1), DataError);  // too small
  cfg.size = 8;
  CHECK_THROWS_AS(extract_training_patches(s, 4, cfg, 1), DataError);  // even size
  cfg.size = 7;
  CHECK_THROWS_AS(extract_training_patches(s, 0, cfg, 1), DataError);  // n < 1

  ImageSample unlabeled = s;
  unlabeled.labeled = false;
  CHECK_THROWS_AS(extract_training_patches(unlabeled, 4, cfg, 1), DataError);
}

TEST_CASE("patches: border crops are zero-padded") {
  const ImageSample s = labeled_sample(16, 16, 58);
  const Image corner = extract_patch(s.pixels, 0, 0, 7);
  // Everything above/left of the center is outside the image.
  CHECK(corner.ch[0].block(0, 0, 3, 7).abs().maxCoeff() == 0.0f);
  CHECK(corner.ch[0].block(0, 0, 7, 3).abs().maxCoeff() == 0.0f);
  CHECK(corner.ch[0](3, 3) == s.pixels.ch[0](0, 0));
  CHECK(corner.ch[1](6, 6) == s.pixels.ch[1](3, 3));
}
