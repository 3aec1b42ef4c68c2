#include <doctest.h>

#include "skinseg/loss.hpp"
#include "skinseg/rng.hpp"

using namespace skinseg;

TEST_CASE("loss: perfect binary agreement gives coefficient 1") {
  VecD p(6), g(6);
  p << 1, 0, 1, 1, 0, 0;
  g = p;
  CHECK(soft_dice_coef(p, g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dice_loss(p, g) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("loss: total disagreement is pulled to 1 only by the smoothing term") {
  VecD p(4), g(4);
  p << 1, 1, 0, 0;
  g << 0, 0, 1, 1;
  // numerator = s, denominator = s + 4
  const LossConfig cfg;
  CHECK(soft_dice_coef(p, g, cfg) ==
        doctest::Approx(cfg.smoothness / (cfg.smoothness + 4.0)).epsilon(1e-12));
}

TEST_CASE("loss: empty/empty is smoothed to coefficient 1") {
  VecD p = VecD::Zero(5), g = VecD::Zero(5);
  CHECK(soft_dice_coef(p, g) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss: hand-computed fractional case") {
  VecD p(2), g(2);
  p << 0.5, 0.25;
  g << 1.0, 0.0;
  // inter = 0.5, |p| = 0.75, |g| = 1; coef = (s + 1) / (s + 1.75)
  const double s = 1e-5;
  CHECK(soft_dice_coef(p, g) == doctest::Approx((s + 1.0) / (s + 1.75)).epsilon(1e-12));
}

TEST_CASE("loss: analytic gradient matches central finite differences") {
  RngStream rng(31);
  const int n = 64;
  VecD p(n), g(n);
  for (int i = 0; i < n; ++i) {
    p[i] = 0.05 + 0.9 * rng.uniform();
    g[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const VecD grad = dice_loss_grad(p, g);
  const double h = 1e-6;
  for (int i = 0; i < n; ++i) {
    VecD pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const double fd = (dice_loss(pp, g) - dice_loss(pm, g)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("loss: gradient pushes predictions toward the labels") {
  VecD p(4), g(4);
  p << 0.5, 0.5, 0.5, 0.5;
  g << 1, 1, 0, 0;
  const VecD grad = dice_loss_grad(p, g);
  // Descending the loss raises p where g=1 and lowers it where g=0.
  CHECK(grad[0] < 0.0);
  CHECK(grad[1] < 0.0);
  CHECK(grad[2] > 0.0);
  CHECK(grad[3] > 0.0);
}

TEST_CASE("loss: length mismatch throws") {
  VecD a = VecD::Zero(3), b = VecD::Zero(5);
  CHECK_THROWS_AS(soft_dice_coef(a, b), DataError);
  CHECK_THROWS_AS(dice_loss_grad(a, b), DataError);
}
