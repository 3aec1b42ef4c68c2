#pragma once

#include "skinseg/common.hpp"

namespace skinseg {

/// Smoothing for the differentiable Dice coefficient.
struct LossConfig {
  double smoothness = 1e-5;
};

/// (s + 2 p.g) / (s + |p| + |g|), in (0, 1]. p holds per-pixel probabilities,
/// g the binary ground truth; |.| is the entry sum.
template <class DerivedP, class DerivedG>
typename DerivedP::Scalar soft_dice_coef(const Eigen::DenseBase<DerivedP>& p,
                                         const Eigen::DenseBase<DerivedG>& g,
                                         const LossConfig& cfg = {}) {
  using S = typename DerivedP::Scalar;
  if (p.size() != g.size()) {
    throw DataError("soft_dice_coef: length mismatch");
  }
  const S s = static_cast<S>(cfg.smoothness);
  const S inter = (p.derived().array() * g.derived().array()).sum();
  const S sums = p.derived().array().sum() + g.derived().array().sum();
  return (s + 2 * inter) / (s + sums);
}

template <class DerivedP, class DerivedG>
typename DerivedP::Scalar dice_loss(const Eigen::DenseBase<DerivedP>& p,
                                    const Eigen::DenseBase<DerivedG>& g,
                                    const LossConfig& cfg = {}) {
  using S = typename DerivedP::Scalar;
  return static_cast<S>(1) - soft_dice_coef(p, g, cfg);
}

/// Analytic gradient of dice_loss with respect to p:
///   d loss / d p_i = -(2 g_i (s + |p| + |g|) - (s + 2 p.g)) / (s + |p| + |g|)^2
template <class DerivedP, class DerivedG>
Vec<typename DerivedP::Scalar> dice_loss_grad(const Eigen::DenseBase<DerivedP>& p,
                                              const Eigen::DenseBase<DerivedG>& g,
                                              const LossConfig& cfg = {}) {
  using S = typename DerivedP::Scalar;
  if (p.size() != g.size()) {
    throw DataError("dice_loss_grad: length mismatch");
  }
  const S s = static_cast<S>(cfg.smoothness);
  const S inter = (p.derived().array() * g.derived().array()).sum();
  const S denom = s + p.derived().array().sum() + g.derived().array().sum();
  const S numer = s + 2 * inter;
  Vec<S> grad(p.size());
  grad.array() =
      -(2 * g.derived().array().template cast<S>() * denom - numer) / (denom * denom);
  return grad;
}

}  // namespace skinseg
