#pragma once

#include <cmath>
#include <map>

#include "skinseg/nn.hpp"

namespace skinseg::nn {

/// Adaptive moment optimizer over a parameter store. Entries whose group is
/// flagged non-trainable — and the reserved "stats" group — are skipped
/// entirely, so frozen parameters stay bit-identical.
template <class S>
struct Adam {
  S lr = static_cast<S>(1e-3);
  S beta1 = static_cast<S>(0.9);
  S beta2 = static_cast<S>(0.999);
  S eps = static_cast<S>(1e-8);
  std::vector<Mat<S>> m1, m2;
  long t = 0;

  void step(ParamStore<S>& ps, const std::map<std::string, bool>& trainable) {
    if (m1.empty()) {
      m1.reserve(ps.entries.size());
      m2.reserve(ps.entries.size());
      for (const auto& e : ps.entries) {
        m1.push_back(Mat<S>::Zero(e.value.rows(), e.value.cols()));
        m2.push_back(Mat<S>::Zero(e.value.rows(), e.value.cols()));
      }
    }
    ++t;
    const S c1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1), t));
    const S c2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2), t));
    for (std::size_t i = 0; i < ps.entries.size(); ++i) {
      auto& e = ps.entries[i];
      if (e.group == "stats") continue;
      const auto it = trainable.find(e.group);
      if (it != trainable.end() && !it->second) continue;
      m1[i] = beta1 * m1[i] + (S(1) - beta1) * e.grad;
      m2[i] = beta2 * m2[i].array() + (S(1) - beta2) * e.grad.array().square();
      e.value.array() -=
          lr * (m1[i].array() / c1) / ((m2[i].array() / c2).sqrt() + eps);
    }
  }
};

}  // namespace skinseg::nn
