#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skinseg/common.hpp"
#include "skinseg/rng.hpp"

// Building blocks for the two networks. Activations travel as (n*h*w) x c
// matrices: image i occupies the row block [i*h*w, (i+1)*h*w), and inside it
// pixel (y, x) sits at row x*h + y — the same column-major order as a Plane,
// so planes copy in and out contiguously. Every layer caches what its
// backward pass needs; backward returns d(loss)/d(input) and accumulates
// parameter gradients into the store.

namespace skinseg::nn {

/// Flat registry of parameter tensors (and batch-norm running statistics,
/// kept under the reserved group "stats" which is never trainable).
template <class S>
struct ParamStore {
  struct Entry {
    std::string name;
    std::string group;
    Mat<S> value;
    Mat<S> grad;
  };
  std::vector<Entry> entries;

  int add(const std::string& name, const std::string& group, int rows, int cols) {
    Entry e;
    e.name = name;
    e.group = group;
    e.value = Mat<S>::Zero(rows, cols);
    e.grad = Mat<S>::Zero(rows, cols);
    entries.push_back(std::move(e));
    return static_cast<int>(entries.size()) - 1;
  }

  Entry& operator[](int i) { return entries[static_cast<std::size_t>(i)]; }
  const Entry& operator[](int i) const { return entries[static_cast<std::size_t>(i)]; }

  void zero_grad() {
    for (auto& e : entries) e.grad.setZero();
  }

  /// Fan-in-scaled uniform init for weight matrices (variance 1/rows), zeros
  /// for biases, (1, 0) for batch-norm gain/bias, (0, 1) for running stats.
  /// Entries are filled in registration order, so layout changes are the only
  /// thing that can move the stream.
  void init(std::uint64_t seed) {
    RngStream rng(derive_seed(seed, "init"));
    for (auto& e : entries) {
      const auto tail = e.name.substr(e.name.rfind('.') + 1);
      if (tail == "w") {
        const double limit = std::sqrt(3.0 / static_cast<double>(e.value.rows()));
        for (Eigen::Index c = 0; c < e.value.cols(); ++c) {
          for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
            e.value(r, c) = static_cast<S>(rng.uniform(-limit, limit));
          }
        }
      } else if (tail == "g" || tail == "rv") {
        e.value.setOnes();
      } else {  // biases, bn shift, running mean
        e.value.setZero();
      }
    }
  }
};

template <class S>
using PlaneView = Eigen::Map<Mat<S>>;
template <class S>
using ConstPlaneView = Eigen::Map<const Mat<S>>;

/// The h x w plane of image `img`, channel column `c`, inside a batch matrix.
template <class S>
PlaneView<S> plane_view(Mat<S>& m, int img, int c, int h, int w) {
  return PlaneView<S>(m.data() + static_cast<std::ptrdiff_t>(c) * m.rows() +
                          static_cast<std::ptrdiff_t>(img) * h * w,
                      h, w);
}

template <class S>
ConstPlaneView<S> plane_view(const Mat<S>& m, int img, int c, int h, int w) {
  return ConstPlaneView<S>(m.data() + static_cast<std::ptrdiff_t>(c) * m.rows() +
                               static_cast<std::ptrdiff_t>(img) * h * w,
                           h, w);
}

/// Patch matrix for a same-padded 3x3 convolution: column cin*9 + (dy+1)*3 +
/// (dx+1) holds the input channel cin shifted by (dy, dx), zero at borders.
template <class S>
Mat<S> im2col3(const Mat<S>& x, int n, int h, int w) {
  const int cin = static_cast<int>(x.cols());
  Mat<S> cols = Mat<S>::Zero(x.rows(), 9 * cin);
  for (int c = 0; c < cin; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int k = c * 9 + (dy + 1) * 3 + (dx + 1);
        const int y0 = std::max(0, -dy), x0 = std::max(0, -dx);
        const int bh = h - std::abs(dy), bw = w - std::abs(dx);
        for (int i = 0; i < n; ++i) {
          plane_view(cols, i, k, h, w).block(y0, x0, bh, bw) =
              plane_view(x, i, c, h, w).block(y0 + dy, x0 + dx, bh, bw);
        }
      }
    }
  }
  return cols;
}

/// Adjoint of im2col3: scatter-adds patch-matrix gradients back onto the
/// input layout.
template <class S>
Mat<S> col2im3(const Mat<S>& dcols, int n, int h, int w, int cin) {
  Mat<S> dx = Mat<S>::Zero(dcols.rows(), cin);
  for (int c = 0; c < cin; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dxo = -1; dxo <= 1; ++dxo) {
        const int k = c * 9 + (dy + 1) * 3 + (dxo + 1);
        const int y0 = std::max(0, -dy), x0 = std::max(0, -dxo);
        const int bh = h - std::abs(dy), bw = w - std::abs(dxo);
        for (int i = 0; i < n; ++i) {
          plane_view(dx, i, c, h, w).block(y0 + dy, x0 + dxo, bh, bw) +=
              plane_view(dcols, i, k, h, w).block(y0, x0, bh, bw);
        }
      }
    }
  }
  return dx;
}

/// 3x3 convolution with same padding, as im2col + GEMM.
/// Weight layout: (9*cin) x cout, row index cin*9 + offset; bias 1 x cout.
template <class S>
struct Conv3x3 {
  int cin = 0, cout = 0;
  int wi = -1, bi = -1;
  Mat<S> cols;
  int n = 0, h = 0, w = 0;

  void reg(ParamStore<S>& ps, const std::string& path, const std::string& group,
           int cin_, int cout_) {
    cin = cin_;
    cout = cout_;
    wi = ps.add(path + ".w", group, 9 * cin, cout);
    bi = ps.add(path + ".b", group, 1, cout);
  }

  Mat<S> forward(ParamStore<S>& ps, const Mat<S>& x, int n_, int h_, int w_) {
    n = n_;
    h = h_;
    w = w_;
    cols = im2col3(x, n, h, w);
    Mat<S> y = cols * ps[wi].value;
    y.rowwise() += ps[bi].value.row(0);
    return y;
  }

  Mat<S> backward(ParamStore<S>& ps, const Mat<S>& dy) {
    ps[wi].grad.noalias() += cols.transpose() * dy;
    ps[bi].grad.row(0) += dy.colwise().sum();
    const Mat<S> dcols = dy * ps[wi].value.transpose();
    return col2im3(dcols, n, h, w, cin);
  }
};

/// Per-channel batch normalization over batch and spatial positions.
template <class S>
struct BatchNorm {
  int c = 0;
  int gi = -1, bi = -1, rmi = -1, rvi = -1;
  S eps = static_cast<S>(1e-5);
  S momentum = static_cast<S>(0.9);
  Mat<S> xhat;
  Vec<S> inv_std;

  void reg(ParamStore<S>& ps, const std::string& path, const std::string& group, int c_) {
    c = c_;
    gi = ps.add(path + ".g", group, 1, c);
    bi = ps.add(path + ".b", group, 1, c);
    rmi = ps.add(path + ".rm", "stats", 1, c);
    rvi = ps.add(path + ".rv", "stats", 1, c);
  }

  Mat<S> forward(ParamStore<S>& ps, const Mat<S>& x, bool train) {
    const auto rows = static_cast<S>(x.rows());
    Mat<S> y(x.rows(), x.cols());
    if (train) {
      xhat.resize(x.rows(), x.cols());
      inv_std.resize(c);
      for (int j = 0; j < c; ++j) {
        const S mean = x.col(j).sum() / rows;
        const S var = (x.col(j).array() - mean).square().sum() / rows;  // biased
        inv_std[j] = S(1) / std::sqrt(var + eps);
        xhat.col(j) = (x.col(j).array() - mean) * inv_std[j];
        auto& rm = ps[rmi].value(0, j);
        auto& rv = ps[rvi].value(0, j);
        rm = momentum * rm + (S(1) - momentum) * mean;
        rv = momentum * rv + (S(1) - momentum) * var;
        y.col(j) = xhat.col(j) * ps[gi].value(0, j) + Vec<S>::Constant(x.rows(), ps[bi].value(0, j));
      }
    } else {
      for (int j = 0; j < c; ++j) {
        const S scale = ps[gi].value(0, j) / std::sqrt(ps[rvi].value(0, j) + eps);
        y.col(j) =
            (x.col(j).array() - ps[rmi].value(0, j)) * scale + ps[bi].value(0, j);
      }
    }
    return y;
  }

  /// Train-mode backward (the only mode that needs gradients); accounts for
  /// the dependence of the batch statistics on the input.
  Mat<S> backward(ParamStore<S>& ps, const Mat<S>& dy) {
    const auto rows = static_cast<S>(dy.rows());
    Mat<S> dx(dy.rows(), dy.cols());
    for (int j = 0; j < c; ++j) {
      const S dbeta = dy.col(j).sum();
      const S dgamma = (dy.col(j).array() * xhat.col(j).array()).sum();
      ps[bi].grad(0, j) += dbeta;
      ps[gi].grad(0, j) += dgamma;
      dx.col(j) = (ps[gi].value(0, j) * inv_std[j] / rows) *
                  (rows * dy.col(j).array() - dbeta - xhat.col(j).array() * dgamma);
    }
    return dx;
  }
};

template <class S>
struct ReLU {
  Mat<S> mask;

  Mat<S> forward(const Mat<S>& x) {
    mask = (x.array() > S(0)).template cast<S>().matrix();
    return x.cwiseProduct(mask);
  }
  Mat<S> backward(const Mat<S>& dy) { return dy.cwiseProduct(mask); }
};

template <class S>
struct Sigmoid {
  Mat<S> y;

  Mat<S> forward(const Mat<S>& x) {
    y = (S(1) / (S(1) + (-x.array()).exp())).matrix();
    return y;
  }
  Mat<S> backward(const Mat<S>& dy) {
    return (dy.array() * y.array() * (S(1) - y.array())).matrix();
  }
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// Backward recomputes the argmax from the cached input and routes the
/// gradient to the first maximal element in scan order (0,0),(1,0),(0,1),(1,1).
template <class S>
struct MaxPool2 {
  Mat<S> x_cache;
  int n = 0, h = 0, w = 0, c = 0;

  Mat<S> forward(const Mat<S>& x, int n_, int h_, int w_, int c_) {
    n = n_;
    h = h_;
    w = w_;
    c = c_;
    const int oh = h / 2, ow = w / 2;
    x_cache = x;
    Mat<S> y(static_cast<Eigen::Index>(n) * oh * ow, c);
    for (int j = 0; j < c; ++j) {
      for (int i = 0; i < n; ++i) {
        auto src = plane_view(x_cache, i, j, h, w);
        auto dst = plane_view(y, i, j, oh, ow);
        for (int xo = 0; xo < ow; ++xo) {
          for (int yo = 0; yo < oh; ++yo) {
            dst(yo, xo) = std::max(std::max(src(2 * yo, 2 * xo), src(2 * yo + 1, 2 * xo)),
                                   std::max(src(2 * yo, 2 * xo + 1), src(2 * yo + 1, 2 * xo + 1)));
          }
        }
      }
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const int oh = h / 2, ow = w / 2;
    Mat<S> dx = Mat<S>::Zero(x_cache.rows(), c);
    for (int j = 0; j < c; ++j) {
      for (int i = 0; i < n; ++i) {
        auto src = plane_view(x_cache, i, j, h, w);
        auto g = plane_view(dy, i, j, oh, ow);
        auto dst = plane_view(dx, i, j, h, w);
        for (int xo = 0; xo < ow; ++xo) {
          for (int yo = 0; yo < oh; ++yo) {
            int by = 2 * yo, bx = 2 * xo;
            S best = src(by, bx);
            // Fixed scan order; the first maximum wins ties.
            if (src(by + 1, bx) > best) { best = src(by + 1, bx); }
            if (src(by, bx + 1) > best) { best = src(by, bx + 1); }
            if (src(by + 1, bx + 1) > best) { best = src(by + 1, bx + 1); }
            if (src(by, bx) == best) {
              dst(by, bx) += g(yo, xo);
            } else if (src(by + 1, bx) == best) {
              dst(by + 1, bx) += g(yo, xo);
            } else if (src(by, bx + 1) == best) {
              dst(by, bx + 1) += g(yo, xo);
            } else {
              dst(by + 1, bx + 1) += g(yo, xo);
            }
          }
        }
      }
    }
    return dx;
  }
};

/// Transposed 2x2 convolution with stride 2 (each input pixel paints a 2x2
/// output block, blocks do not overlap). Weight layout: (4*cin) x cout, row
/// index (offset)*cin + cin_index with offset = dy*2 + dx.
template <class S>
struct ConvT2x2 {
  int cin = 0, cout = 0;
  int wi = -1, bi = -1;
  Mat<S> x_cache;
  int n = 0, h = 0, w = 0;

  void reg(ParamStore<S>& ps, const std::string& path, const std::string& group,
           int cin_, int cout_) {
    cin = cin_;
    cout = cout_;
    wi = ps.add(path + ".w", group, 4 * cin, cout);
    bi = ps.add(path + ".b", group, 1, cout);
  }

  Mat<S> forward(ParamStore<S>& ps, const Mat<S>& x, int n_, int h_, int w_) {
    n = n_;
    h = h_;
    w = w_;
    x_cache = x;
    const int oh = 2 * h, ow = 2 * w;
    Mat<S> y(static_cast<Eigen::Index>(n) * oh * ow, cout);
    for (int j = 0; j < cout; ++j) y.col(j).setConstant(ps[bi].value(0, j));
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const Mat<S> g = x * ps[wi].value.middleRows((dy * 2 + dx) * cin, cin);
        for (int j = 0; j < cout; ++j) {
          for (int i = 0; i < n; ++i) {
            auto gp = plane_view(g, i, j, h, w);
            Eigen::Map<Mat<S>, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>> view(
                y.data() + static_cast<std::ptrdiff_t>(j) * y.rows() +
                    static_cast<std::ptrdiff_t>(i) * oh * ow + dx * oh + dy,
                h, w, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(2 * oh, 2));
            view += gp;
          }
        }
      }
    }
    return y;
  }

  Mat<S> backward(ParamStore<S>& ps, const Mat<S>& dy) {
    const int oh = 2 * h, ow = 2 * w;
    ps[bi].grad.row(0) += dy.colwise().sum();
    Mat<S> dx = Mat<S>::Zero(x_cache.rows(), cin);
    Mat<S> gamma(static_cast<Eigen::Index>(n) * h * w, cout);
    for (int dyo = 0; dyo < 2; ++dyo) {
      for (int dxo = 0; dxo < 2; ++dxo) {
        for (int j = 0; j < cout; ++j) {
          for (int i = 0; i < n; ++i) {
            Eigen::Map<const Mat<S>, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>> view(
                dy.data() + static_cast<std::ptrdiff_t>(j) * dy.rows() +
                    static_cast<std::ptrdiff_t>(i) * oh * ow + dxo * oh + dyo,
                h, w, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(2 * oh, 2));
            plane_view(gamma, i, j, h, w) = view;
          }
        }
        const auto wrows = (dyo * 2 + dxo) * cin;
        ps[wi].grad.middleRows(wrows, cin).noalias() += x_cache.transpose() * gamma;
        dx.noalias() += gamma * ps[wi].value.middleRows(wrows, cin).transpose();
      }
    }
    return dx;
  }
};

/// Nearest-neighbor 2x upsampling (parameter-free decoder alternative).
template <class S>
struct NNUpsample2 {
  int n = 0, h = 0, w = 0, c = 0;

  Mat<S> forward(const Mat<S>& x, int n_, int h_, int w_, int c_) {
    n = n_;
    h = h_;
    w = w_;
    c = c_;
    const int oh = 2 * h, ow = 2 * w;
    Mat<S> y(static_cast<Eigen::Index>(n) * oh * ow, c);
    for (int j = 0; j < c; ++j) {
      for (int i = 0; i < n; ++i) {
        auto src = plane_view(x, i, j, h, w);
        auto dst = plane_view(y, i, j, oh, ow);
        for (int xo = 0; xo < ow; ++xo) {
          for (int yo = 0; yo < oh; ++yo) dst(yo, xo) = src(yo / 2, xo / 2);
        }
      }
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) {
    const int oh = 2 * h, ow = 2 * w;
    Mat<S> dx = Mat<S>::Zero(static_cast<Eigen::Index>(n) * h * w, c);
    for (int j = 0; j < c; ++j) {
      for (int i = 0; i < n; ++i) {
        auto g = plane_view(dy, i, j, oh, ow);
        auto dst = plane_view(dx, i, j, h, w);
        for (int xo = 0; xo < ow; ++xo) {
          for (int yo = 0; yo < oh; ++yo) dst(yo / 2, xo / 2) += g(yo, xo);
        }
      }
    }
    return dx;
  }
};

/// Fully connected layer on row-per-item inputs.
template <class S>
struct Dense {
  int in = 0, out = 0;
  int wi = -1, bi = -1;
  Mat<S> x_cache;

  void reg(ParamStore<S>& ps, const std::string& path, const std::string& group, int in_,
           int out_) {
    in = in_;
    out = out_;
    wi = ps.add(path + ".w", group, in, out);
    bi = ps.add(path + ".b", group, 1, out);
  }

  Mat<S> forward(ParamStore<S>& ps, const Mat<S>& x) {
    x_cache = x;
    Mat<S> y = x * ps[wi].value;
    y.rowwise() += ps[bi].value.row(0);
    return y;
  }

  Mat<S> backward(ParamStore<S>& ps, const Mat<S>& dy) {
    ps[wi].grad.noalias() += x_cache.transpose() * dy;
    ps[bi].grad.row(0) += dy.colwise().sum();
    return dy * ps[wi].value.transpose();
  }
};

/// (n*h*w) x c -> n x (h*w*c), channel-major per item: out(i, c*hw + k) =
/// in(i*hw + k, c).
template <class S>
Mat<S> flatten_batch(const Mat<S>& x, int n, int hw) {
  const int c = static_cast<int>(x.cols());
  Mat<S> y(n, hw * c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < n; ++i) {
      y.row(i).segment(j * hw, hw) =
          x.col(j).segment(static_cast<Eigen::Index>(i) * hw, hw).transpose();
    }
  }
  return y;
}

template <class S>
Mat<S> unflatten_batch(const Mat<S>& y, int n, int hw) {
  const int c = static_cast<int>(y.cols()) / hw;
  Mat<S> x(static_cast<Eigen::Index>(n) * hw, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < n; ++i) {
      x.col(j).segment(static_cast<Eigen::Index>(i) * hw, hw) =
          y.row(i).segment(j * hw, hw).transpose();
    }
  }
  return x;
}

/// Channel concatenation [a | b] and its split adjoint.
template <class S>
Mat<S> concat_channels(const Mat<S>& a, const Mat<S>& b) {
  Mat<S> y(a.rows(), a.cols() + b.cols());
  y << a, b;
  return y;
}

}  // namespace skinseg::nn
