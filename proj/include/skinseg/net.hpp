#pragma once

#include <array>

#include "skinseg/nn.hpp"

namespace skinseg {

enum class Upsample { transposed, nearest_conv };

struct UNetConfig {
  int levels = 3;          // encoder levels including the bottom
  int base_channels = 8;   // doubles per level
  int frame_h = 64;
  int frame_w = 64;
  bool batch_norm = true;
  Upsample upsample = Upsample::transposed;
};

struct PatchCNNConfig {
  int size = 17;                       // odd patch side
  std::array<int, 3> conv = {32, 64, 128};
  int fc = 128;                        // hidden width; the second fc is scalar
};

void validate(const UNetConfig& cfg);
void validate(const PatchCNNConfig& cfg);

namespace nn {

/// Encoder-decoder with skip connections. Input is an (n*Hf*Wf) x 3 batch
/// matrix; output is the per-pixel probability column (n*Hf*Wf) x 1.
template <class S>
struct UNetNet {
  UNetConfig cfg;
  ParamStore<S> params;

  struct Block {
    Conv3x3<S> c1, c2;
    BatchNorm<S> b1, b2;
    ReLU<S> r1, r2;
  };
  struct EncLevel {
    Block block;
    MaxPool2<S> pool;
    Mat<S> skip;
    Mat<S> dskip;
  };
  struct DecLevel {
    ConvT2x2<S> up;
    NNUpsample2<S> nn_up;
    Conv3x3<S> up_conv;  // only for nearest_conv upsampling
    Block block;
    int cat_left = 0;  // channels arriving from below, before the skip concat
  };

  std::vector<EncLevel> enc;  // finest first, levels-1 entries
  Block bottom;
  std::vector<DecLevel> dec;  // processing order: deepest first
  Dense<S> head;
  Sigmoid<S> out;
  int n = 0;
  bool trained_forward = false;

  explicit UNetNet(const UNetConfig& c) : cfg(c) {
    validate(cfg);
    const auto width = [&](int level) { return cfg.base_channels << level; };
    const auto reg_block = [&](Block& b, const std::string& path, const std::string& group,
                               int cin, int cout) {
      b.c1.reg(params, path + ".c1", group, cin, cout);
      if (cfg.batch_norm) b.b1.reg(params, path + ".bn1", group, cout);
      b.c2.reg(params, path + ".c2", group, cout, cout);
      if (cfg.batch_norm) b.b2.reg(params, path + ".bn2", group, cout);
    };

    enc.resize(cfg.levels - 1);
    for (int l = 0; l < cfg.levels - 1; ++l) {
      reg_block(enc[l].block, "enc" + std::to_string(l), "encoder",
                l == 0 ? 3 : width(l - 1), width(l));
    }
    reg_block(bottom, "bottom", "encoder", width(cfg.levels - 2), width(cfg.levels - 1));

    dec.resize(cfg.levels - 1);
    for (int l = cfg.levels - 2; l >= 0; --l) {
      DecLevel& d = dec[cfg.levels - 2 - l];
      const std::string path = "dec" + std::to_string(l);
      if (cfg.upsample == Upsample::transposed) {
        d.up.reg(params, path + ".up", "decoder", width(l + 1), width(l));
      } else {
        d.up_conv.reg(params, path + ".upc", "decoder", width(l + 1), width(l));
      }
      d.cat_left = width(l);
      reg_block(d.block, path, "decoder", 2 * width(l), width(l));
    }
    head.reg(params, "head", "head", width(0), 1);
  }

  Mat<S> forward_block(Block& b, const Mat<S>& x, int n_, int h, int w, bool train) {
    Mat<S> t = b.c1.forward(params, x, n_, h, w);
    if (cfg.batch_norm) t = b.b1.forward(params, t, train);
    t = b.r1.forward(t);
    t = b.c2.forward(params, t, n_, h, w);
    if (cfg.batch_norm) t = b.b2.forward(params, t, train);
    return b.r2.forward(t);
  }

  Mat<S> backward_block(Block& b, const Mat<S>& dy) {
    Mat<S> d = b.r2.backward(dy);
    if (cfg.batch_norm) d = b.b2.backward(params, d);
    d = b.c2.backward(params, d);
    d = b.r1.backward(d);
    if (cfg.batch_norm) d = b.b1.backward(params, d);
    return b.c1.backward(params, d);
  }

  Mat<S> forward(const Mat<S>& x, int n_, bool train) {
    if (x.cols() != 3 ||
        x.rows() != static_cast<Eigen::Index>(n_) * cfg.frame_h * cfg.frame_w) {
      throw DataError("unet forward: batch shape does not match the configured frame");
    }
    n = n_;
    trained_forward = train;
    int h = cfg.frame_h, w = cfg.frame_w;
    Mat<S> cur = x;
    for (int l = 0; l < cfg.levels - 1; ++l) {
      enc[l].skip = forward_block(enc[l].block, cur, n, h, w, train);
      cur = enc[l].pool.forward(enc[l].skip, n, h, w, cfg.base_channels << l);
      h /= 2;
      w /= 2;
    }
    cur = forward_block(bottom, cur, n, h, w, train);
    for (auto& d : dec) {
      Mat<S> up_out;
      if (cfg.upsample == Upsample::transposed) {
        up_out = d.up.forward(params, cur, n, h, w);
        h *= 2;
        w *= 2;
      } else {
        up_out = d.nn_up.forward(cur, n, h, w, static_cast<int>(cur.cols()));
        h *= 2;
        w *= 2;
        up_out = d.up_conv.forward(params, up_out, n, h, w);
      }
      const int level = cfg.levels - 2 - static_cast<int>(&d - dec.data());
      Mat<S> cat = concat_channels(up_out, enc[level].skip);
      cur = forward_block(d.block, cat, n, h, w, train);
    }
    return out.forward(head.forward(params, cur));
  }

  /// dprob = dLoss/d(probabilities); parameter gradients accumulate into the
  /// store. Only valid right after a train-mode forward.
  void backward(const Mat<S>& dprob) {
    if (!trained_forward) {
      throw DataError("unet backward: requires a preceding train-mode forward");
    }
    Mat<S> d = head.backward(params, out.backward(dprob));
    for (int i = static_cast<int>(dec.size()) - 1; i >= 0; --i) {
      DecLevel& dl = dec[i];
      const int level = cfg.levels - 2 - i;
      d = backward_block(dl.block, d);
      enc[level].dskip = d.rightCols(d.cols() - dl.cat_left);
      Mat<S> dup = d.leftCols(dl.cat_left);
      if (cfg.upsample == Upsample::transposed) {
        d = dl.up.backward(params, dup);
      } else {
        dup = dl.up_conv.backward(params, dup);
        d = dl.nn_up.backward(dup);
      }
    }
    d = backward_block(bottom, d);
    for (int l = cfg.levels - 2; l >= 0; --l) {
      Mat<S> dt = enc[l].pool.backward(d);
      dt += enc[l].dskip;
      d = backward_block(enc[l].block, dt);
    }
  }
};

/// Patch classifier: three conv/pool stages, two fully connected layers,
/// sigmoid output. Input is an (n*s*s) x 3 batch matrix.
template <class S>
struct PatchNet {
  PatchCNNConfig cfg;
  ParamStore<S> params;

  Conv3x3<S> c1, c2, c3;
  ReLU<S> r1, r2, r3, r4;
  MaxPool2<S> p1, p2, p3;
  Dense<S> fc1, fc2;
  Sigmoid<S> out;
  int n = 0;
  int flat_hw = 0;

  explicit PatchNet(const PatchCNNConfig& c) : cfg(c) {
    validate(cfg);
    c1.reg(params, "conv1", "features", 3, cfg.conv[0]);
    c2.reg(params, "conv2", "features", cfg.conv[0], cfg.conv[1]);
    c3.reg(params, "conv3", "features", cfg.conv[1], cfg.conv[2]);
    int side = cfg.size;
    side /= 2;  // after pool 1
    side /= 2;  // after pool 2
    side /= 2;  // after pool 3
    if (side < 1) throw DataError("patch cnn: patch size too small for three poolings");
    flat_hw = side * side;
    fc1.reg(params, "fc1", "head", flat_hw * cfg.conv[2], cfg.fc);
    fc2.reg(params, "fc2", "head", cfg.fc, 1);
  }

  /// Pre-sigmoid scores, n x 1.
  Mat<S> forward_logits(const Mat<S>& x, int n_) {
    if (x.cols() != 3 ||
        x.rows() != static_cast<Eigen::Index>(n_) * cfg.size * cfg.size) {
      throw DataError("patch forward: batch shape does not match the patch size");
    }
    n = n_;
    int side = cfg.size;
    Mat<S> t = r1.forward(c1.forward(params, x, n, side, side));
    t = p1.forward(t, n, side, side, cfg.conv[0]);
    side /= 2;
    t = r2.forward(c2.forward(params, t, n, side, side));
    t = p2.forward(t, n, side, side, cfg.conv[1]);
    side /= 2;
    t = r3.forward(c3.forward(params, t, n, side, side));
    t = p3.forward(t, n, side, side, cfg.conv[2]);
    side /= 2;
    Mat<S> flat = flatten_batch(t, n, side * side);
    return fc2.forward(params, r4.forward(fc1.forward(params, flat)));
  }

  Mat<S> forward(const Mat<S>& x, int n_) { return out.forward(forward_logits(x, n_)); }

  /// Backward from dLoss/d(logits) — the natural entry point for a
  /// cross-entropy objective, which cancels the sigmoid derivative.
  void backward_from_logits(const Mat<S>& dlogits) {
    Mat<S> d = fc1.backward(params, r4.backward(fc2.backward(params, dlogits)));
    d = unflatten_batch(d, n, flat_hw);
    d = c3.backward(params, r3.backward(p3.backward(d)));
    d = c2.backward(params, r2.backward(p2.backward(d)));
    c1.backward(params, r1.backward(p1.backward(d)));
  }
};

}  // namespace nn
}  // namespace skinseg
