#pragma once

#include <filesystem>
#include <map>

#include "skinseg/dataset.hpp"
#include "skinseg/net.hpp"

namespace skinseg {

enum class ModelKind { unet, patch };

/// Canonical, serializable form of a model: architecture config, named
/// parameter tensors (including batch-norm running statistics), and
/// per-group trainability flags.
struct ModelState {
  ModelKind kind = ModelKind::unet;
  UNetConfig unet;
  PatchCNNConfig patch;
  std::map<std::string, bool> trainable;  // group -> flag
  struct NamedTensor {
    std::string name;
    std::uint32_t rows = 0, cols = 0;
    std::vector<float> data;  // column-major payload
  };
  std::vector<NamedTensor> tensors;
};

/// Layer groups of a kind, the valid arguments to set_trainable.
std::vector<std::string> model_groups(ModelKind kind);

ModelState build_unet(const UNetConfig& cfg, uint64_t seed);
ModelState build_patch_cnn(const PatchCNNConfig& cfg, uint64_t seed);

/// Whole-image probabilities for a batch of frame-sized images. Train mode
/// uses batch statistics and updates the running estimates inside `m`; eval
/// mode reads the running estimates and leaves `m` untouched.
std::vector<Plane> unet_forward(ModelState& m, const std::vector<Image>& batch,
                                bool train);

/// Per-patch probabilities; patches must match the configured size.
VecF patch_cnn_forward(ModelState& m, const std::vector<Image>& patches);

/// Original-size probability map: the unet path frames, predicts and
/// unframes; the patch path slides a window over every interior pixel and
/// leaves a floor(size/2)-wide zero border.
Plane predict_full_image(const ModelState& m, const ImageSample& sample);

void set_trainable(ModelState& m, const std::string& group, bool flag);

/// Versioned little-endian binary format; round trips bit-exactly.
void save_params(const ModelState& m, const std::filesystem::path& path);
ModelState load_params(const std::filesystem::path& path);

// --- bridging between ModelState and the runtime nets -----------------------

/// Copies state tensors into the net's parameter store (names and shapes
/// must line up exactly).
template <class S, class Net>
void load_net_from_state(Net& net, const ModelState& m) {
  if (net.params.entries.size() != m.tensors.size()) {
    throw DataError("model state does not match the architecture (tensor count)");
  }
  for (std::size_t i = 0; i < m.tensors.size(); ++i) {
    auto& e = net.params.entries[i];
    const auto& t = m.tensors[i];
    if (e.name != t.name || e.value.rows() != static_cast<Eigen::Index>(t.rows) ||
        e.value.cols() != static_cast<Eigen::Index>(t.cols)) {
      throw DataError("model state does not match the architecture at tensor " + t.name);
    }
    for (Eigen::Index k = 0; k < e.value.size(); ++k) {
      e.value.data()[k] = static_cast<S>(t.data[static_cast<std::size_t>(k)]);
    }
  }
}

/// Writes the net's parameters (and running stats) back into the state.
template <class S, class Net>
void store_net_to_state(const Net& net, ModelState& m) {
  m.tensors.clear();
  m.tensors.reserve(net.params.entries.size());
  for (const auto& e : net.params.entries) {
    ModelState::NamedTensor t;
    t.name = e.name;
    t.rows = static_cast<std::uint32_t>(e.value.rows());
    t.cols = static_cast<std::uint32_t>(e.value.cols());
    t.data.resize(static_cast<std::size_t>(e.value.size()));
    for (Eigen::Index k = 0; k < e.value.size(); ++k) {
      t.data[static_cast<std::size_t>(k)] = static_cast<float>(e.value.data()[k]);
    }
    m.tensors.push_back(std::move(t));
  }
}

/// Batch matrix from frame-sized images (see nn.hpp for the layout).
template <class S>
Mat<S> batch_from_images(const std::vector<Image>& images, int h, int w) {
  const auto n = static_cast<Eigen::Index>(images.size());
  Mat<S> x(n * h * w, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Image& img = images[static_cast<std::size_t>(i)];
    if (img.height() != h || img.width() != w) {
      throw DataError("batch_from_images: image does not match the frame size");
    }
    for (int c = 0; c < 3; ++c) {
      x.col(c).segment(i * h * w, static_cast<Eigen::Index>(h) * w) =
          Eigen::Map<const VecF>(img.ch[c].data(), static_cast<Eigen::Index>(h) * w)
              .cast<S>();
    }
  }
  return x;
}

/// Mask plane flattened in batch order (column-major within the image).
template <class S>
Vec<S> flat_from_plane(const Plane& p) {
  return Eigen::Map<const VecF>(p.data(), p.size()).cast<S>();
}

/// Inverse of flat_from_plane.
Plane plane_from_flat(const VecF& v, int h, int w);

}  // namespace skinseg
