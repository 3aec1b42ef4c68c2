#include "skinseg/model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "skinseg/framing.hpp"
#include "skinseg/patches.hpp"

namespace skinseg {

void validate(const UNetConfig& cfg) {
  if (cfg.levels < 2) throw DataError("unet config: levels must be at least 2");
  if (cfg.base_channels < 1) throw DataError("unet config: base_channels must be positive");
  const int factor = 1 << (cfg.levels - 1);
  if (cfg.frame_h < factor || cfg.frame_w < factor || cfg.frame_h % factor != 0 ||
      cfg.frame_w % factor != 0) {
    throw DataError("unet config: frame dimensions must be positive multiples of 2^(levels-1)");
  }
}

void validate(const PatchCNNConfig& cfg) {
  if (cfg.size < 1 || cfg.size % 2 == 0) {
    throw DataError("patch cnn config: size must be odd and positive");
  }
  if (cfg.size / 8 < 1) {
    throw DataError("patch cnn config: size too small for three pooling stages");
  }
  for (int w : cfg.conv) {
    if (w < 1) throw DataError("patch cnn config: conv widths must be positive");
  }
  if (cfg.fc < 1) throw DataError("patch cnn config: fc width must be positive");
}

std::vector<std::string> model_groups(ModelKind kind) {
  if (kind == ModelKind::unet) return {"encoder", "decoder", "head"};
  return {"features", "head"};
}

namespace {

template <class Net>
ModelState state_from_new_net(ModelKind kind, Net& net, uint64_t seed) {
  net.params.init(seed);
  ModelState m;
  m.kind = kind;
  for (const auto& g : model_groups(kind)) m.trainable[g] = true;
  store_net_to_state<float>(net, m);
  return m;
}

}  // namespace

ModelState build_unet(const UNetConfig& cfg, uint64_t seed) {
  nn::UNetNet<float> net(cfg);
  ModelState m = state_from_new_net(ModelKind::unet, net, seed);
  m.unet = cfg;
  return m;
}

ModelState build_patch_cnn(const PatchCNNConfig& cfg, uint64_t seed) {
  nn::PatchNet<float> net(cfg);
  ModelState m = state_from_new_net(ModelKind::patch, net, seed);
  m.patch = cfg;
  return m;
}

std::vector<Plane> unet_forward(ModelState& m, const std::vector<Image>& batch,
                                bool train) {
  if (m.kind != ModelKind::unet) throw DataError("unet_forward: model is not a unet");
  nn::UNetNet<float> net(m.unet);
  load_net_from_state<float>(net, m);
  const int h = m.unet.frame_h, w = m.unet.frame_w;
  const auto n = static_cast<int>(batch.size());
  const MatF x = batch_from_images<float>(batch, h, w);
  const MatF y = net.forward(x, n, train);
  if (train) store_net_to_state<float>(net, m);  // running statistics moved
  std::vector<Plane> out;
  out.reserve(batch.size());
  for (int i = 0; i < n; ++i) {
    out.push_back(plane_from_flat(
        y.col(0).segment(static_cast<Eigen::Index>(i) * h * w, static_cast<Eigen::Index>(h) * w),
        h, w));
  }
  return out;
}

// Inference evaluates one patch per forward pass. Matrix kernels pick their
// accumulation order by operand shape, so a batched pass is not bit-identical
// to a single-patch pass; per-patch evaluation makes every probability
// independent of how callers group patches, which the sliding-window
// equivalence below relies on. (Training batches normally; it never compares
// across batch compositions.)
VecF patch_cnn_forward(ModelState& m, const std::vector<Image>& patches) {
  if (m.kind != ModelKind::patch) throw DataError("patch_cnn_forward: model is not a patch cnn");
  nn::PatchNet<float> net(m.patch);
  load_net_from_state<float>(net, m);
  const int s = m.patch.size;
  VecF probs(static_cast<Eigen::Index>(patches.size()));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const MatF x = batch_from_images<float>({patches[i]}, s, s);
    probs[static_cast<Eigen::Index>(i)] = net.forward(x, 1)(0, 0);
  }
  return probs;
}

Plane predict_full_image(const ModelState& m, const ImageSample& sample) {
  const int h = sample.pixels.height(), w = sample.pixels.width();
  if (m.kind == ModelKind::unet) {
    nn::UNetNet<float> net(m.unet);
    load_net_from_state<float>(net, m);
    FrameTransform t;
    const Image framed = frame_image(sample.pixels, m.unet.frame_h, m.unet.frame_w, &t);
    const MatF x = batch_from_images<float>({framed}, m.unet.frame_h, m.unet.frame_w);
    const MatF y = net.forward(x, 1, /*train=*/false);
    const Plane framed_pred = plane_from_flat(y.col(0), m.unet.frame_h, m.unet.frame_w);
    return unframe_prediction(framed_pred, t);
  }

  const int s = m.patch.size;
  if (h < s || w < s) throw DataError("predict_full_image: image smaller than the patch size");
  nn::PatchNet<float> net(m.patch);
  load_net_from_state<float>(net, m);
  const int r = s / 2;
  Plane out = Plane::Zero(h, w);  // border pixels keep probability 0
  // One forward per pixel, matching patch_cnn_forward bit for bit (see above).
  for (int x0 = r; x0 < w - r; ++x0) {
    for (int y0 = r; y0 < h - r; ++y0) {
      const MatF x = batch_from_images<float>({extract_patch(sample.pixels, y0, x0, s)}, s, s);
      out(y0, x0) = net.forward(x, 1)(0, 0);
    }
  }
  return out;
}

void set_trainable(ModelState& m, const std::string& group, bool flag) {
  const auto groups = model_groups(m.kind);
  if (std::find(groups.begin(), groups.end(), group) == groups.end()) {
    std::string known;
    for (const auto& g : groups) known += (known.empty() ? "" : ", ") + g;
    throw DataError("set_trainable: unknown group '" + group + "' (known: " + known + ")");
  }
  m.trainable[group] = flag;
}

Plane plane_from_flat(const VecF& v, int h, int w) {
  if (v.size() != static_cast<Eigen::Index>(h) * w) {
    throw DataError("plane_from_flat: length does not match the plane size");
  }
  Plane p(h, w);
  std::memcpy(p.data(), v.data(), sizeof(float) * static_cast<std::size_t>(v.size()));
  return p;
}

// --- persistence -------------------------------------------------------------
//
// Little-endian layout: magic "SKSG", u32 version, u8 kind, a per-kind config
// block, the trainability flags, then each tensor as {name, rank, dims,
// float32 payload in column-major order}.

namespace {

constexpr char kMagic[4] = {'S', 'K', 'S', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& s, std::uint8_t v) { s.push_back(static_cast<char>(v)); }

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i32(std::string& s, std::int32_t v) { put_u32(s, static_cast<std::uint32_t>(v)); }

void put_f32(std::string& s, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(s, bits);
}

void put_str(std::string& s, const std::string& v) {
  put_u32(s, static_cast<std::uint32_t>(v.size()));
  s.append(v);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  explicit Reader(const std::string& b) : buf(b) {}

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("model file: truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string v = buf.substr(pos, n);
    pos += n;
    return v;
  }
};

}  // namespace

void save_params(const ModelState& m, const std::filesystem::path& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u8(buf, m.kind == ModelKind::unet ? 0 : 1);
  if (m.kind == ModelKind::unet) {
    put_i32(buf, m.unet.levels);
    put_i32(buf, m.unet.base_channels);
    put_i32(buf, m.unet.frame_h);
    put_i32(buf, m.unet.frame_w);
    put_u8(buf, m.unet.batch_norm ? 1 : 0);
    put_u8(buf, m.unet.upsample == Upsample::transposed ? 0 : 1);
  } else {
    put_i32(buf, m.patch.size);
    for (int wdt : m.patch.conv) put_i32(buf, wdt);
    put_i32(buf, m.patch.fc);
  }
  put_u32(buf, static_cast<std::uint32_t>(m.trainable.size()));
  for (const auto& [group, flag] : m.trainable) {
    put_str(buf, group);
    put_u8(buf, flag ? 1 : 0);
  }
  put_u32(buf, static_cast<std::uint32_t>(m.tensors.size()));
  for (const auto& t : m.tensors) {
    put_str(buf, t.name);
    put_u32(buf, 2);  // rank
    put_u32(buf, t.rows);
    put_u32(buf, t.cols);
    for (float v : t.data) put_f32(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open model file for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write to model file: " + path.string());
}

ModelState load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(buf);
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw DataError("model file: bad magic (not a saved model)");
  }
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("model file: unsupported version " + std::to_string(version));
  }
  ModelState m;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw DataError("model file: unknown model kind");
  m.kind = kind == 0 ? ModelKind::unet : ModelKind::patch;
  if (m.kind == ModelKind::unet) {
    m.unet.levels = r.i32();
    m.unet.base_channels = r.i32();
    m.unet.frame_h = r.i32();
    m.unet.frame_w = r.i32();
    m.unet.batch_norm = r.u8() != 0;
    m.unet.upsample = r.u8() == 0 ? Upsample::transposed : Upsample::nearest_conv;
  } else {
    m.patch.size = r.i32();
    for (int& wdt : m.patch.conv) wdt = r.i32();
    m.patch.fc = r.i32();
  }
  const std::uint32_t n_groups = r.u32();
  for (std::uint32_t i = 0; i < n_groups; ++i) {
    const std::string group = r.str();
    m.trainable[group] = r.u8() != 0;
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    ModelState::NamedTensor t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank != 2) throw DataError("model file: unsupported tensor rank");
    t.rows = r.u32();
    t.cols = r.u32();
    const std::uint64_t count = static_cast<std::uint64_t>(t.rows) * t.cols;
    r.need(static_cast<std::size_t>(count) * 4);
    t.data.resize(static_cast<std::size_t>(count));
    for (auto& v : t.data) v = r.f32();
    m.tensors.push_back(std::move(t));
  }
  if (r.pos != buf.size()) throw DataError("model file: trailing bytes after the payload");

  // Cross-check the tensor list against the declared architecture so a
  // corrupted file fails here rather than at first use.
  if (m.kind == ModelKind::unet) {
    nn::UNetNet<float> net(m.unet);
    load_net_from_state<float>(net, m);
  } else {
    nn::PatchNet<float> net(m.patch);
    load_net_from_state<float>(net, m);
  }
  for (const auto& g : model_groups(m.kind)) {
    if (m.trainable.find(g) == m.trainable.end()) {
      throw DataError("model file: missing trainability flag for group " + g);
    }
  }
  return m;
}

}  // namespace skinseg
