#include "skinseg/train.hpp"

#include <cmath>
#include <numeric>

#include "skinseg/framing.hpp"
#include "skinseg/metrics.hpp"
#include "skinseg/optim.hpp"
#include "skinseg/patches.hpp"

namespace skinseg {

void validate(const TrainConfig& cfg) {
  if (cfg.optimizer != "adam") {
    throw DataError("train config: unknown optimizer '" + cfg.optimizer + "'");
  }
  if (!(cfg.lr > 0.0)) throw DataError("train config: lr must be positive");
  if (cfg.batch < 1) throw DataError("train config: batch must be at least 1");
  if (cfg.epochs < 0) throw DataError("train config: epochs must be non-negative");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
    throw DataError("train config: tau must be inside (0,1)");
  }
  if (cfg.t1 < 0.0 || cfg.t2 < cfg.t1) {
    throw DataError("train config: schedule needs 0 <= t1 <= t2");
  }
  if (cfg.alpha_f < 0.0) throw DataError("train config: alpha_f must be non-negative");
  if (cfg.phase1_steps < 0) {
    throw DataError("train config: phase1_steps must be non-negative");
  }
  if (cfg.patches_per_image < 1) {
    throw DataError("train config: patches_per_image must be at least 1");
  }
  if (!(cfg.loss.smoothness > 0.0)) {
    throw DataError("train config: loss smoothness must be positive");
  }
  validate(cfg.augment);
}

double pseudo_weight(int step, int total_steps, const TrainConfig& cfg) {
  const double total = static_cast<double>(total_steps);
  const double ramp_from = cfg.t1 * total;
  const double ramp_to = cfg.t2 * total;
  const double t = static_cast<double>(step);
  if (t < ramp_from) return 0.0;
  if (t >= ramp_to) return cfg.alpha_f;
  return cfg.alpha_f * (t - ramp_from) / (ramp_to - ramp_from);
}

ModelState ModelSpec::build(std::uint64_t seed) const {
  return kind == ModelKind::unet ? build_unet(unet, seed) : build_patch_cnn(patch, seed);
}

namespace {

struct CoreItem {
  const ImageSample* sample = nullptr;
  bool is_pseudo = false;
};

int steps_per_epoch(long units, int batch) {
  return static_cast<int>((units + batch - 1) / batch);
}

long planned_steps(int epochs, int per_epoch, int max_steps) {
  long planned = static_cast<long>(epochs) * per_epoch;
  if (max_steps > 0 && max_steps < planned) planned = max_steps;
  return planned;
}

/// Batch loss L_true + alpha * L_pseudo from the per-item sums; empty subsets
/// contribute nothing.
double combine_losses(double sum_true, int n_true, double sum_pseudo, int n_pseudo,
                      double alpha) {
  double loss = 0.0;
  if (n_true > 0) loss += sum_true / n_true;
  if (n_pseudo > 0) loss += alpha * (sum_pseudo / n_pseudo);
  return loss;
}

TrainHistory train_core_unet(ModelState& m, const std::vector<CoreItem>& items,
                             const TrainConfig& cfg) {
  nn::UNetNet<float> net(m.unet);
  load_net_from_state<float>(net, m);
  nn::Adam<float> opt;
  opt.lr = static_cast<float>(cfg.lr);

  const int fh = m.unet.frame_h, fw = m.unet.frame_w;
  const auto hw = static_cast<Eigen::Index>(fh) * fw;
  const int n_items = static_cast<int>(items.size());
  const int per_epoch = steps_per_epoch(n_items, cfg.batch);
  const long planned = planned_steps(cfg.epochs, per_epoch, cfg.max_steps);

  RngStream rng(derive_seed(cfg.seed, "train"));
  TrainHistory hist;
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    double epoch_loss = 0.0;
    int epoch_batches = 0;
    for (int b0 = 0; b0 < n_items && !done; b0 += cfg.batch) {
      const int nb = std::min(cfg.batch, n_items - b0);
      std::vector<Image> imgs;
      std::vector<VecF> targets;
      std::vector<char> pseudo;
      imgs.reserve(nb);
      targets.reserve(nb);
      pseudo.reserve(nb);
      int n_true = 0, n_pseudo = 0;
      for (int k = 0; k < nb; ++k) {
        const CoreItem& item = items[static_cast<std::size_t>(order[b0 + k])];
        if (cfg.augment_enabled) {
          const ImageSample aug = augment_sample(*item.sample, cfg.augment, rng);
          imgs.push_back(frame_image(aug.pixels, fh, fw));
          targets.push_back(flat_from_plane<float>(frame_mask(*aug.mask, fh, fw)));
        } else {
          imgs.push_back(frame_image(item.sample->pixels, fh, fw));
          targets.push_back(flat_from_plane<float>(frame_mask(*item.sample->mask, fh, fw)));
        }
        pseudo.push_back(item.is_pseudo ? 1 : 0);
        (item.is_pseudo ? n_pseudo : n_true) += 1;
      }

      const double alpha = pseudo_weight(step, static_cast<int>(planned), cfg);
      const MatF x = batch_from_images<float>(imgs, fh, fw);
      const MatF y = net.forward(x, nb, /*train=*/true);
      MatF dprob(y.rows(), 1);
      double sum_true = 0.0, sum_pseudo = 0.0;
      for (int k = 0; k < nb; ++k) {
        const VecD p = y.col(0).segment(k * hw, hw).cast<double>();
        const VecD g = targets[static_cast<std::size_t>(k)].cast<double>();
        const double li = dice_loss(p, g, cfg.loss);
        const VecD gi = dice_loss_grad(p, g, cfg.loss);
        const double scale = pseudo[static_cast<std::size_t>(k)]
                                 ? alpha / n_pseudo
                                 : 1.0 / n_true;
        dprob.col(0).segment(k * hw, hw) = (gi * scale).cast<float>();
        (pseudo[static_cast<std::size_t>(k)] ? sum_pseudo : sum_true) += li;
      }
      const double batch_loss = combine_losses(sum_true, n_true, sum_pseudo, n_pseudo, alpha);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged: non-finite loss at step " +
                           std::to_string(step));
      }
      net.params.zero_grad();
      net.backward(dprob);
      opt.step(net.params, m.trainable);
      ++step;
      epoch_loss += batch_loss;
      ++epoch_batches;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }

    hist.loss.push_back(epoch_loss / epoch_batches);

    // Training-set quality at original sizes, without augmentation.
    std::vector<MetricReport> reports;
    reports.reserve(items.size());
    for (int b0 = 0; b0 < n_items; b0 += cfg.batch) {
      const int nb = std::min(cfg.batch, n_items - b0);
      std::vector<Image> imgs;
      std::vector<FrameTransform> transforms(static_cast<std::size_t>(nb));
      imgs.reserve(nb);
      for (int k = 0; k < nb; ++k) {
        imgs.push_back(frame_image(items[static_cast<std::size_t>(b0 + k)].sample->pixels,
                                   fh, fw, &transforms[static_cast<std::size_t>(k)]));
      }
      const MatF x = batch_from_images<float>(imgs, fh, fw);
      const MatF y = net.forward(x, nb, /*train=*/false);
      for (int k = 0; k < nb; ++k) {
        const Plane framed = plane_from_flat(y.col(0).segment(k * hw, hw), fh, fw);
        const Plane prob = unframe_prediction(framed, transforms[static_cast<std::size_t>(k)]);
        const auto q = (prob >= 0.5f).cast<float>();
        reports.push_back(
            compute_metrics(q, *items[static_cast<std::size_t>(b0 + k)].sample->mask));
      }
    }
    hist.f1.push_back(aggregate_report(reports, AggregateMode::per_image_mean).f1);
    if (cfg.stop_at_f1 > 0.0 && hist.f1.back() >= cfg.stop_at_f1) done = true;
  }
  hist.steps = step;
  store_net_to_state<float>(net, m);
  return hist;
}

TrainHistory train_core_patch(ModelState& m, const std::vector<CoreItem>& items,
                              const TrainConfig& cfg) {
  nn::PatchNet<float> net(m.patch);
  load_net_from_state<float>(net, m);
  nn::Adam<float> opt;
  opt.lr = static_cast<float>(cfg.lr);

  const int s = m.patch.size;
  const int n_items = static_cast<int>(items.size());
  const long pool_size = static_cast<long>(n_items) * cfg.patches_per_image;
  const int per_epoch = steps_per_epoch(pool_size, cfg.batch);
  const long planned = planned_steps(cfg.epochs, per_epoch, cfg.max_steps);
  PatchConfig pcfg;
  pcfg.size = s;
  pcfg.class_balanced = cfg.patch_balanced;

  struct PoolPatch {
    Image pixels;
    float label = 0.0f;
    bool is_pseudo = false;
  };

  RngStream rng(derive_seed(cfg.seed, "train"));
  TrainHistory hist;
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<PoolPatch> pool;
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int k = 0; k < n_items; ++k) {
      const int idx = order[static_cast<std::size_t>(k)];
      const CoreItem& item = items[static_cast<std::size_t>(idx)];
      const std::uint64_t patch_seed = derive_seed(
          cfg.seed, "patches-" + std::to_string(epoch) + "-" + std::to_string(idx));
      std::vector<Patch> patches;
      if (cfg.augment_enabled) {
        const ImageSample aug = augment_sample(*item.sample, cfg.augment, rng);
        patches = extract_training_patches(aug, cfg.patches_per_image, pcfg, patch_seed);
      } else {
        patches = extract_training_patches(*item.sample, cfg.patches_per_image, pcfg,
                                           patch_seed);
      }
      for (auto& p : patches) {
        pool.push_back({std::move(p.pixels), p.label, item.is_pseudo});
      }
    }
    rng.shuffle(pool);

    double epoch_loss = 0.0;
    int epoch_batches = 0;
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    const int n_pool = static_cast<int>(pool.size());
    for (int b0 = 0; b0 < n_pool && !done; b0 += cfg.batch) {
      const int nb = std::min(cfg.batch, n_pool - b0);
      std::vector<Image> imgs;
      imgs.reserve(nb);
      int n_true = 0, n_pseudo = 0;
      for (int k = 0; k < nb; ++k) {
        const auto& p = pool[static_cast<std::size_t>(b0 + k)];
        imgs.push_back(p.pixels);
        (p.is_pseudo ? n_pseudo : n_true) += 1;
      }
      const double alpha = pseudo_weight(step, static_cast<int>(planned), cfg);
      const MatF x = batch_from_images<float>(imgs, s, s);
      const MatF z = net.forward_logits(x, nb);
      MatF dlogits(nb, 1);
      double sum_true = 0.0, sum_pseudo = 0.0;
      for (int k = 0; k < nb; ++k) {
        const auto& p = pool[static_cast<std::size_t>(b0 + k)];
        const double zi = static_cast<double>(z(k, 0));
        const double yi = static_cast<double>(p.label);
        // Stable binary cross-entropy from the logit.
        const double li =
            std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
        const double pi = 1.0 / (1.0 + std::exp(-zi));
        const double scale = p.is_pseudo ? alpha / n_pseudo : 1.0 / n_true;
        dlogits(k, 0) = static_cast<float>(scale * (pi - yi));
        (p.is_pseudo ? sum_pseudo : sum_true) += li;
        const bool predicted = pi >= 0.5;
        const bool actual = p.label != 0.0f;
        if (predicted && actual) {
          ++tp;
        } else if (predicted) {
          ++fp;
        } else if (actual) {
          ++fn;
        } else {
          ++tn;
        }
      }
      const double batch_loss = combine_losses(sum_true, n_true, sum_pseudo, n_pseudo, alpha);
      if (!std::isfinite(batch_loss)) {
        throw NumericError("training diverged: non-finite loss at step " +
                           std::to_string(step));
      }
      net.params.zero_grad();
      net.backward_from_logits(dlogits);
      opt.step(net.params, m.trainable);
      ++step;
      epoch_loss += batch_loss;
      ++epoch_batches;
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }

    hist.loss.push_back(epoch_loss / epoch_batches);
    hist.f1.push_back(report_from_counts(tp, fp, fn, tn).f1);
    if (cfg.stop_at_f1 > 0.0 && hist.f1.back() >= cfg.stop_at_f1) done = true;
  }
  hist.steps = step;
  store_net_to_state<float>(net, m);
  return hist;
}

TrainHistory train_core(ModelState& m, const std::vector<CoreItem>& items,
                        const TrainConfig& cfg) {
  validate(cfg);
  if (items.empty()) throw DataError("training requires at least one sample");
  for (const auto& item : items) {
    if (!item.sample->labeled || !item.sample->mask.has_value()) {
      throw DataError("training item '" + item.sample->id + "' has no usable mask");
    }
  }
  return m.kind == ModelKind::unet ? train_core_unet(m, items, cfg)
                                   : train_core_patch(m, items, cfg);
}

}  // namespace

TrainHistory train_supervised(ModelState& m, const Dataset& ds, const TrainConfig& cfg) {
  std::vector<CoreItem> items;
  for (const int i : ds.labeled_train_indices()) {
    items.push_back({&ds.samples[static_cast<std::size_t>(i)], false});
  }
  if (items.empty()) {
    throw DataError("train_supervised: dataset has no labeled train samples");
  }
  return train_core(m, items, cfg);
}

TrainHistory fine_tune(ModelState& m, const Dataset& target, const TrainConfig& cfg) {
  validate(cfg);
  std::vector<CoreItem> items;
  for (const int i : target.labeled_train_indices()) {
    items.push_back({&target.samples[static_cast<std::size_t>(i)], false});
  }
  if (items.empty()) {
    throw DataError("fine_tune: target has no labeled train samples (a positive label "
                    "budget is required)");
  }
  TrainHistory hist;
  if (cfg.phase1_steps > 0) {
    for (const auto& g : model_groups(m.kind)) set_trainable(m, g, g == "head");
    TrainConfig phase1 = cfg;
    phase1.seed = derive_seed(cfg.seed, "phase1");
    phase1.max_steps = cfg.phase1_steps;
    phase1.epochs = cfg.phase1_steps;  // at least one step per epoch, so the cap binds
    phase1.stop_at_f1 = -1.0;
    hist = train_core(m, items, phase1);
  }
  for (const auto& g : model_groups(m.kind)) set_trainable(m, g, true);
  TrainConfig phase2 = cfg;
  phase2.seed = derive_seed(cfg.seed, "phase2");
  const TrainHistory h2 = train_core(m, items, phase2);
  hist.loss.insert(hist.loss.end(), h2.loss.begin(), h2.loss.end());
  hist.f1.insert(hist.f1.end(), h2.f1.begin(), h2.f1.end());
  hist.steps += h2.steps;
  return hist;
}

PseudoLabeledSet generate_pseudo_labels(const ModelState& m,
                                        const std::vector<ImageSample>& unlabeled,
                                        double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw DataError("generate_pseudo_labels: tau must be inside (0,1)");
  }
  PseudoLabeledSet set;
  set.tau = tau;
  set.generator = m.kind == ModelKind::unet ? "unet" : "patch";
  for (const auto& s : unlabeled) {
    const Plane prob = predict_full_image(m, s);
    ImageSample relabeled = s;
    relabeled.mask = (prob >= static_cast<float>(tau)).cast<float>();
    relabeled.labeled = true;
    set.samples.push_back({std::move(relabeled), /*pseudo=*/true});
  }
  return set;
}

PseudoLabeledSet merge_true_labels(PseudoLabeledSet set,
                                   const std::vector<ImageSample>& labeled) {
  for (const auto& s : labeled) {
    if (!visible_mask(s)) {
      throw DataError("merge_true_labels: sample '" + s.id + "' has no visible mask");
    }
    set.samples.push_back({s, /*pseudo=*/false});
  }
  return set;
}

TrainHistory train_with_pseudo_labels(ModelState& m, const PseudoLabeledSet& set,
                                      const TrainConfig& cfg) {
  if (set.samples.empty()) {
    throw DataError("train_with_pseudo_labels: empty training set");
  }
  std::vector<CoreItem> items;
  items.reserve(set.samples.size());
  for (const auto& ps : set.samples) items.push_back({&ps.sample, ps.pseudo});
  return train_core(m, items, cfg);
}

namespace {

bool same_architecture(const ModelSpec& spec, const ModelState& m) {
  if (spec.kind != m.kind) return false;
  if (m.kind == ModelKind::unet) {
    const auto& a = spec.unet;
    const auto& b = m.unet;
    return a.levels == b.levels && a.base_channels == b.base_channels &&
           a.frame_h == b.frame_h && a.frame_w == b.frame_w &&
           a.batch_norm == b.batch_norm && a.upsample == b.upsample;
  }
  const auto& a = spec.patch;
  const auto& b = m.patch;
  return a.size == b.size && a.conv == b.conv && a.fc == b.fc;
}

}  // namespace

CombinedResult combined_pipeline(const ModelSpec& spec, const Dataset& source,
                                 const Dataset& target, double budget,
                                 const TrainConfig& cfg, const ModelState* source_model) {
  validate(cfg);
  const auto src_train = source.train_indices();
  if (src_train.empty() ||
      source.labeled_train_indices().size() != src_train.size()) {
    throw DataError("combined_pipeline: the source train split must be fully labeled");
  }

  // (1) Model A: source-supervised.
  ModelState model_a;
  if (source_model != nullptr) {
    if (!same_architecture(spec, *source_model)) {
      throw DataError("combined_pipeline: provided source model does not match the spec");
    }
    model_a = *source_model;
  } else {
    model_a = spec.build(derive_seed(cfg.seed, "source"));
    TrainConfig ca = cfg;
    ca.seed = derive_seed(cfg.seed, "source-train");
    train_supervised(model_a, source, ca);
  }

  const Dataset tsub = subsample_labels(target, budget, cfg.seed);
  std::vector<ImageSample> unlabeled, true_labeled;
  for (const int i : tsub.train_indices()) {
    const auto& s = tsub.samples[static_cast<std::size_t>(i)];
    (visible_mask(s) ? true_labeled : unlabeled).push_back(s);
  }

  // (2) cross-domain pseudo-labels; (3) Model B.
  PseudoLabeledSet round1 = generate_pseudo_labels(model_a, unlabeled, cfg.tau);
  round1 = merge_true_labels(std::move(round1), true_labeled);
  ModelState model_b =
      cfg.init_from_source ? model_a : spec.build(derive_seed(cfg.seed, "B"));
  TrainConfig cb = cfg;
  cb.seed = derive_seed(cfg.seed, "B-train");
  train_with_pseudo_labels(model_b, round1, cb);

  // (4) supervised fine-tuning on the true-labeled subset, skipped at budget 0.
  CombinedResult out;
  if (budget > 0.0) {
    TrainConfig cf = cfg;
    cf.seed = derive_seed(cfg.seed, "ft");
    fine_tune(model_b, tsub, cf);
  } else {
    out.fine_tune_skipped = true;
  }

  // (5) regenerated pseudo-labels; (6) one in-domain round -> Model C,
  // continuing from the refined model.
  PseudoLabeledSet round2 = generate_pseudo_labels(model_b, unlabeled, cfg.tau);
  round2 = merge_true_labels(std::move(round2), true_labeled);
  ModelState model_c = std::move(model_b);
  TrainConfig cc = cfg;
  cc.seed = derive_seed(cfg.seed, "C-train");
  train_with_pseudo_labels(model_c, round2, cc);
  out.model = std::move(model_c);
  return out;
}

}  // namespace skinseg
