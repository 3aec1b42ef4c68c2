#pragma once

#include "skinseg/augment.hpp"
#include "skinseg/loss.hpp"
#include "skinseg/model.hpp"

namespace skinseg {

/// Knobs shared by every training entry point. The loss on a batch is
/// L_true + alpha(t) * L_pseudo, where each term averages the per-item loss
/// over the true-labeled / pseudo-labeled items of the batch and alpha ramps
/// from 0 to alpha_f linearly between steps t1*total and t2*total.
struct TrainConfig {
  std::string optimizer = "adam";  // recorded in config echoes; only adam exists
  double lr = 1e-3;
  int batch = 4;                // images per step; patches per step for patch models
  int epochs = 40;
  std::uint64_t seed = 1;
  bool augment_enabled = true;  // training-time augmentation of each drawn sample
  AugmentConfig augment;
  LossConfig loss;
  double tau = 0.5;             // pseudo-label probability threshold
  double t1 = 0.10;             // ramp start, as a fraction of planned steps
  double t2 = 0.40;             // ramp end, as a fraction of planned steps
  double alpha_f = 1.0;         // final pseudo-loss weight
  int phase1_steps = 20;        // head-only steps at the start of fine_tune
  int patches_per_image = 512;  // patch-kind draws per image per epoch
  bool patch_balanced = false;  // class-balanced patch sampling
  double stop_at_f1 = -1.0;     // stop once train F1 reaches this (off when <= 0)
  int max_steps = -1;           // optimizer-step cap (off when <= 0)
  bool init_from_source = false;  // pseudo-label training continues from the
                                  // source model instead of a fresh one
};

void validate(const TrainConfig& cfg);

/// alpha(t) for 0-based step `step` out of `total_steps` planned ones.
/// t1 == t2 degenerates to a step function.
double pseudo_weight(int step, int total_steps, const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> loss;  // mean batch loss per epoch
  std::vector<double> f1;    // training-set F1 per epoch (patch kind: over the
                             // epoch's sampled patches)
  int steps = 0;             // optimizer steps actually taken
};

/// Architecture choice for pipelines that build models internally.
struct ModelSpec {
  ModelKind kind = ModelKind::unet;
  UNetConfig unet;
  PatchCNNConfig patch;

  ModelState build(std::uint64_t seed) const;
};

/// A training set whose masks may come from a model instead of a human;
/// every sample carries its origin tag and a usable mask.
struct PseudoSample {
  ImageSample sample;
  bool pseudo = true;  // true: model-generated mask; false: real annotation
};

struct PseudoLabeledSet {
  std::vector<PseudoSample> samples;
  std::string generator;  // description of the model that produced the masks
  double tau = 0.5;
};

// Determinism contract shared by all entry points: given equal inputs and an
// equal cfg.seed, training is bit-reproducible. Each run consumes a single
// stream derived as derive_seed(cfg.seed, "train"): one index shuffle per
// epoch, then the per-item augmentation draws in batch order. Patch-kind
// extraction seeds are derived per (epoch, item) as
// derive_seed(cfg.seed, "patches-<epoch>-<item>").

/// Minimizes the segmentation loss (whole-image soft-Dice complement for
/// unet models, per-patch binary cross-entropy for patch models) over the
/// labeled train split. History records every epoch.
TrainHistory train_supervised(ModelState& m, const Dataset& ds, const TrainConfig& cfg);

/// Two-phase transfer: first cfg.phase1_steps steps update only the output
/// head while everything else stays bit-frozen, then all groups train for the
/// full schedule. Requires a labeled target train subset.
TrainHistory fine_tune(ModelState& m, const Dataset& target, const TrainConfig& cfg);

/// Hard labels from the model's own predictions: pixel = 1 iff its predicted
/// probability is >= tau (for tau = 0.5, the higher-probability class).
PseudoLabeledSet generate_pseudo_labels(const ModelState& m,
                                        const std::vector<ImageSample>& unlabeled,
                                        double tau);

/// Appends real-annotation samples (tagged accordingly) to a pseudo set.
PseudoLabeledSet merge_true_labels(PseudoLabeledSet set,
                                   const std::vector<ImageSample>& labeled);

/// Trains on a mixed true/pseudo set with the weighted batch loss
/// L_true + alpha(t) * L_pseudo. With only true-tagged samples this is
/// arithmetically identical to train_supervised under the same seed.
TrainHistory train_with_pseudo_labels(ModelState& m, const PseudoLabeledSet& set,
                                      const TrainConfig& cfg);

struct CombinedResult {
  ModelState model;  // "Model C"
  bool fine_tune_skipped = false;  // true at budget 0
};

/// Six-step pipeline: source model A -> cross-domain pseudo-labels -> model B
/// -> fine-tune on the true-labeled target subset (skipped at budget 0) ->
/// regenerated pseudo-labels -> one in-domain pseudo-label round -> model C.
/// `source_model` substitutes a pre-trained A (it must match `spec`); when
/// null, A is trained internally from derive_seed(cfg.seed, "source") /
/// "source-train" — the same derivation the experiment runner uses.
CombinedResult combined_pipeline(const ModelSpec& spec, const Dataset& source,
                                 const Dataset& target, double budget,
                                 const TrainConfig& cfg,
                                 const ModelState* source_model = nullptr);

}  // namespace skinseg
