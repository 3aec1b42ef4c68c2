#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skinseg/image.hpp"

namespace skinseg {

enum class Split { train, test };

/// One RGB image with an optional ground-truth mask. `labeled` controls
/// whether training may look at the mask; evaluation always may.
struct ImageSample {
  std::string id;
  std::string domain;
  Image pixels;
  std::optional<Mask> mask;
  Split split = Split::train;
  bool labeled = true;

  ImageSample(std::string id_, std::string domain_, Image pixels_)
      : id(std::move(id_)), domain(std::move(domain_)), pixels(std::move(pixels_)) {}
};

/// Mask as visible to training code: null when the sample is unlabeled,
/// even if a ground-truth mask exists for evaluation.
inline const Mask* visible_mask(const ImageSample& s) {
  return (s.labeled && s.mask.has_value()) ? &*s.mask : nullptr;
}

struct Dataset {
  std::string domain;
  std::vector<ImageSample> samples;

  std::vector<int> train_indices() const;
  std::vector<int> test_indices() const;
  /// Train samples whose mask is visible to training.
  std::vector<int> labeled_train_indices() const;
};

/// Loads `<root>/images/*.ppm` paired with `<root>/masks/<stem>.pgm` by
/// filename stem. Pixels are normalized to [0,1]; masks binarized at 128.
/// Samples are ordered lexicographically by id.
///
/// When a manifest (csv: id,split,labeled) is given, its rows define the
/// dataset: every listed id must exist on disk, and a row declared labeled
/// must have a mask file. Without a manifest every image becomes a train
/// sample, labeled iff its mask exists. If `<root>/manifest.csv` exists it
/// is used implicitly.
Dataset load_dataset(const std::filesystem::path& root,
                     const std::optional<std::filesystem::path>& manifest = std::nullopt,
                     const std::string& domain = "");

/// Writes images/, masks/ and manifest.csv under root, in the layout
/// load_dataset reads. Pixel values are quantized to 8 bits.
void save_dataset(const Dataset& ds, const std::filesystem::path& root);

/// Re-tags ⌈n·test_fraction⌉ samples as test, the rest as train,
/// deterministically in `seed`. Sample order is unchanged.
Dataset split_dataset(const Dataset& ds, double test_fraction, uint64_t seed);

/// Keeps exactly round-half-up(budget·|train|) train samples labeled and
/// unlabels the rest; test samples are untouched. The kept set is a prefix
/// of a seed-derived permutation, so it grows monotonically with budget.
Dataset subsample_labels(const Dataset& ds, double budget, uint64_t seed);

}  // namespace skinseg
