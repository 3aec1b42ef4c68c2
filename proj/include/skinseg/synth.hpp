#pragma once

#include <Eigen/Dense>

#include "skinseg/dataset.hpp"

namespace skinseg {

enum class ShapeFamily { ellipse, rect, mixed };

/// Generative description of one synthetic domain: blob shapes on a
/// background, with foreground/background colors drawn per pixel from
/// Gaussians in RGB. Two specs differing only in the color statistics model
/// a pure appearance shift between domains.
struct DomainSpec {
  std::string name = "synth";
  Eigen::Vector3d fg_mean{0.7, 0.5, 0.4};
  Eigen::Matrix3d fg_cov = Eigen::Matrix3d::Identity() * 1e-3;
  Eigen::Vector3d bg_mean{0.3, 0.4, 0.5};
  Eigen::Matrix3d bg_cov = Eigen::Matrix3d::Identity() * 1e-3;
  /// Std of a per-image global RGB offset (shared by fg and bg), modeling
  /// lighting that varies between images but not within one.
  double image_shift_sigma = 0.0;
  /// Std of a per-shape RGB offset added to that shape's foreground color,
  /// modeling appearance that varies between subjects. Where shapes overlap
  /// the later one wins. Zero draws nothing, leaving the pixel stream of
  /// older revisions intact.
  double shape_tone_sigma = 0.0;
  ShapeFamily shapes = ShapeFamily::mixed;
  int min_shapes = 1;
  int max_shapes = 3;
  double min_radius_frac = 0.15;  // of min(H, W)
  double max_radius_frac = 0.35;
  double noise = 0.02;  // extra per-pixel isotropic noise std
};

/// Correlated color covariance: C_ij = sigma^2 * (i == j ? 1 : rho).
Eigen::Matrix3d color_cov(double sigma, double rho);

/// n labeled train images of the given size with exact ground-truth masks.
/// Pixel values are quantized to the 8-bit grid, so writing the dataset to
/// disk and loading it back is the identity. Per-image streams are derived
/// from the seed, so a prefix of the images is stable under growing n.
Dataset make_synthetic_domain(const DomainSpec& spec, int n, int height, int width,
                              uint64_t seed);

/// Built-in domain pair for the adaptation demos: a source with wide
/// appearance coverage and a target with a narrower, shifted appearance.
DomainSpec diverse_source_spec();
DomainSpec specific_target_spec();
DomainSpec preset_domain_spec(const std::string& name);

}  // namespace skinseg
