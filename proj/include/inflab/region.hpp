#pragma once

#include "inflab/common.hpp"
#include "inflab/linear.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace inflab {

class Rng;

/// A measurable subset of ℝⁿ given as a finite union of disjoint boxes.
class Region {
 public:
  static Region box(Box b);
  /// Cells of a uniform grid on `bounds` with `counts[k]` cells along axis k;
  /// mask is indexed with axis 0 fastest.
  static Region grid_mask(Box bounds, std::vector<int> counts, std::vector<bool> mask);

  int dim() const { return bounds_.dim(); }
  const Box& bounds() const { return bounds_; }
  const std::vector<Box>& parts() const { return parts_; }
  bool is_box() const { return parts_.size() == 1 && !mask_; }

  double measure() const;
  /// H^n(Region ∩ b)
  double measure_in(const Box& b) const;
  bool contains(const Vec& x) const;
  /// Region ∩ b (keeps the parts that meet b in positive measure).
  Region clipped(const Box& b) const;
  /// Uniform sample from the region (requires positive measure).
  Vec sample(Rng& rng) const;

  /// Grid-mask data when built by grid_mask.
  const std::vector<int>* mask_counts() const { return mask_ ? &counts_ : nullptr; }
  const std::vector<bool>* mask() const { return mask_ ? &*mask_ : nullptr; }

 private:
  Box bounds_;
  std::vector<Box> parts_;
  std::vector<int> counts_;
  std::optional<std::vector<bool>> mask_;
};

/// A map ℝⁿ → ℝᵐ with a declared Lipschitz bound for the norms it is used
/// with. Affine maps carry their linear part and offset.
struct LipschitzMap {
  int n = 0;
  int m = 0;
  std::function<Vec(const Vec&)> eval;
  double lipschitz = 0.0;
  std::optional<Mat> linear;
  std::optional<Vec> offset;
  std::string description;

  Vec operator()(const Vec& x) const { return eval(x); }
  bool is_affine() const { return linear.has_value(); }

  static LipschitzMap affine(Mat L, Vec c, double lipschitz);
  /// Affine map whose Lipschitz bound is its operator norm for (a, b).
  static LipschitzMap affine(Mat L, Vec c, const Norm& a, const Norm& b);
  static LipschitzMap zero(int n, int m);
  /// x ↦ M·(|x_1|, …, |x_n|), Lipschitz bound max over sign patterns of ‖M·diag(s)‖.
  static LipschitzMap abs_linear(Mat M, const Norm& a, const Norm& b);
  /// x ↦ scale · (sin(x·F_1), …, sin(x·F_m)) for an m×n frequency matrix F,
  /// Lipschitz bound scale·‖F‖ computed for (a, b) through ‖diag(cos)·F‖ ≤ ‖F‖_{a→∞}·‖I‖_{∞→b}.
  static LipschitzMap sine(Mat F, double scale, const Norm& a, const Norm& b);

  LipschitzMap scaled(double factor) const;
};

}  // namespace inflab
