#pragma once

#include "inflab/linear.hpp"
#include "inflab/region.hpp"

#include <vector>

namespace inflab {

/// Curve t ↦ φ(t)·u, continuous and affine on each [t_k, t_{k+1}] with
/// φ′ = signs[k] ∈ {±1}.
struct ZigzagCurve {
  std::vector<double> breakpoints;
  std::vector<int> signs;
  Vec direction;
  Vec anchor;  ///< γ(t₀)
  /// φ(t_k), so γ(t_k) = coefficients[k]·u.
  std::vector<double> coefficients;

  std::size_t segments() const { return signs.size(); }
  std::size_t segment_of(double t) const;
  double coefficient(double t) const;
  Vec operator()(double t) const { return coefficient(t) * direction; }
};

/// Curve with derivative ±u approximating t ↦ t·w on [lo, hi] within eps in
/// the norm b. Requires u = κ·w with |κ| ≥ 1, or w = 0.
ZigzagCurve zigzag_curve(const Vec& w, const Vec& u, double eps, double lo, double hi, const Norm& b);

/// Separable piecewise-affine map
///   g(x) = offset + Σᵢ φᵢ(tᵢ),  t = X⁻¹x,
/// with φᵢ : ℝ → ℝᵐ piecewise linear on the breakpoints of axis i. A cell is a
/// product of one segment per axis, i.e. a parallelepiped in x; its linear
/// part is [d₁ … d_n]·X⁻¹ with dᵢ the slope of φᵢ on the chosen segment.
/// Slopes are stored once per axis in a small table.
class PiecewiseAffineMap {
 public:
  struct Axis {
    std::vector<double> breaks;       ///< K+1 increasing values
    std::vector<Vec> slopes;          ///< distinct slope vectors in ℝᵐ
    std::vector<int> slope_index;     ///< K entries into `slopes`
    std::vector<Vec> values;          ///< φ(breaks[k]), K+1 entries

    std::size_t segments() const { return slope_index.size(); }
    std::size_t segment_of(double t) const;
    Vec eval(double t) const;
  };

  PiecewiseAffineMap(Box domain, Mat basis, Vec offset, std::vector<Axis> axes, Norm a, Norm b);

  int dim() const { return domain_.dim(); }
  int codim() const { return static_cast<int>(offset_.size()); }
  const Box& domain() const { return domain_; }
  const Mat& basis() const { return basis_; }
  const Mat& basis_inverse() const { return basis_inv_; }
  const Vec& offset() const { return offset_; }
  const std::vector<Axis>& axes() const { return axes_; }
  const Norm& domain_norm() const { return a_; }
  const Norm& codomain_norm() const { return b_; }
  bool axis_aligned() const { return axis_aligned_; }

  Vec operator()(const Vec& x) const;

  double cell_count() const;

  /// Linear part for one slope choice per axis.
  Mat linear_part(const std::vector<int>& slope_choice) const;
  /// Number of distinct slope combinations (product of per-axis table sizes).
  std::size_t combo_count() const;
  std::vector<int> combo(std::size_t index) const;

  /// Per-combination operator norm upper bounds and volumes, computed at
  /// construction.
  struct ComboStats {
    std::vector<double> norms;
    std::vector<double> vols;
  };
  const ComboStats& combo_stats() const { return stats_; }

  /// max over cells of the certified cell operator norm.
  double exact_lipschitz() const;

  /// Σ over cells of weight(combo)·H^n(cell ∩ E ∩ domain). When the weight
  /// is the same for every combination this is weight·H^n(E ∩ domain);
  /// otherwise cells are enumerated (at most `max_cells`).
  double integrate(const Region& E, const std::function<double(std::size_t combo)>& weight,
                   double max_cells = 4e6) const;

  /// Visits every cell: combo index, t-interval bounds.
  void for_each_cell(const std::function<void(std::size_t combo, const Vec& tlo, const Vec& thi)>& fn) const;

  /// H^n(cell ∩ B) for the parallelepiped X·[tlo, thi].
  double cell_measure_in(const Vec& tlo, const Vec& thi, const Box& b) const;

 private:
  Box domain_;
  Mat basis_;
  Mat basis_inv_;
  Vec offset_;
  std::vector<Axis> axes_;
  Norm a_;
  Norm b_;
  bool axis_aligned_ = false;
  ComboStats stats_;
};

/// Axis tracing a zigzag: slopes ±direction (those used), values coefficient·direction.
PiecewiseAffineMap::Axis zigzag_axis(const ZigzagCurve& z);

/// t-range of X⁻¹(box): per-axis min and max over the box corners.
std::pair<Vec, Vec> basis_range(const Mat& basis_inverse, const Box& box);

}  // namespace inflab
