#pragma once

#include "inflab/common.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace inflab {

enum class NormKind { euclidean, lp, polytopal, transformed };

/// Unit ball of a norm whose ball is a polytope: vertices and facets
/// { x : a · x ≤ 1 }.
struct PolytopeData {
  std::vector<Vec> vertices;
  std::vector<Vec> facets;
};

/// A norm on R^n. Immutable value type; copies share the underlying data.
class Norm {
 public:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  static Norm euclidean(int dim);
  /// ℓ^p norm, p ∈ [1, ∞]; pass Norm::kInfinity for the maximum norm.
  static Norm lp(int dim, double p);
  /// Gauge of the convex hull of a centrally symmetric point set spanning R^n.
  static Norm polytopal(std::vector<Vec> points);
  /// |x|_{W(a)} = |W⁻¹ x|_a, whose unit ball is W(B_a).
  static Norm transformed(const Norm& base, Mat W);

  int dim() const;
  NormKind kind() const;
  /// Exponent of an lp norm (2 for euclidean).
  double p() const;
  /// The point list a polytopal norm was built from.
  const std::vector<Vec>& points() const;
  const Norm& base() const;
  const Mat& transform() const;

  double operator()(const Vec& x) const;

  /// sup_{|x| ≤ 1} w · x
  double dual(const Vec& w) const;

  /// A functional x* with x*(u) = |u| and dual(x*) = 1 (a subgradient at u ≠ 0).
  Vec support_functional(const Vec& u) const;

  bool is_euclidean() const;
  /// Euclidean or ℓ^p: norms that are monotone in each |x_i|, so the nearest
  /// point of an axis-aligned box is found by clamping.
  bool is_coordinate_monotone() const;

  /// Polytope data when the unit ball is a polytope (ℓ¹, ℓ^∞, polytopal,
  /// transforms of those, and every norm on R¹); null otherwise.
  const PolytopeData* polytope() const;

  bool operator==(const Norm& other) const;

 private:
  struct Impl;
  explicit Norm(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct BallVolume {
  double value = 0.0;
  double error_bound = 0.0;
  bool exact = true;
};

/// Lebesgue measure of the unit ball. Exact for every supported kind.
BallVolume ball_volume(const Norm& norm);

/// Quasi-Monte-Carlo (Halton) estimate of the unit-ball volume with a 99%
/// confidence radius. At least 2^16 points are used.
BallVolume estimate_ball_volume(const Norm& norm, std::size_t points = 1u << 16);

/// 2^n / H^n(B): converts Lebesgue measure to the Hausdorff measure of the norm.
double vol_of_norm(const Norm& norm);

struct ExtremalReport {
  Vec point;
  bool is_boundary = false;
  bool is_extremal = false;
  bool is_strongly_extremal = false;
  /// P = u ⊗ x*, with x* a supporting functional exposing u. Present iff
  /// strongly extremal.
  std::optional<Mat> witness_projection;
};

inline constexpr double kBoundaryTolerance = 1e-9;

/// Decides extremality of a boundary point u (|u| = 1 within 1e-9 relative).
ExtremalReport analyze_extremal(const Norm& norm, const Vec& u);

}  // namespace inflab
