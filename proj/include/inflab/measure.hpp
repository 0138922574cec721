#pragma once

#include "inflab/constructions.hpp"
#include "inflab/mv.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace inflab {

enum class MeasureQuantity { lipschitz_estimate, jacobian_integral, hausdorff_boxcount, superlevel_fraction, coverage_ratio };

std::string to_string(MeasureQuantity q);

struct MeasureReport {
  MeasureQuantity quantity = MeasureQuantity::lipschitz_estimate;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> resolution;
  std::uint64_t seed = 0;
  std::optional<double> error_bound;
  /// Exact value when available (max cell operator norm for piecewise-affine maps).
  std::optional<double> exact;
};

using MapFn = std::function<Vec(const Vec&)>;

/// Max of |f(x) − f(y)|_b / |x − y|_a over sampled pairs, half of them near
/// the diagonal (|x − y| down to 1e-4·diam). A lower bound on Lip(f).
MeasureReport estimate_lipschitz(const MapFn& f, const Region& domain, const Norm& a, const Norm& b, int pairs,
                                 std::uint64_t seed);
/// Same, with `exact` set to the max cell operator norm.
MeasureReport estimate_lipschitz(const PiecewiseAffineMap& g, const Region& domain, int pairs, std::uint64_t seed);

/// Σ_cells vol(cell linear part)·H^n(cell ∩ E).
MeasureReport jacobian_integral(const PiecewiseAffineMap& g, const Region& E);

/// H^n({vol g′ ≥ r} ∩ E) / H^n(E).
MeasureReport superlevel_fraction(const PiecewiseAffineMap& g, const Region& E, double r);

/// Box-counting estimate of H^n(g(E)) ⊂ ℝᵐ for n ≤ 2, m ≤ 4. The image is
/// approximated by a mesh of triangles (segments for n = 1); every grid box of
/// side `box_size` met by a simplex counts box_sizeⁿ divided by the ℓ¹ norm of
/// the simplex's unit Plücker vector, the density of boxes met per unit area.
MeasureReport boxcount_image_measure(const MapFn& g, const Region& E, int m, double box_size);
/// Piecewise-affine maps are meshed exactly, cell by cell, when the cell count allows.
MeasureReport boxcount_image_measure(const PiecewiseAffineMap& g, const Region& E, double box_size);

/// Fraction of grid points of B(0, target_radius) lying within one grid cell of
/// the image of a sample of B(0, radius) (grid spacing `spacing`, sample spacing
/// half of it, plus the boundary circle). n = m = 2 only.
MeasureReport coverage_check(const MapFn& g, int n, int m, double radius, double target_radius, double spacing);

// ---------------------------------------------------------------------------
// Experiments

enum class MapKind { zero, linear, abs_linear, sine };

struct MapSpec {
  MapKind kind = MapKind::zero;
  Mat matrix;         ///< m×n; frequencies for sine
  Vec offset;         ///< linear only, defaults to 0
  double scale = 1.0; ///< sine amplitude
};

LipschitzMap make_map(const MapSpec& spec, int n, int m, const Norm& a, const Norm& b);

struct PositiveConfig {
  Region E = Region::box(Box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)});
  Norm a = Norm::euclidean(2);
  Norm b = Norm::euclidean(3);
  MapSpec f;
  double lambda = 1.0;
  double eta = 0.9;
  std::vector<double> eps = {0.1};
  double box_size = 1e-3;  ///< 0 disables box counting
  int lipschitz_pairs = 20000;
  InflateOptions inflate;
};

struct PositiveRecord {
  double eps = 0.0;
  InflateReport inflate;
  double lip_sampled = 0.0;
  std::optional<MeasureReport> boxcount;
  double superlevel_fraction = 0.0;  ///< measure fraction with vol g′ ≥ ηλ
};

struct PositiveReport {
  std::vector<PositiveRecord> records;
  bool all_achieved = false;
  bool lipschitz_ok = false;
  bool distance_ok = false;
  /// Box-count image measure ≥ 0.8·λH^n(E) at every ε (m > n only).
  std::optional<bool> boxcount_soft_check;
};

PositiveReport run_positive_experiment(const PositiveConfig& config, std::uint64_t seed);

struct NegativeConfig {
  Norm a = Norm::lp(2, std::numeric_limits<double>::infinity());
  Norm b = Norm::euclidean(2);
  Vec u = Vec::Unit(2, 0);
  double r = 0.01;
  std::vector<double> eps = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  /// Further ε values reported as a diagnostic only.
  std::vector<double> extended_eps;
  int restarts = 16;
  int grid = 16;           ///< segments per axis for the coordinate-ascent restarts
  int iterations = 600;    ///< proposals per coordinate-ascent restart
  bool control = true;
  MvOptions mv;
};

struct NegativeRecord {
  double eps = 0.0;
  double fraction = 0.0;      ///< best superlevel fraction over restarts
  int best_restart = 0;
  std::vector<double> restart_fractions;
  double sup_distance = 0.0;  ///< certified bound on ‖g − (u|0)‖_∞ for the best map
  double lip_exact = 0.0;
  double jac_integral = 0.0;
  std::optional<double> control_fraction;
};

struct NegativeReport {
  double mv = 0.0;
  double threshold = 0.0;
  std::vector<NegativeRecord> records;
  std::vector<NegativeRecord> extended;
  bool weakly_decreasing = false;  ///< each step rises by at most 0.02
  bool final_small = false;        ///< last fraction ≤ 0.1
  std::optional<bool> control_high;  ///< control fractions ≥ 0.8 throughout
};

NegativeReport run_negative_experiment(const NegativeConfig& config, std::uint64_t seed);

}  // namespace inflab
