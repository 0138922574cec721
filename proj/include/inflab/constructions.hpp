#pragma once

#include "inflab/linear.hpp"
#include "inflab/pam.hpp"
#include "inflab/region.hpp"

#include <memory>
#include <vector>

namespace inflab {

/// g(x) = c + Σᵢ γᵢ(tᵢ), t = X⁻¹x, where γᵢ is the zigzag with slopes ±μᵢ·A(xᵢ)
/// approximating tᵢ·A(xᵢ) within eps/n. The certificate must certify
/// A_lin/scale; cells then have operator norm ≤ scale and vol ≥ scaleⁿ·λ.
PiecewiseAffineMap inflate_affine(const Mat& A_lin, const Vec& offset, const InflationCertificate& cert,
                                  const Box& E, double eps, const Norm& a, const Norm& b, double scale = 1.0);

/// A set Sᵢ (box or point cloud) with radius ρᵢ and a map gᵢ defined on B(Sᵢ, ρᵢ).
struct Patch {
  std::optional<Box> box;
  std::vector<Vec> points;
  double rho = 1.0;
  std::function<Vec(const Vec&)> map;
  std::shared_ptr<const PiecewiseAffineMap> pam;
};

struct PatchSpec {
  std::vector<Patch> patches;
  LipschitzMap base;
  double delta = 0.0;
  Norm a = Norm::euclidean(1);
  Norm b = Norm::euclidean(1);
};

/// g = f + Σ χᵢ·(gᵢ − f), χᵢ(x) = max(ρᵢ/2 − dist(x, Sᵢ), 0)/(ρᵢ/2).
class GluedMap {
 public:
  GluedMap(PatchSpec spec, double lipschitz_bound);

  Vec operator()(const Vec& x) const;
  double dist(std::size_t patch, const Vec& x) const;
  /// Index of a patch with χ > 0 at x, if any.
  std::optional<std::size_t> active_patch(const Vec& x) const;

  const PatchSpec& spec() const { return spec_; }
  double lipschitz_bound() const { return lipschitz_bound_; }

 private:
  PatchSpec spec_;
  double lipschitz_bound_;
  std::vector<Box> reach_;  // bounding boxes of B(Sᵢ, ρᵢ/2)
};

struct GlueOptions {
  int samples_per_patch = 64;
  std::uint64_t seed = 0;
};

/// Checks the patch hypotheses (pairwise dist(Sᵢ, Sⱼ) ≥ ρᵢ + ρⱼ; sampled
/// ‖gᵢ − f‖ ≤ δρᵢ on B(Sᵢ, ρᵢ)) and returns the glued map with Lipschitz
/// bound L + 4δ. Box patches need a coordinate-monotone domain norm.
GluedMap glue_patches(PatchSpec spec, double L, const GlueOptions& options = {});

struct InflateOptions {
  double sigma = 0.9;
  int max_depth = 8;
  double max_patches = 4096;
  SearchOptions search;
  int check_samples = 10000;
};

struct InflateReport {
  bool trivial = false;
  bool scaled_f = false;
  double f_scale = 1.0;
  double measure_E = 0.0;
  double target = 0.0;          ///< η·λ·H^n(E)
  double integral = 0.0;        ///< exact ∫ of vol g′ over (⋃Sᵢ) ∩ E, a lower bound on ∫_E
  bool achieved = false;
  double sup_distance = 0.0;    ///< sampled ‖g − f‖_∞ on E
  double lip_cells = 0.0;       ///< exact max cell operator norm over all patches
  double lip_bound = 0.0;       ///< bound for the glued map
  double delta = 0.0;
  double sigma = 0.0;
  int depth = 0;
  int patches = 0;
  double cells = 0.0;
  double min_cell_vol = 0.0;
};

struct InflateResult {
  std::shared_ptr<const GluedMap> map;
  InflateReport report;
};

/// Builds g near f on E with ∫_E vol g′ ≥ η·λ·H^n(E) by fitting affine pieces on a
/// dyadic grid, inflating each piece and gluing. An affine f is handled by a
/// single piece on the bounding box of E.
InflateResult inflate_on_set(const LipschitzMap& f, const Region& E, const Norm& a, const Norm& b, double lambda,
                             double eps, double eta, std::uint64_t seed, const InflateOptions& options = {});

/// δ = σ_min(A)·(1 − η^{1/n})/2.
double lsc_margin(const Mat& A, double eta);

/// ε = δ/(K·N).
double balls_epsilon(double K, double delta, long long N);

}  // namespace inflab
