#pragma once

#include "inflab/linear.hpp"

namespace inflab {

/// (u|V): e₁ ↦ u, e_{j+1} ↦ column j of V.
Mat column_augment(const Vec& u, const Mat& V);
LinearMap column_augment(const Vec& u, const Mat& V, const Norm& a, const Norm& b);

struct MvResult {
  double value = 0.0;  ///< vol(u|best_V), a lower bound on mv(u)
  Mat best_V;          ///< m × (n−1)
  double feasibility_gap = 0.0;
  int restarts_used = 0;
  bool analytic = false;
};

struct MvOptions {
  int restarts = 32;
  int iterations = 200;
  std::uint64_t seed = 0;
  bool allow_analytic = true;
};

/// Largest vol(u|V) found over ‖(u|V)‖_{a→b} ≤ 1. The domain dimension n is
/// a.dim(); u lives in ℝᵐ with m = b.dim().
///
/// Returns exactly 0 without searching when e₁/|e₁|_a is a non-extremal
/// point of B_a and u/|e₁|_a an extremal point of ∂B_b: any feasible (u|V)
/// then maps a segment through e₁/|e₁|_a to one point and is singular.
/// For two Euclidean norms returns |u| with an orthonormal completion of u.
MvResult max_volume(const Vec& u, const Norm& a, const Norm& b, const MvOptions& options = {});

struct UscRecord {
  double eps = 0.0;
  int trials_run = 0;
  int skipped = 0;
  double worst_value = 0.0;
  bool passed = true;
};

struct UscReport {
  double base_value = 0.0;
  double delta = 0.0;
  double bound = 0.0;
  std::optional<double> largest_passing_eps;
  bool under_converged = false;
  std::vector<UscRecord> records;
};

/// Checks vol(ũ|V) ≤ mv(u) + δ for ũ sampled in B_b(u, ε), ε = 2^{-k},
/// k = 1..16. Samples with ‖(ũ|0)‖ > 1 are skipped.
UscReport usc_probe(const Vec& u, const Norm& a, const Norm& b, double delta, int trials,
                    std::uint64_t seed, const MvOptions& options = {});

}  // namespace inflab
