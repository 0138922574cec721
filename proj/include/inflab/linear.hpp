#pragma once

#include "inflab/common.hpp"
#include "inflab/norm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace inflab {

/// A linear map ℝⁿ → ℝᵐ stored as an m×n matrix, with the norms of both sides.
class LinearMap {
 public:
  LinearMap(Mat entries, Norm domain, Norm codomain);

  const Mat& matrix() const { return entries_; }
  int domain_dim() const { return static_cast<int>(entries_.cols()); }
  int codomain_dim() const { return static_cast<int>(entries_.rows()); }
  const Norm& domain_norm() const { return domain_; }
  const Norm& codomain_norm() const { return codomain_; }

  LinearMap with_matrix(Mat entries) const;

 private:
  Mat entries_;
  Norm domain_;
  Norm codomain_;
};

/// √det(AᵀA) for an m×n matrix with n ≤ m, computed from singular values.
double vol(const Mat& A);
double vol(const LinearMap& map);

/// Smallest singular value > 1e-10 · largest.
bool is_full_rank(const Mat& A);

struct OperatorNormResult {
  double value = 0.0;  ///< best attained |Ax|_b over B_a (a lower bound)
  double upper = 0.0;  ///< certified upper bound
  double gap = 0.0;    ///< upper − value
  bool exact = false;
};

/// Evaluates ‖M‖_{a→b} for many matrices with fixed norms.
///
/// Exact paths: domain ball a polytope (vertex maximum), codomain ball a
/// polytope (facet functionals through the dual of a), both norms Euclidean up
/// to a linear change of variables (largest singular value). Otherwise a
/// branch and bound over the faces of the cube brackets the value.
class OperatorNormEvaluator {
 public:
  OperatorNormEvaluator(Norm domain, Norm codomain);

  OperatorNormResult evaluate(const Mat& M) const;
  /// Certified upper bound; equals the exact value on exact paths.
  double upper(const Mat& M) const { return evaluate(M).upper; }
  /// Cheap estimate for inner optimization loops: exact where possible,
  /// otherwise a maximum over a fixed sample of unit vectors.
  double fast(const Mat& M) const;
  bool exact() const { return mode_ != Mode::bracket; }

  const Norm& domain() const { return domain_; }
  const Norm& codomain() const { return codomain_; }

  double relative_tolerance = 1e-7;
  std::size_t max_cells = 40000;

 private:
  enum class Mode { domain_vertices, codomain_facets, euclidean, bracket };
  OperatorNormResult bracket(const Mat& M) const;

  Norm domain_;
  Norm codomain_;
  Mode mode_ = Mode::bracket;
  Mat vertices_;   // n×k, one of each ±v
  Mat facets_;     // k×m
  Mat pre_;        // |x|_a = |pre_ x|_2 on the euclidean path
  Mat post_;       // |y|_b = |post_ y|_2
  Mat samples_;    // n×k unit vectors of a for fast()
  double cube_to_a_ = 1.0;  // max |v|_a over cube vertices
};

OperatorNormResult operator_norm(const LinearMap& map);

/// All 2ⁿ sign patterns applied to `eigenvalues`; bit i of the pattern index
/// flips eigenvalue i.
std::vector<Vec> sign_permutations(const Vec& eigenvalues);

struct VerificationReport {
  bool verified = false;
  bool non_shrinking = false;
  double worst_sign_norm = 0.0;
  double min_sign_vol = 0.0;
  /// Sign pattern (±1 per eigenvalue) of the first violation, if any.
  std::optional<Vec> failing_pattern;
  std::string reason;
};

/// λ-inflation of A: I(A x_i) = μ_i A x_i. Stored through the preimages x_i
/// (columns of `preimages`), so Ĩ∘A = A·X·diag(s∘μ)·X⁻¹.
struct InflationCertificate {
  Mat preimages;
  Vec eigenvalues;
  double lambda = 0.0;
  bool verified = false;
  double worst_sign_norm = 0.0;
  VerificationReport report;
};

inline constexpr double kVerifyTolerance = 1e-9;

/// X·diag(s∘μ)·X⁻¹ for the given sign pattern index.
Mat domain_inflation(const Mat& preimages, const Vec& eigenvalues, std::uint32_t pattern);

/// Recomputes all sign-permutation norms and volumes. The non-shrinking
/// condition is checked on the eigenvalues of I.
VerificationReport verify_certificate(const LinearMap& map, const InflationCertificate& cert,
                                      double tol = kVerifyTolerance);

/// 1-inflation between Euclidean norms from the singular value decomposition.
InflationCertificate euclidean_inflation(const LinearMap& map);

struct SearchOptions {
  int restarts = 64;
  int steps = 200;
  std::uint64_t seed = 0;
};

/// Multi-start coordinate ascent over preimage bases and eigenvalue shapes.
/// Returns a verified certificate with lambda ≥ target, or nothing when the
/// budget runs out. `best_lambda` receives the best verified value seen.
std::optional<InflationCertificate> inflation_search(const LinearMap& map, double lambda,
                                                     const SearchOptions& options = {},
                                                     double* best_lambda = nullptr);

struct PairProbeFailure {
  int index = 0;
  Mat entries;
  double best_lambda = 0.0;
};

struct PairProbeReport {
  double lambda = 0.0;
  double normalized_lambda = 0.0;  ///< vol(|·|_a)·λ
  int samples = 0;
  int certified = 0;
  int certified_normalized = 0;
  double fraction = 0.0;
  double fraction_normalized = 0.0;
  std::vector<PairProbeFailure> failures;
};

PairProbeReport inflating_pair_probe(const Norm& a, const Norm& b, double lambda, int samples,
                                     std::uint64_t seed, const SearchOptions& search = {});

}  // namespace inflab
