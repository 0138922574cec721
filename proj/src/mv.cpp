#include "inflab/mv.hpp"

#include "inflab/parallel.hpp"
#include "inflab/random.hpp"

#include <algorithm>
#include <cmath>

namespace inflab {

Mat column_augment(const Vec& u, const Mat& V) {
  require(V.rows() == u.size(), "columns of V must live in the same space as u", "V");
  Mat M(u.size(), V.cols() + 1);
  M.col(0) = u;
  M.rightCols(V.cols()) = V;
  return M;
}

LinearMap column_augment(const Vec& u, const Mat& V, const Norm& a, const Norm& b) {
  require(a.dim() >= 2, "column_augment needs n >= 2", "a");
  require(V.cols() == a.dim() - 1, "V must have n - 1 columns", "V");
  require(u.size() == b.dim(), "u must live in the codomain", "u");
  return LinearMap(column_augment(u, V), a, b);
}

namespace {

struct MvProblem {
  const Vec& u;
  const OperatorNormEvaluator& eval;
  double limit;
  // On the boundary case ‖(u|0)‖ = 1 feasible V satisfy φᵀV = 0 for the
  // supporting functional φ of B_b at u whenever B_a is smooth enough at e₁;
  // the shear V − u·φᵀV/φ(u) enforces that and leaves vol(u|V) unchanged.
  std::optional<Vec> phi;

  double norm(const Mat& V, bool certified) const {
    const Mat M = column_augment(u, V);
    return certified ? eval.upper(M) : eval.fast(M);
  }

  // Largest t ≥ 0 with ‖(u|tV)‖ ≤ limit. t ↦ ‖(u|tV)‖ is convex, so
  // Illinois-style regula falsi converges fast; bisection is the fallback.
  double boundary_scale(const Mat& V, bool certified) const {
    if (V.norm() == 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    double flo = norm(Mat::Zero(V.rows(), V.cols()), certified) - limit;
    double fhi = norm(V, certified) - limit;
    while (fhi <= 0.0) {
      lo = hi;
      flo = fhi;
      hi *= 2.0;
      if (hi > 1e300) return lo;
      fhi = norm(hi * V, certified) - limit;
    }
    int side = 0;
    for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
      double t = lo - flo * (hi - lo) / (fhi - flo);
      if (!(t > lo + 1e-3 * (hi - lo) && t < hi - 1e-3 * (hi - lo))) t = 0.5 * (lo + hi);
      const double ft = norm(t * V, certified) - limit;
      if (ft <= 0.0) {
        lo = t;
        flo = ft;
        if (side == -1) fhi *= 0.5;
        side = -1;
      } else {
        hi = t;
        fhi = ft;
        if (side == 1) flo *= 0.5;
        side = 1;
      }
    }
    return lo;
  }

  Mat project(const Mat& V, bool certified) const {
    Mat best = boundary_scale(V, certified) * V;
    if (phi) {
      const Mat sheared = V - u * (phi->transpose() * V) / phi->dot(u);
      const Mat alt = boundary_scale(sheared, certified) * sheared;
      if (vol(column_augment(u, alt)) > vol(column_augment(u, best))) best = alt;
    }
    return best;
  }

  double objective(const Mat& V) const { return vol(column_augment(u, project(V, false))); }
};

struct Restart {
  Mat V;
  double value = -1.0;
};

Restart ascend(const MvProblem& problem, Mat V, int iterations) {
  constexpr double h = 1e-5;
  V /= V.norm();
  double f = problem.objective(V);
  double alpha = 0.5;
  double checkpoint = f;
  for (int it = 0; it < iterations; ++it) {
    if (it > 0 && it % 10 == 0) {
      if (f - checkpoint <= 1e-9 * f) break;
      checkpoint = f;
    }
    Mat grad(V.rows(), V.cols());
    for (int j = 0; j < V.cols(); ++j) {
      for (int i = 0; i < V.rows(); ++i) {
        Mat plus = V, minus = V;
        plus(i, j) += h;
        minus(i, j) -= h;
        grad(i, j) = (problem.objective(plus) - problem.objective(minus)) / (2.0 * h);
      }
    }
    const double gn = grad.norm();
    if (gn < 1e-12) break;
    bool improved = false;
    for (int back = 0; back < 40; ++back) {
      Mat trial = V + (alpha / gn) * grad;
      trial /= trial.norm();
      const double ft = problem.objective(trial);
      if (ft > f) {
        improved = ft - f > 1e-10 * f + 1e-15;
        V = std::move(trial);
        f = ft;
        alpha = std::min(1.0, alpha * 2.0);
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
  return {V, f};
}


}  // namespace

MvResult max_volume(const Vec& u, const Norm& a, const Norm& b, const MvOptions& options) {
  const int n = a.dim();
  const int m = b.dim();
  require(n >= 2, "max_volume needs n >= 2", "a");
  require(n <= m, "max_volume needs n <= m", "b");
  require(u.size() == m, "u must live in R^m", "u");
  require(u.allFinite(), "u must be finite", "u");
  require(options.restarts >= 1, "restarts must be positive", "restarts");
  Vec e1 = Vec::Zero(n);
  e1[0] = 1.0;
  const double norm0 = b(u) * a.dual(e1);
  require(norm0 <= 1.0 + kVerifyTolerance,
          "(u|0) must lie in the operator unit ball (norm " + std::to_string(norm0) + ")", "u");

  MvResult result;
  result.best_V = Mat::Zero(m, n - 1);
  if (u.isZero(0.0)) {
    result.analytic = true;
    result.feasibility_gap = -1.0;
    return result;
  }
  if (options.allow_analytic) {
    const double s = a(e1);
    if (std::abs(b(u) - s) <= kBoundaryTolerance * s) {
      const ExtremalReport in_a = analyze_extremal(a, e1 / s);
      const ExtremalReport in_b = analyze_extremal(b, u / s);
      if (!in_a.is_extremal && in_b.is_extremal) {
        result.analytic = true;
        result.feasibility_gap = norm0 - 1.0;
        return result;
      }
    }
    if (a.kind() == NormKind::euclidean && b.kind() == NormKind::euclidean) {
      // Orthonormal completion: (u|V) has singular values |u|, 1, …, 1 and
      // vol(u|V) ≤ |u|·Π|v_j| ≤ |u| for every feasible V.
      Mat basis = Mat::Identity(m, m);
      basis.col(0) = u / u.norm();
      Eigen::HouseholderQR<Mat> qr(basis);
      const Mat Q = qr.householderQ();
      result.best_V = Q.middleCols(1, n - 1);
      const Mat M = column_augment(u, result.best_V);
      result.value = vol(M);
      result.feasibility_gap = OperatorNormEvaluator(a, b).upper(M) - 1.0;
      result.analytic = true;
      return result;
    }
  }

  const OperatorNormEvaluator eval(a, b);
  MvProblem problem{u, eval, std::max(1.0, norm0), std::nullopt};
  if (norm0 >= 1.0 - 1e-12) problem.phi = b.support_functional(u);
  std::vector<Restart> runs(static_cast<std::size_t>(options.restarts));
  parallel_for(runs.size(), [&](std::size_t r) {
    Rng rng(mix_seed(options.seed, r));
    runs[r] = ascend(problem, rng.normal_mat(m, n - 1), options.iterations);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].value > runs[best].value) best = r;

  const Mat& V = runs[best].V;
  result.best_V = problem.project(V, true);
  const Mat M = column_augment(u, result.best_V);
  result.value = vol(M);
  result.feasibility_gap = eval.upper(M) - 1.0;
  result.restarts_used = options.restarts;
  return result;
}

UscReport usc_probe(const Vec& u, const Norm& a, const Norm& b, double delta, int trials,
                    std::uint64_t seed, const MvOptions& options) {
  require(delta > 0.0, "delta must be positive", "delta");
  require(trials >= 1, "trials must be positive", "trials");
  UscReport report;
  MvOptions base_opt = options;
  base_opt.seed = mix_seed(seed, 0);
  report.base_value = max_volume(u, a, b, base_opt).value;
  report.delta = delta;
  report.bound = report.base_value + delta;

  const int n = a.dim();
  const int m = b.dim();
  Vec e1 = Vec::Zero(n);
  e1[0] = 1.0;
  const double dual_e1 = a.dual(e1);
  MvOptions trial_opt = options;
  trial_opt.restarts = std::max(1, std::min(options.restarts, 8));

  report.records.resize(16);
  parallel_for(report.records.size(), [&](std::size_t k) {
    UscRecord& rec = report.records[k];
    rec.eps = std::ldexp(1.0, -static_cast<int>(k) - 1);
    Rng rng(mix_seed(seed, 1000 + k));
    for (int t = 0; t < trials; ++t) {
      Vec d = rng.normal_vec(m);
      d /= b(d);
      const Vec ut = u + rec.eps * std::pow(rng.uniform(), 1.0 / m) * d;
      if (b(ut) * dual_e1 > 1.0) {
        ++rec.skipped;
        continue;
      }
      MvOptions local = trial_opt;
      local.seed = rng.next();
      const double v = max_volume(ut, a, b, local).value;
      ++rec.trials_run;
      rec.worst_value = std::max(rec.worst_value, v);
      if (v > report.bound) rec.passed = false;
    }
  });
  for (const auto& rec : report.records) {
    if (rec.passed && rec.trials_run > 0) {
      report.largest_passing_eps = rec.eps;
      break;
    }
  }
  report.under_converged = std::none_of(report.records.begin(), report.records.end(),
                                        [](const UscRecord& r) { return r.passed; });
  return report;
}

}  // namespace inflab
