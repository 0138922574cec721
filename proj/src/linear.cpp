#include "inflab/linear.hpp"

#include "inflab/parallel.hpp"
#include "inflab/random.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace inflab {

LinearMap::LinearMap(Mat entries, Norm domain, Norm codomain)
    : entries_(std::move(entries)), domain_(std::move(domain)), codomain_(std::move(codomain)) {
  require(entries_.cols() == domain_.dim(),
          "map has " + std::to_string(entries_.cols()) + " columns but the domain norm lives on R^" +
              std::to_string(domain_.dim()),
          "entries");
  require(entries_.rows() == codomain_.dim(),
          "map has " + std::to_string(entries_.rows()) + " rows but the codomain norm lives on R^" +
              std::to_string(codomain_.dim()),
          "entries");
  require(entries_.allFinite(), "map entries must be finite", "entries");
}

LinearMap LinearMap::with_matrix(Mat entries) const {
  return LinearMap(std::move(entries), domain_, codomain_);
}

double vol(const Mat& A) {
  require(A.cols() <= A.rows(), "vol needs n <= m (got n = " + std::to_string(A.cols()) +
                                    ", m = " + std::to_string(A.rows()) + ")");
  if (A.cols() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues().prod();
}

double vol(const LinearMap& map) { return vol(map.matrix()); }

bool is_full_rank(const Mat& A) {
  if (A.size() == 0) return false;
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  return s[0] > 0.0 && s[s.size() - 1] > 1e-10 * s[0];
}

// ---------------------------------------------------------------------------
// Operator norms

namespace {

// |x| = |T x|_2 when the unit ball is an ellipsoid.
std::optional<Mat> ellipsoid_transform(const Norm& norm) {
  if (norm.is_euclidean()) return Mat::Identity(norm.dim(), norm.dim());
  if (norm.kind() == NormKind::transformed) {
    if (auto inner = ellipsoid_transform(norm.base())) return Mat(*inner * norm.transform().inverse());
  }
  return std::nullopt;
}

double column_norm_max(const Norm& norm, const Mat& columns) {
  double best = 0.0;
  for (int j = 0; j < columns.cols(); ++j) best = std::max(best, norm(columns.col(j)));
  return best;
}

}  // namespace

OperatorNormEvaluator::OperatorNormEvaluator(Norm domain, Norm codomain)
    : domain_(std::move(domain)), codomain_(std::move(codomain)) {
  const int n = domain_.dim();
  const auto pre = ellipsoid_transform(domain_);
  const auto post = ellipsoid_transform(codomain_);
  if (pre && post) {
    mode_ = Mode::euclidean;
    pre_ = pre->inverse();
    post_ = *post;
  } else if (const PolytopeData* poly = domain_.polytope()) {
    mode_ = Mode::domain_vertices;
    std::vector<Vec> half;
    for (const auto& v : poly->vertices) {
      const bool mirrored = std::any_of(half.begin(), half.end(), [&](const Vec& w) {
        return (v + w).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, v.lpNorm<Eigen::Infinity>());
      });
      if (!mirrored) half.push_back(v);
    }
    vertices_.resize(n, static_cast<int>(half.size()));
    for (std::size_t j = 0; j < half.size(); ++j) vertices_.col(static_cast<int>(j)) = half[j];
  } else if (const PolytopeData* poly = codomain_.polytope()) {
    mode_ = Mode::codomain_facets;
    facets_.resize(static_cast<int>(poly->facets.size()), codomain_.dim());
    for (std::size_t i = 0; i < poly->facets.size(); ++i)
      facets_.row(static_cast<int>(i)) = poly->facets[i].transpose();
  } else {
    mode_ = Mode::bracket;
    double r = 0.0;
    for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
      Vec v = Vec::Ones(n);
      for (int i = 0; i + 1 < n; ++i)
        if ((mask >> i) & 1) v[i] = -1.0;
      r = std::max(r, domain_(v));
    }
    cube_to_a_ = r;
    Rng rng(mix_seed(0x5eed, static_cast<std::uint64_t>(n)));
    const int k = 64 * n * n;
    samples_.resize(n, k);
    for (int j = 0; j < k; ++j) {
      Vec x = rng.unit_vec(n);
      samples_.col(j) = x / domain_(x);
    }
  }
}

double OperatorNormEvaluator::fast(const Mat& M) const {
  switch (mode_) {
    case Mode::euclidean: {
      Eigen::JacobiSVD<Mat> svd(post_ * M * pre_);
      return svd.singularValues()[0];
    }
    case Mode::domain_vertices:
      return column_norm_max(codomain_, M * vertices_);
    case Mode::codomain_facets: {
      const Mat G = M.transpose() * facets_.transpose();
      double best = 0.0;
      for (int j = 0; j < G.cols(); ++j) best = std::max(best, domain_.dual(G.col(j)));
      return best;
    }
    case Mode::bracket:
      return column_norm_max(codomain_, M * samples_);
  }
  return 0.0;
}

OperatorNormResult OperatorNormEvaluator::evaluate(const Mat& M) const {
  require(M.rows() == codomain_.dim() && M.cols() == domain_.dim(),
          "operator_norm: matrix shape does not match the norms");
  if (mode_ != Mode::bracket) {
    const double v = fast(M);
    return {v, v, 0.0, true};
  }
  return bracket(M);
}

// Branch and bound over the n facets {x_k = 1} of the cube (the opposite
// facets give the same values). For a cell with centre g and half-width h,
// |Mc|_b ≤ |Mg|_b + ‖M‖_{∞→b}·h and |c|_a ≥ |g|_a − ‖I‖_{∞→a}·h.
OperatorNormResult OperatorNormEvaluator::bracket(const Mat& M) const {
  const int n = domain_.dim();
  double m_cube = 0.0;
  for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
    Vec v = Vec::Ones(n);
    for (int i = 0; i + 1 < n; ++i)
      if ((mask >> i) & 1) v[i] = -1.0;
    m_cube = std::max(m_cube, codomain_(M * v));
  }
  struct Cell {
    double ub;
    Vec centre;
    int face;
    double h;
    bool operator<(const Cell& o) const { return ub < o.ub; }
  };
  double lower = 0.0;
  auto make = [&](Vec g, int face, double h) {
    const double num = codomain_(M * g);
    const double den = domain_(g);
    lower = std::max(lower, num / den);
    const double shrunk = den - cube_to_a_ * h;
    const double ub = shrunk > 0.0 ? (num + m_cube * h) / shrunk : std::numeric_limits<double>::infinity();
    return Cell{ub, std::move(g), face, h};
  };
  std::priority_queue<Cell> queue;
  for (int k = 0; k < n; ++k) {
    Vec g = Vec::Zero(n);
    g[k] = 1.0;
    queue.push(make(std::move(g), k, 1.0));
  }
  std::size_t cells = queue.size();
  while (!queue.empty()) {
    const Cell& top = queue.top();
    if (top.ub <= lower * (1.0 + relative_tolerance) || cells >= max_cells) break;
    Cell cell = top;
    queue.pop();
    const double h = cell.h / 2.0;
    for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
      Vec g = cell.centre;
      for (int i = 0, bit = 0; i < n; ++i) {
        if (i == cell.face) continue;
        g[i] += ((mask >> bit++) & 1) ? h : -h;
      }
      queue.push(make(std::move(g), cell.face, h));
      ++cells;
    }
  }
  const double upper = queue.empty() ? lower : std::max(lower, queue.top().ub);
  return {lower, upper, upper - lower, false};
}

OperatorNormResult operator_norm(const LinearMap& map) {
  return OperatorNormEvaluator(map.domain_norm(), map.codomain_norm()).evaluate(map.matrix());
}

// ---------------------------------------------------------------------------
// Certificates

std::vector<Vec> sign_permutations(const Vec& eigenvalues) {
  const int n = static_cast<int>(eigenvalues.size());
  require(n >= 1 && n <= 20, "sign_permutations: need 1 <= n <= 20 eigenvalues", "eigenvalues");
  std::vector<Vec> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint32_t j = 0; j < (std::uint32_t{1} << n); ++j) {
    Vec s = eigenvalues;
    for (int i = 0; i < n; ++i)
      if ((j >> i) & 1u) s[i] = -s[i];
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

Vec pattern_signs(int n, std::uint32_t pattern) {
  Vec s(n);
  for (int i = 0; i < n; ++i) s[i] = ((pattern >> i) & 1u) ? -1.0 : 1.0;
  return s;
}

}  // namespace

Mat domain_inflation(const Mat& preimages, const Vec& eigenvalues, std::uint32_t pattern) {
  const int n = static_cast<int>(eigenvalues.size());
  const Vec d = pattern_signs(n, pattern).cwiseProduct(eigenvalues);
  return preimages * d.asDiagonal() * preimages.inverse();
}

VerificationReport verify_certificate(const LinearMap& map, const InflationCertificate& cert,
                                      double tol) {
  const int n = map.domain_dim();
  require(cert.preimages.rows() == n && cert.preimages.cols() == n,
          "certificate eigenbasis must be n vectors in R^n", "preimages");
  require(cert.eigenvalues.size() == n, "certificate needs n eigenvalues", "eigenvalues");
  require(n <= 20, "certificate dimension too large for sign enumeration", "eigenvalues");
  Eigen::JacobiSVD<Mat> svd(cert.preimages);
  const auto& sx = svd.singularValues();
  require(sx[0] > 0.0 && sx[n - 1] > 1e-12 * sx[0], "eigenbasis is not linearly independent",
          "preimages");

  VerificationReport report;
  report.non_shrinking = (cert.eigenvalues.array().abs() >= 1.0 - tol).all();
  OperatorNormEvaluator eval(map.domain_norm(), map.codomain_norm());
  report.min_sign_vol = std::numeric_limits<double>::infinity();
  std::string failure;
  for (std::uint32_t j = 0; j < (std::uint32_t{1} << n); ++j) {
    const Mat IA = map.matrix() * domain_inflation(cert.preimages, cert.eigenvalues, j);
    const double norm = eval.upper(IA);
    const double v = vol(IA);
    report.worst_sign_norm = std::max(report.worst_sign_norm, norm);
    report.min_sign_vol = std::min(report.min_sign_vol, v);
    if (!report.failing_pattern) {
      if (norm > 1.0 + tol) {
        report.failing_pattern = pattern_signs(n, j);
        failure = "sign pattern " + std::to_string(j) + " has operator norm " + std::to_string(norm);
      } else if (v < cert.lambda - tol * std::max(1.0, cert.lambda)) {
        report.failing_pattern = pattern_signs(n, j);
        failure = "sign pattern " + std::to_string(j) + " has vol " + std::to_string(v);
      }
    }
  }
  if (!report.non_shrinking)
    report.reason = "non-shrinking violated: some eigenvalue has |value| < 1";
  else if (report.failing_pattern)
    report.reason = failure;
  report.verified = report.non_shrinking && !report.failing_pattern;
  return report;
}

namespace {

void attach_report(const LinearMap& map, InflationCertificate& cert) {
  cert.report = verify_certificate(map, cert);
  cert.verified = cert.report.verified;
  cert.worst_sign_norm = cert.report.worst_sign_norm;
}

void require_contraction(const LinearMap& map, const OperatorNormEvaluator& eval) {
  require(map.domain_dim() <= map.codomain_dim(), "inflation needs n <= m", "entries");
  require(is_full_rank(map.matrix()), "no inflation for degenerate map", "entries");
  const double norm = eval.evaluate(map.matrix()).value;
  require(norm <= 1.0 + kVerifyTolerance,
          "map must lie in the operator unit ball (norm " + std::to_string(norm) + ")", "entries");
}

}  // namespace

InflationCertificate euclidean_inflation(const LinearMap& map) {
  require(map.domain_norm().is_euclidean() && map.codomain_norm().is_euclidean(),
          "euclidean_inflation needs Euclidean norms on both sides");
  require_contraction(map, OperatorNormEvaluator(map.domain_norm(), map.codomain_norm()));
  Eigen::JacobiSVD<Mat> svd(map.matrix(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  InflationCertificate cert;
  cert.preimages = svd.matrixV();
  cert.eigenvalues = svd.singularValues().cwiseInverse();
  cert.lambda = 1.0;
  attach_report(map, cert);
  if (!cert.verified) throw NumericalError("euclidean inflation failed to verify: " + cert.report.reason);
  return cert;
}

// ---------------------------------------------------------------------------
// Search

namespace {

constexpr double kFeasibleSlack = 1e-10;
constexpr int kBatch = 8;

struct SearchState {
  Mat X;
  Vec ell;  // log eigenvalues before normalization
  double log_norm = 0.0;
  double objective = -std::numeric_limits<double>::infinity();  // Σℓ − n log N
  double excess = std::numeric_limits<double>::infinity();      // log N − min ℓ
  bool valid = false;
};

class SearchProblem {
 public:
  SearchProblem(const LinearMap& map, const OperatorNormEvaluator& eval)
      : A_(map.matrix()), eval_(eval), n_(map.domain_dim()) {}

  void evaluate(SearchState& s) const {
    Eigen::PartialPivLU<Mat> lu(s.X);
    const double det = std::abs(lu.determinant());
    double col = 1.0;
    for (int i = 0; i < n_; ++i) col *= s.X.col(i).norm();
    s.valid = std::isfinite(det) && det > 1e-10 * col;
    if (!s.valid) return;
    const Mat Xinv = lu.inverse();
    const Mat AX = A_ * s.X;
    const Vec mu = s.ell.array().exp();
    double N = 0.0;
    // Patterns j and its complement give ±the same map.
    for (std::uint32_t j = 0; j < (std::uint32_t{1} << (n_ - 1)); ++j) {
      const Vec d = pattern_signs(n_, j).cwiseProduct(mu);
      N = std::max(N, eval_.fast(AX * d.asDiagonal() * Xinv));
    }
    s.log_norm = std::log(N);
    s.objective = s.ell.sum() - n_ * s.log_norm;
    s.excess = s.log_norm - s.ell.minCoeff();
  }

  // True when b is preferable to a: feasibility first, then volume.
  static bool better(const SearchState& b, const SearchState& a) {
    if (!b.valid) return false;
    if (!a.valid) return true;
    const bool fb = b.excess <= kFeasibleSlack, fa = a.excess <= kFeasibleSlack;
    if (fb != fa) return fb;
    if (!fb) return b.excess < a.excess - 1e-14;
    return b.objective > a.objective + 1e-13;
  }

  int n() const { return n_; }

 private:
  const Mat& A_;
  const OperatorNormEvaluator& eval_;
  int n_;
};

std::optional<InflationCertificate> finalize(const LinearMap& map, const OperatorNormEvaluator& eval,
                                             const SearchState& s) {
  const int n = map.domain_dim();
  if (!s.valid || s.excess > kFeasibleSlack) return std::nullopt;
  const Vec mu = s.ell.array().exp();
  const Mat AX = map.matrix() * s.X;
  const Mat Xinv = s.X.inverse();
  double N = 0.0;
  for (std::uint32_t j = 0; j < (std::uint32_t{1} << (n - 1)); ++j) {
    const Vec d = pattern_signs(n, j).cwiseProduct(mu);
    N = std::max(N, eval.upper(AX * d.asDiagonal() * Xinv));
  }
  InflationCertificate cert;
  cert.preimages = s.X;
  cert.eigenvalues = mu / N;
  const double smallest = cert.eigenvalues.minCoeff();
  if (smallest < 1.0) cert.eigenvalues /= smallest;
  cert.lambda = 0.0;
  double min_vol = std::numeric_limits<double>::infinity();
  for (std::uint32_t j = 0; j < (std::uint32_t{1} << n); ++j)
    min_vol = std::min(min_vol, vol(Mat(map.matrix() * domain_inflation(s.X, cert.eigenvalues, j))));
  cert.lambda = min_vol;
  attach_report(map, cert);
  if (!cert.verified) return std::nullopt;
  return cert;
}

std::optional<InflationCertificate> run_restart(const LinearMap& map, const OperatorNormEvaluator& eval,
                                                double target, int restart, const SearchOptions& opt) {
  const int n = map.domain_dim();
  const double log_vol_a = std::log(vol(map.matrix()));
  const double log_target = target > 0.0 ? std::log(target) : -std::numeric_limits<double>::infinity();
  Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(restart)));
  SearchProblem problem(map, eval);

  SearchState cur;
  cur.ell = Vec::Zero(n);
  if (restart == 0) {
    cur.X = Mat::Identity(n, n);
  } else if (restart == 1) {
    Eigen::JacobiSVD<Mat> svd(map.matrix(), Eigen::ComputeThinV);
    cur.X = svd.matrixV();
    cur.ell = -svd.singularValues().array().log();
  } else {
    cur.X = rng.orthonormal(n, n) + 0.3 * rng.normal_mat(n, n);
    cur.ell = 0.2 * rng.normal_vec(n);
  }
  problem.evaluate(cur);

  const int coords = n + n * n;
  std::vector<double> step(coords, 0.1);
  auto reached = [&](const SearchState& s) {
    return s.valid && s.excess <= kFeasibleSlack && log_vol_a + s.objective >= log_target;
  };

  for (int it = 0; it < opt.steps && !reached(cur); ++it) {
    bool moved = false;
    for (int c = 0; c < coords; ++c) {
      if (step[c] < 1e-12) continue;
      bool improved = false;
      for (double dir : {1.0, -1.0}) {
        SearchState trial = cur;
        if (c < n)
          trial.ell[c] += dir * step[c];
        else
          trial.X((c - n) % n, (c - n) / n) += dir * step[c];
        problem.evaluate(trial);
        if (SearchProblem::better(trial, cur)) {
          cur = std::move(trial);
          improved = true;
          break;
        }
      }
      step[c] = improved ? std::min(1.0, step[c] * 1.5) : step[c] * 0.5;
      moved = moved || improved;
    }
    for (int i = 0; i < n; ++i) cur.X.col(i) /= cur.X.col(i).norm();
    problem.evaluate(cur);
    if (!moved && *std::max_element(step.begin(), step.end()) < 1e-12) break;
  }
  return finalize(map, eval, cur);
}

}  // namespace

std::optional<InflationCertificate> inflation_search(const LinearMap& map, double lambda,
                                                     const SearchOptions& options, double* best_lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be a nonnegative real", "lambda");
  require(options.restarts >= 1 && options.steps >= 0, "search budget must be positive", "budget");
  const int n = map.domain_dim();
  require(n <= 20, "inflation_search: dimension too large", "entries");
  const OperatorNormEvaluator eval(map.domain_norm(), map.codomain_norm());
  require_contraction(map, eval);
  if (best_lambda) *best_lambda = 0.0;

  std::optional<InflationCertificate> best;
  auto consider = [&](std::optional<InflationCertificate> c) {
    if (c && (!best || c->lambda > best->lambda)) best = std::move(c);
  };
  if (lambda == 0.0) {
    InflationCertificate trivial;
    trivial.preimages = Mat::Identity(n, n);
    trivial.eigenvalues = Vec::Ones(n);
    trivial.lambda = vol(map.matrix());
    attach_report(map, trivial);
    if (trivial.verified) {
      if (best_lambda) *best_lambda = trivial.lambda;
      return trivial;
    }
  }
  const double target = lambda * (1.0 - 1e-12);
  for (int start = 0; start < options.restarts; start += kBatch) {
    const int count = std::min(kBatch, options.restarts - start);
    std::vector<std::optional<InflationCertificate>> results(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      results[i] = run_restart(map, eval, lambda, start + static_cast<int>(i), options);
    });
    for (auto& r : results) consider(std::move(r));
    if (best && best->lambda >= target) break;
  }
  if (best_lambda && best) *best_lambda = best->lambda;
  if (best && best->lambda >= target) return best;
  return std::nullopt;
}

PairProbeReport inflating_pair_probe(const Norm& a, const Norm& b, double lambda, int samples,
                                     std::uint64_t seed, const SearchOptions& search) {
  require(a.dim() <= b.dim(), "probe needs dim(a) <= dim(b)", "a");
  require(samples >= 0, "sample count must be nonnegative", "samples");
  const int n = a.dim(), m = b.dim();
  PairProbeReport report;
  report.lambda = lambda;
  report.normalized_lambda = vol_of_norm(a) * lambda;
  report.samples = samples;
  const double target = std::max(report.lambda, report.normalized_lambda);
  const OperatorNormEvaluator eval(a, b);
  Rng rng(mix_seed(seed, 0xA11CE));
  for (int k = 0; k < samples; ++k) {
    Mat A = rng.normal_mat(m, n);
    while (!is_full_rank(A)) A = rng.normal_mat(m, n);
    A /= eval.upper(A);
    SearchOptions opt = search;
    opt.seed = mix_seed(seed, static_cast<std::uint64_t>(k) + 1);
    double best = 0.0;
    const auto cert = inflation_search(LinearMap(A, a, b), target, opt, &best);
    const bool any = cert.has_value() || best > 0.0;
    const bool ok = any && best >= report.lambda * (1.0 - 1e-12);
    const bool ok_norm = any && best >= report.normalized_lambda * (1.0 - 1e-12);
    report.certified += ok ? 1 : 0;
    report.certified_normalized += ok_norm ? 1 : 0;
    if (!ok) report.failures.push_back({k, A, best});
  }
  if (samples > 0) {
    report.fraction = static_cast<double>(report.certified) / samples;
    report.fraction_normalized = static_cast<double>(report.certified_normalized) / samples;
  }
  return report;
}

}  // namespace inflab
