#include "inflab/norm.hpp"

#include "inflab/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace inflab {

struct Norm::Impl {
  NormKind kind = NormKind::euclidean;
  int dim = 0;
  double p = 2.0;
  std::vector<Vec> points;
  std::optional<Norm> base;
  Mat W;
  Mat W_inv;
  std::optional<PolytopeData> poly;
};

namespace {

constexpr int kMaxDim = 16;
constexpr int kMaxPolytopalDim = 4;
constexpr std::size_t kMaxPolytopalPoints = 48;

double lp_eval(const Vec& x, double p) {
  if (std::isinf(p)) return x.lpNorm<Eigen::Infinity>();
  if (p == 1.0) return x.lpNorm<1>();
  if (p == 2.0) return x.norm();
  const double scale = x.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

PolytopeData cross_polytope(int n) {
  PolytopeData d;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    d.vertices.push_back(e);
    d.vertices.push_back(-e);
  }
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = (mask >> i) & 1 ? -1.0 : 1.0;
    d.facets.push_back(s);
  }
  return d;
}

PolytopeData cube(int n) {
  PolytopeData d = cross_polytope(n);
  std::swap(d.vertices, d.facets);
  return d;
}

void check_dim(const Norm& norm, const Vec& x) {
  require(x.size() == norm.dim(),
          "dimension mismatch: norm on R^" + std::to_string(norm.dim()) + ", point in R^" +
              std::to_string(x.size()));
}

}  // namespace

Norm Norm::euclidean(int dim) {
  require(dim >= 1 && dim <= kMaxDim, "norm dimension must be in [1, 16]", "dim");
  auto impl = std::make_shared<Impl>();
  impl->kind = NormKind::euclidean;
  impl->dim = dim;
  impl->p = 2.0;
  if (dim == 1) impl->poly = cube(1);
  return Norm(std::move(impl));
}

Norm Norm::lp(int dim, double p) {
  require(dim >= 1 && dim <= kMaxDim, "norm dimension must be in [1, 16]", "dim");
  require(p >= 1.0 && !std::isnan(p), "lp exponent must lie in [1, inf]", "kind/lp");
  auto impl = std::make_shared<Impl>();
  impl->kind = NormKind::lp;
  impl->dim = dim;
  impl->p = p;
  if (dim == 1 || std::isinf(p))
    impl->poly = cube(dim);
  else if (p == 1.0)
    impl->poly = cross_polytope(dim);
  return Norm(std::move(impl));
}

Norm Norm::polytopal(std::vector<Vec> points) {
  require(!points.empty(), "polytopal norm needs vertices", "kind/polytopal");
  const int n = static_cast<int>(points.front().size());
  require(n >= 1 && n <= kMaxPolytopalDim, "polytopal norms are supported for dim ≤ 4",
          "kind/polytopal");
  require(points.size() <= kMaxPolytopalPoints, "polytopal norm: at most 48 vertices",
          "kind/polytopal");
  double scale = 0.0;
  for (const auto& v : points) {
    require(v.size() == n, "polytopal vertices must share one dimension", "kind/polytopal");
    require(v.allFinite(), "polytopal vertices must be finite", "kind/polytopal");
    scale = std::max(scale, v.lpNorm<Eigen::Infinity>());
  }
  for (const auto& v : points) {
    const bool has_mirror = std::any_of(points.begin(), points.end(), [&](const Vec& w) {
      return (v + w).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, scale);
    });
    require(has_mirror, "polytopal vertex list must be symmetric (v present => -v present)",
            "kind/polytopal");
  }
  Mat span(n, static_cast<int>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) span.col(static_cast<int>(i)) = points[i];
  require(Eigen::FullPivLU<Mat>(span).rank() == n, "polytopal vertices must span R^n",
          "kind/polytopal");

  auto impl = std::make_shared<Impl>();
  impl->kind = NormKind::polytopal;
  impl->dim = n;
  PolytopeData data;
  data.facets = hull_facets(points);
  data.vertices = hull_vertices(points, data.facets);
  impl->points = std::move(points);
  impl->poly = std::move(data);
  return Norm(std::move(impl));
}

Norm Norm::transformed(const Norm& base, Mat W) {
  const int n = base.dim();
  require(W.rows() == n && W.cols() == n, "transform must be a square matrix of the base dimension",
          "kind/transformed/W");
  require(W.allFinite(), "transform must be finite", "kind/transformed/W");
  Eigen::FullPivLU<Mat> lu(W);
  require(lu.rank() == n, "transform must be invertible", "kind/transformed/W");
  Eigen::JacobiSVD<Mat> svd(W);
  const auto& s = svd.singularValues();
  require(s[n - 1] > 1e-12 * s[0], "transform is numerically singular", "kind/transformed/W");

  auto impl = std::make_shared<Impl>();
  impl->kind = NormKind::transformed;
  impl->dim = n;
  impl->base = base;
  impl->W_inv = lu.inverse();
  if (const PolytopeData* bp = base.polytope()) {
    PolytopeData d;
    for (const auto& v : bp->vertices) d.vertices.push_back(W * v);
    for (const auto& a : bp->facets) d.facets.push_back(impl->W_inv.transpose() * a);
    impl->poly = std::move(d);
  }
  impl->W = std::move(W);
  return Norm(std::move(impl));
}

int Norm::dim() const { return impl_->dim; }
NormKind Norm::kind() const { return impl_->kind; }
double Norm::p() const { return impl_->p; }
const std::vector<Vec>& Norm::points() const { return impl_->points; }

const Norm& Norm::base() const {
  require(impl_->base.has_value(), "norm has no base (not a transformed norm)");
  return *impl_->base;
}

const Mat& Norm::transform() const { return impl_->W; }

const PolytopeData* Norm::polytope() const {
  return impl_->poly ? &*impl_->poly : nullptr;
}

bool Norm::is_euclidean() const {
  return impl_->kind == NormKind::euclidean || (impl_->kind == NormKind::lp && impl_->p == 2.0);
}

bool Norm::is_coordinate_monotone() const {
  return impl_->kind == NormKind::euclidean || impl_->kind == NormKind::lp;
}

double Norm::operator()(const Vec& x) const {
  check_dim(*this, x);
  switch (impl_->kind) {
    case NormKind::euclidean:
      return x.norm();
    case NormKind::lp:
      return lp_eval(x, impl_->p);
    case NormKind::polytopal: {
      double best = 0.0;
      for (const auto& a : impl_->poly->facets) best = std::max(best, a.dot(x));
      return best;
    }
    case NormKind::transformed:
      return (*impl_->base)(impl_->W_inv * x);
  }
  return 0.0;
}

double Norm::dual(const Vec& w) const {
  check_dim(*this, w);
  switch (impl_->kind) {
    case NormKind::euclidean:
      return w.norm();
    case NormKind::lp:
      return lp_eval(w, conjugate_exponent(impl_->p));
    case NormKind::polytopal: {
      double best = 0.0;
      for (const auto& v : impl_->poly->vertices) best = std::max(best, v.dot(w));
      return best;
    }
    case NormKind::transformed:
      return impl_->base->dual(impl_->W.transpose() * w);
  }
  return 0.0;
}

Vec Norm::support_functional(const Vec& u) const {
  check_dim(*this, u);
  const double nu = (*this)(u);
  require(nu > 0.0, "support functional is undefined at the origin");
  const int n = dim();
  switch (impl_->kind) {
    case NormKind::euclidean:
      return u / nu;
    case NormKind::lp: {
      const double p = impl_->p;
      Vec g = Vec::Zero(n);
      if (std::isinf(p)) {
        int count = 0;
        for (int i = 0; i < n; ++i)
          if (std::abs(u[i]) >= nu * (1.0 - 1e-12)) ++count;
        for (int i = 0; i < n; ++i)
          if (std::abs(u[i]) >= nu * (1.0 - 1e-12)) g[i] = (u[i] > 0 ? 1.0 : -1.0) / count;
      } else if (p == 1.0) {
        for (int i = 0; i < n; ++i) g[i] = u[i] > 0 ? 1.0 : (u[i] < 0 ? -1.0 : 0.0);
      } else {
        for (int i = 0; i < n; ++i) {
          const double r = std::abs(u[i]) / nu;
          g[i] = (u[i] >= 0 ? 1.0 : -1.0) * std::pow(r, p - 1.0);
        }
      }
      return g;
    }
    case NormKind::polytopal: {
      Vec g = Vec::Zero(n);
      int count = 0;
      for (const auto& a : impl_->poly->facets) {
        if (a.dot(u) >= nu * (1.0 - 1e-9)) {
          g += a;
          ++count;
        }
      }
      return g / count;
    }
    case NormKind::transformed:
      return impl_->W_inv.transpose() * impl_->base->support_functional(impl_->W_inv * u);
  }
  return Vec::Zero(n);
}

bool Norm::operator==(const Norm& other) const {
  if (impl_ == other.impl_) return true;
  if (kind() != other.kind() || dim() != other.dim()) return false;
  switch (kind()) {
    case NormKind::euclidean:
      return true;
    case NormKind::lp:
      return p() == other.p();
    case NormKind::polytopal:
      if (points().size() != other.points().size()) return false;
      for (std::size_t i = 0; i < points().size(); ++i)
        if (points()[i] != other.points()[i]) return false;
      return true;
    case NormKind::transformed:
      return transform() == other.transform() && base() == other.base();
  }
  return false;
}

BallVolume ball_volume(const Norm& norm) {
  const int n = norm.dim();
  switch (norm.kind()) {
    case NormKind::euclidean:
      return {std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0), 0.0, true};
    case NormKind::lp: {
      const double p = norm.p();
      if (std::isinf(p)) return {std::pow(2.0, n), 0.0, true};
      if (p == 1.0) return {std::pow(2.0, n) / std::tgamma(n + 1.0), 0.0, true};
      return {std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), n) / std::tgamma(1.0 + n / p), 0.0, true};
    }
    case NormKind::polytopal: {
      std::vector<Halfspace> hs;
      for (const auto& a : norm.polytope()->facets) hs.push_back({a, 1.0});
      return {polytope_volume(hs, n, Vec::Zero(n)), 0.0, true};
    }
    case NormKind::transformed: {
      BallVolume b = ball_volume(norm.base());
      const double det = std::abs(norm.transform().determinant());
      return {b.value * det, b.error_bound * det, b.exact};
    }
  }
  return {};
}

namespace {

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

BallVolume estimate_ball_volume(const Norm& norm, std::size_t points) {
  const int n = norm.dim();
  points = std::max<std::size_t>(points, 1u << 16);
  Vec half(n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    half[k] = norm.dual(e);
  }
  double box = 1.0;
  for (int k = 0; k < n; ++k) box *= 2.0 * half[k];
  std::size_t inside = 0;
  Vec x(n);
  for (std::size_t i = 1; i <= points; ++i) {
    for (int k = 0; k < n; ++k) x[k] = (2.0 * radical_inverse(i, kPrimes[k]) - 1.0) * half[k];
    if (norm(x) <= 1.0) ++inside;
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(points);
  const double radius = 2.576 * std::sqrt(frac * (1.0 - frac) / static_cast<double>(points));
  return {frac * box, radius * box, false};
}

double vol_of_norm(const Norm& norm) {
  return std::pow(2.0, norm.dim()) / ball_volume(norm).value;
}

ExtremalReport analyze_extremal(const Norm& norm, const Vec& u) {
  check_dim(norm, u);
  const double nu = norm(u);
  require(std::abs(nu - 1.0) <= kBoundaryTolerance,
          "point is not on the unit sphere (|u| = " + std::to_string(nu) + ")", "u");
  ExtremalReport report;
  report.point = u;
  report.is_boundary = true;

  Vec functional;
  if (const PolytopeData* poly = norm.polytope()) {
    const int n = norm.dim();
    Mat active(0, n);
    Vec sum = Vec::Zero(n);
    for (const auto& a : poly->facets) {
      if (std::abs(a.dot(u) - 1.0) <= kBoundaryTolerance * std::max(1.0, a.norm() * u.norm())) {
        active.conservativeResize(active.rows() + 1, Eigen::NoChange);
        active.row(active.rows() - 1) = a.transpose();
        sum += a;
      }
    }
    // A point of a polytope is extremal iff it is a vertex, and vertices are exposed.
    if (active.rows() >= n && Eigen::FullPivLU<Mat>(active).rank() == n) functional = sum;
  } else if (norm.kind() == NormKind::transformed) {
    const Mat& W = norm.transform();
    const Mat W_inv = W.inverse();
    ExtremalReport inner = analyze_extremal(norm.base(), W_inv * u);
    report.is_extremal = inner.is_extremal;
    report.is_strongly_extremal = inner.is_strongly_extremal;
    if (inner.witness_projection) {
      // P_W = W P W⁻¹ keeps P² = P and maps onto span{W(u')} = span{u}.
      report.witness_projection = W * (*inner.witness_projection) * W_inv;
    }
    return report;
  } else {
    // Euclidean and ℓ^p with 1 < p < ∞ are strictly convex.
    functional = norm.support_functional(u);
  }

  if (functional.size() == norm.dim()) {
    functional /= functional.dot(u);
    report.is_extremal = true;
    report.is_strongly_extremal = true;
    report.witness_projection = u * functional.transpose();
  }
  return report;
}

}  // namespace inflab
