#include "inflab/pam.hpp"

#include "inflab/polytope.hpp"

#include <algorithm>
#include <cmath>

namespace inflab {

// ---------------------------------------------------------------------------
// Zigzag curves

std::size_t ZigzagCurve::segment_of(double t) const {
  const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, t);
  return static_cast<std::size_t>(it - (breakpoints.begin() + 1));
}

double ZigzagCurve::coefficient(double t) const {
  const std::size_t k = segment_of(t);
  return coefficients[k] + signs[k] * (t - breakpoints[k]);
}

ZigzagCurve zigzag_curve(const Vec& w, const Vec& u, double eps, double lo, double hi, const Norm& b) {
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive", "eps");
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "interval needs lo < hi", "interval");
  require(w.size() == u.size() && w.size() == b.dim(), "A(1) and u must live in the codomain", "u");
  constexpr std::size_t kMaxSegments = 2000000;

  ZigzagCurve z;
  z.direction = u;
  double c = 0.0;
  if (w.lpNorm<Eigen::Infinity>() > 0.0) {
    const double kappa = u.dot(w) / w.squaredNorm();
    const bool parallel = (u - kappa * w).norm() <= 1e-9 * std::max(u.norm(), w.norm());
    if (!parallel || std::abs(kappa) < 1.0 - 1e-12) throw PreconditionError("direction not admissible", "u");
    c = std::clamp(1.0 / kappa, -1.0, 1.0);
  }
  const double unorm = b(u);
  if (unorm == 0.0 || std::abs(c) >= 1.0 - 1e-15) {
    // γ = A, or γ ≡ 0 when u = 0 = w.
    const int s = c < 0.0 ? -1 : 1;
    z.breakpoints = {lo, hi};
    z.signs = {s};
    z.coefficients = {unorm == 0.0 ? 0.0 : s * lo, unorm == 0.0 ? 0.0 : s * hi};
    z.anchor = z.coefficients[0] * u;
    return z;
  }

  const double p = 0.5 * (1.0 + c);
  const double T = 0.9 * 4.0 * eps / ((1.0 - c * c) * unorm);
  const double D = 0.5 * (1.0 - c * c) * T;
  require((hi - lo) / T * 2.0 < static_cast<double>(kMaxSegments),
          "zigzag would need more than 2e6 segments; increase eps", "eps");

  z.breakpoints.push_back(lo);
  z.coefficients.push_back(c * lo - 0.5 * D);
  for (std::size_t j = 0;; ++j) {
    const double start = lo + static_cast<double>(j) * T;
    const double base = c * start - 0.5 * D;
    const double mid = start + p * T;
    const double end = start + T;
    if (mid >= hi) {
      z.signs.push_back(1);
      z.breakpoints.push_back(hi);
      z.coefficients.push_back(base + (hi - start));
      break;
    }
    z.signs.push_back(1);
    z.breakpoints.push_back(mid);
    z.coefficients.push_back(base + p * T);
    if (end >= hi) {
      z.signs.push_back(-1);
      z.breakpoints.push_back(hi);
      z.coefficients.push_back(base + p * T - (hi - mid));
      break;
    }
    z.signs.push_back(-1);
    z.breakpoints.push_back(end);
    z.coefficients.push_back(c * end - 0.5 * D);
  }
  z.anchor = z.coefficients[0] * u;
  return z;
}

// ---------------------------------------------------------------------------
// Piecewise-affine maps

std::size_t PiecewiseAffineMap::Axis::segment_of(double t) const {
  const auto it = std::upper_bound(breaks.begin() + 1, breaks.end() - 1, t);
  return static_cast<std::size_t>(it - (breaks.begin() + 1));
}

Vec PiecewiseAffineMap::Axis::eval(double t) const {
  const std::size_t k = segment_of(t);
  return values[k] + slopes[static_cast<std::size_t>(slope_index[k])] * (t - breaks[k]);
}

PiecewiseAffineMap::PiecewiseAffineMap(Box domain, Mat basis, Vec offset, std::vector<Axis> axes, Norm a,
                                       Norm b)
    : domain_(std::move(domain)),
      basis_(std::move(basis)),
      offset_(std::move(offset)),
      axes_(std::move(axes)),
      a_(std::move(a)),
      b_(std::move(b)) {
  const int n = domain_.dim();
  const int m = static_cast<int>(offset_.size());
  require(basis_.rows() == n && basis_.cols() == n, "basis must be n x n", "basis");
  require(static_cast<int>(axes_.size()) == n, "one axis per domain dimension", "axes");
  require(a_.dim() == n && b_.dim() == m, "norm dimensions do not match the map", "norms");
  Eigen::FullPivLU<Mat> lu(basis_);
  require(lu.rank() == n, "basis must be invertible", "basis");
  basis_inv_ = lu.inverse();
  for (const auto& ax : axes_) {
    require(ax.breaks.size() >= 2, "every axis needs at least one segment", "axes");
    require(ax.slope_index.size() + 1 == ax.breaks.size() && ax.values.size() == ax.breaks.size(),
            "axis arrays have inconsistent lengths", "axes");
    for (std::size_t k = 0; k + 1 < ax.breaks.size(); ++k)
      require(ax.breaks[k] < ax.breaks[k + 1], "axis breakpoints must increase", "axes");
    for (int s : ax.slope_index)
      require(s >= 0 && s < static_cast<int>(ax.slopes.size()), "slope index out of range", "axes");
    for (const auto& v : ax.slopes) require(v.size() == m, "slope vectors must live in R^m", "axes");
    for (const auto& v : ax.values) require(v.size() == m, "axis values must live in R^m", "axes");
  }
  axis_aligned_ = basis_.isDiagonal(0.0);

  OperatorNormEvaluator eval(a_, b_);
  const std::size_t combos = combo_count();
  stats_.norms.resize(combos);
  stats_.vols.resize(combos);
  for (std::size_t i = 0; i < combos; ++i) {
    const Mat L = linear_part(combo(i));
    stats_.norms[i] = eval.upper(L);
    stats_.vols[i] = n <= m ? vol(L) : 0.0;
  }
}

Vec PiecewiseAffineMap::operator()(const Vec& x) const {
  require(x.size() == dim(), "point dimension does not match the map", "x");
  const Vec t = basis_inv_ * x;
  Vec y = offset_;
  for (int i = 0; i < dim(); ++i) y += axes_[static_cast<std::size_t>(i)].eval(t[i]);
  return y;
}

double PiecewiseAffineMap::cell_count() const {
  double c = 1.0;
  for (const auto& ax : axes_) c *= static_cast<double>(ax.segments());
  return c;
}

Mat PiecewiseAffineMap::linear_part(const std::vector<int>& slope_choice) const {
  Mat D(codim(), dim());
  for (int i = 0; i < dim(); ++i)
    D.col(i) = axes_[static_cast<std::size_t>(i)].slopes[static_cast<std::size_t>(slope_choice[static_cast<std::size_t>(i)])];
  return D * basis_inv_;
}

std::size_t PiecewiseAffineMap::combo_count() const {
  std::size_t c = 1;
  for (const auto& ax : axes_) c *= ax.slopes.size();
  return c;
}

std::vector<int> PiecewiseAffineMap::combo(std::size_t index) const {
  std::vector<int> out(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    out[i] = static_cast<int>(index % axes_[i].slopes.size());
    index /= axes_[i].slopes.size();
  }
  return out;
}

double PiecewiseAffineMap::exact_lipschitz() const {
  return *std::max_element(stats_.norms.begin(), stats_.norms.end());
}

PiecewiseAffineMap::Axis zigzag_axis(const ZigzagCurve& z) {
  PiecewiseAffineMap::Axis ax;
  ax.breaks = z.breakpoints;
  const bool has_up = std::find(z.signs.begin(), z.signs.end(), 1) != z.signs.end();
  const bool has_down = std::find(z.signs.begin(), z.signs.end(), -1) != z.signs.end();
  if (has_up) ax.slopes.push_back(z.direction);
  if (has_down) ax.slopes.push_back(-z.direction);
  ax.slope_index.reserve(z.signs.size());
  for (int s : z.signs) ax.slope_index.push_back((s == 1 || !has_up) ? 0 : 1);
  ax.values.reserve(z.coefficients.size());
  for (double c : z.coefficients) ax.values.push_back(c * z.direction);
  return ax;
}

std::pair<Vec, Vec> basis_range(const Mat& basis_inverse, const Box& box) {
  const int n = box.dim();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Vec corner(n);
    for (int k = 0; k < n; ++k) corner[k] = ((mask >> k) & 1u) ? box.hi[k] : box.lo[k];
    const Vec t = basis_inverse * corner;
    lo = lo.cwiseMin(t);
    hi = hi.cwiseMax(t);
  }
  return {lo, hi};
}

double PiecewiseAffineMap::cell_measure_in(const Vec& tlo, const Vec& thi, const Box& b) const {
  const int n = dim();
  if (axis_aligned_) {
    double v = 1.0;
    for (int k = 0; k < n; ++k) {
      const double p = basis_(k, k) * tlo[k], q = basis_(k, k) * thi[k];
      const double w = std::min(b.hi[k], std::max(p, q)) - std::max(b.lo[k], std::min(p, q));
      if (w <= 0.0) return 0.0;
      v *= w;
    }
    return v;
  }
  // Cheap classification by corners before clipping.
  bool all_inside = true;
  Vec cmin = Vec::Constant(n, std::numeric_limits<double>::infinity()), cmax = -cmin;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Vec t(n);
    for (int k = 0; k < n; ++k) t[k] = ((mask >> k) & 1u) ? thi[k] : tlo[k];
    const Vec x = basis_ * t;
    all_inside = all_inside && b.contains(x);
    cmin = cmin.cwiseMin(x);
    cmax = cmax.cwiseMax(x);
  }
  const double full = std::abs(basis_.determinant()) * (thi - tlo).prod();
  if (all_inside) return full;
  for (int k = 0; k < n; ++k)
    if (cmax[k] <= b.lo[k] || cmin[k] >= b.hi[k]) return 0.0;
  const auto [blo, bhi] = basis_range(basis_inv_, b);
  for (int k = 0; k < n; ++k)
    if (bhi[k] <= tlo[k] || blo[k] >= thi[k]) return 0.0;
  bool box_inside = true;
  for (int k = 0; k < n; ++k) box_inside = box_inside && blo[k] >= tlo[k] && bhi[k] <= thi[k];
  if (box_inside) return b.measure();
  std::vector<Halfspace> hs = parallelepiped_halfspaces(basis_, tlo, thi);
  for (auto& h : box_halfspaces(b)) hs.push_back(std::move(h));
  return std::min(full, polytope_volume(hs, n, b.center()));
}

void PiecewiseAffineMap::for_each_cell(
    const std::function<void(std::size_t combo, const Vec& tlo, const Vec& thi)>& fn) const {
  const int n = dim();
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  Vec tlo(n), thi(n);
  for (;;) {
    std::size_t combo = 0, stride = 1;
    for (int i = 0; i < n; ++i) {
      const auto& ax = axes_[static_cast<std::size_t>(i)];
      const std::size_t k = idx[static_cast<std::size_t>(i)];
      tlo[i] = ax.breaks[k];
      thi[i] = ax.breaks[k + 1];
      combo += static_cast<std::size_t>(ax.slope_index[k]) * stride;
      stride *= ax.slopes.size();
    }
    fn(combo, tlo, thi);
    int i = 0;
    for (; i < n; ++i) {
      auto& k = idx[static_cast<std::size_t>(i)];
      if (++k < axes_[static_cast<std::size_t>(i)].segments()) break;
      k = 0;
    }
    if (i == n) return;
  }
}

double PiecewiseAffineMap::integrate(const Region& E, const std::function<double(std::size_t)>& weight,
                                     double max_cells) const {
  std::vector<Box> parts;
  for (const auto& p : E.parts()) {
    Box q{p.lo.cwiseMax(domain_.lo), p.hi.cwiseMin(domain_.hi)};
    if ((q.hi.array() > q.lo.array()).all()) parts.push_back(std::move(q));
  }
  if (parts.empty()) return 0.0;
  const std::size_t combos = combo_count();
  double wmin = std::numeric_limits<double>::infinity(), wmax = -wmin;
  for (std::size_t c = 0; c < combos; ++c) {
    const double w = weight(c);
    wmin = std::min(wmin, w);
    wmax = std::max(wmax, w);
  }
  if (wmax - wmin <= 1e-12 * std::max(std::abs(wmax), std::abs(wmin))) {
    // Cells tile the domain, so a constant weight integrates to weight·H^n.
    double total = 0.0;
    for (const auto& q : parts) total += q.measure();
    return wmin * total;
  }
  require(cell_count() <= max_cells, "map has too many cells to integrate a non-constant weight", "g");
  std::vector<double> w(combos);
  for (std::size_t c = 0; c < combos; ++c) w[c] = weight(c);
  double total = 0.0;
  for_each_cell([&](std::size_t combo, const Vec& tlo, const Vec& thi) {
    if (w[combo] == 0.0) return;
    for (const auto& q : parts) total += w[combo] * cell_measure_in(tlo, thi, q);
  });
  return total;
}

}  // namespace inflab
