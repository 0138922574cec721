#include "inflab/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace inflab {
namespace {

constexpr double kNormalTol = 1e-9;

// Normalizes to unit normals, drops trivial constraints, merges duplicates
// (keeping the tighter offset). Returns false when some constraint is
// infeasible on its own (0 · x ≤ negative).
bool normalize(std::vector<Halfspace>& hs) {
  std::vector<Halfspace> out;
  out.reserve(hs.size());
  for (auto& h : hs) {
    const double len = h.normal.norm();
    if (len < 1e-13) {
      if (h.offset < -1e-12) return false;
      continue;
    }
    Halfspace n{h.normal / len, h.offset / len};
    bool merged = false;
    for (auto& o : out) {
      if ((o.normal - n.normal).lpNorm<Eigen::Infinity>() < kNormalTol) {
        o.offset = std::min(o.offset, n.offset);
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(std::move(n));
  }
  hs = std::move(out);
  return true;
}

double volume_1d(const std::vector<Halfspace>& hs) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& h : hs) {
    const double a = h.normal[0];
    if (std::abs(a) < 1e-13) {
      if (h.offset < -1e-12) return 0.0;
      continue;
    }
    if (a > 0)
      hi = std::min(hi, h.offset / a);
    else
      lo = std::max(lo, h.offset / a);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw NumericalError("polytope_volume: unbounded polytope");
  return std::max(0.0, hi - lo);
}

double lasserre(std::vector<Halfspace> hs, int dim) {
  if (!normalize(hs)) return 0.0;
  if (dim == 1) return volume_1d(hs);
  double total = 0.0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const Vec& a = hs[i].normal;
    const double b = hs[i].offset;
    if (std::abs(b) < 1e-300) continue;  // facet through the origin contributes nothing
    Eigen::Index k = 0;
    a.cwiseAbs().maxCoeff(&k);
    const double ak = a[k];
    // Eliminate x_k = (b - Σ_{j≠k} a_j x_j) / a_k.
    std::vector<Halfspace> sub;
    sub.reserve(hs.size() - 1);
    for (std::size_t j = 0; j < hs.size(); ++j) {
      if (j == i) continue;
      const Vec& c = hs[j].normal;
      const double ck = c[k];
      Vec reduced(dim - 1);
      for (int p = 0, q = 0; p < dim; ++p) {
        if (p == k) continue;
        reduced[q++] = c[p] - ck * a[p] / ak;
      }
      sub.push_back({std::move(reduced), hs[j].offset - ck * b / ak});
    }
    const double projected = lasserre(std::move(sub), dim - 1);
    total += b * projected / std::abs(ak);
  }
  return total / dim;
}

}  // namespace

double polytope_volume(const std::vector<Halfspace>& halfspaces, int dim, const Vec& reference) {
  require(dim >= 1, "polytope_volume: dimension must be positive");
  std::vector<Halfspace> shifted = halfspaces;
  if (reference.size() == dim) {
    for (auto& h : shifted) h.offset -= h.normal.dot(reference);
  }
  return std::max(0.0, lasserre(std::move(shifted), dim));
}

std::vector<Vec> hull_facets(const std::vector<Vec>& points) {
  require(!points.empty(), "hull_facets: empty point set");
  const int n = static_cast<int>(points.front().size());
  std::vector<Vec> facets;
  std::vector<int> pick(n);
  Mat system(n, n);
  const Vec ones = Vec::Ones(n);

  std::function<void(int, int)> visit = [&](int depth, int start) {
    if (depth == n) {
      for (int r = 0; r < n; ++r) system.row(r) = points[pick[r]].transpose();
      Eigen::FullPivLU<Mat> lu(system);
      if (lu.rank() < n) return;
      Vec a = lu.solve(ones);
      if (!a.allFinite()) return;
      const double scale = std::max(1.0, a.lpNorm<Eigen::Infinity>());
      for (const auto& p : points)
        if (a.dot(p) > 1.0 + 1e-9 * scale) return;
      for (const auto& f : facets)
        if ((f - a).lpNorm<Eigen::Infinity>() < kNormalTol * scale) return;
      facets.push_back(std::move(a));
      return;
    }
    for (int i = start; i < static_cast<int>(points.size()); ++i) {
      pick[depth] = i;
      visit(depth + 1, i + 1);
    }
  };
  visit(0, 0);
  return facets;
}

std::vector<Vec> hull_vertices(const std::vector<Vec>& points, const std::vector<Vec>& facets) {
  std::vector<Vec> out;
  if (points.empty()) return out;
  const int n = static_cast<int>(points.front().size());
  for (const auto& p : points) {
    Mat active(0, n);
    for (const auto& f : facets) {
      if (std::abs(f.dot(p) - 1.0) < 1e-9) {
        active.conservativeResize(active.rows() + 1, Eigen::NoChange);
        active.row(active.rows() - 1) = f.transpose();
      }
    }
    if (active.rows() >= n && Eigen::FullPivLU<Mat>(active).rank() == n) {
      bool dup = false;
      for (const auto& q : out) dup = dup || (q - p).lpNorm<Eigen::Infinity>() < 1e-12;
      if (!dup) out.push_back(p);
    }
  }
  return out;
}

std::vector<Halfspace> parallelepiped_halfspaces(const Mat& basis, const Vec& tlo, const Vec& thi) {
  // t = basis⁻¹ x; rows of the inverse give the constraints.
  const Mat inv = basis.inverse();
  std::vector<Halfspace> hs;
  for (int i = 0; i < basis.cols(); ++i) {
    const Vec row = inv.row(i).transpose();
    hs.push_back({row, thi[i]});
    hs.push_back({-row, -tlo[i]});
  }
  return hs;
}

std::vector<Halfspace> box_halfspaces(const Box& box) {
  std::vector<Halfspace> hs;
  for (int i = 0; i < box.dim(); ++i) {
    Vec e = Vec::Zero(box.dim());
    e[i] = 1.0;
    hs.push_back({e, box.hi[i]});
    hs.push_back({-e, -box.lo[i]});
  }
  return hs;
}

}  // namespace inflab
