#include "inflab/region.hpp"

#include "inflab/random.hpp"

#include <algorithm>
#include <cmath>

namespace inflab {

namespace {

double overlap(const Box& a, const Box& b) {
  double v = 1.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double w = std::min(a.hi[i], b.hi[i]) - std::max(a.lo[i], b.lo[i]);
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

void check_box(const Box& b, const std::string& field) {
  require(b.lo.size() == b.hi.size() && b.dim() >= 1, "box bounds must have equal positive dimension", field);
  require(b.lo.allFinite() && b.hi.allFinite(), "box bounds must be finite", field);
  require((b.lo.array() <= b.hi.array()).all(), "box needs lo <= hi on every axis", field);
}

}  // namespace

Region Region::box(Box b) {
  check_box(b, "E");
  Region r;
  r.bounds_ = b;
  r.parts_.push_back(std::move(b));
  return r;
}

Region Region::grid_mask(Box bounds, std::vector<int> counts, std::vector<bool> mask) {
  check_box(bounds, "E/bounds");
  const int n = bounds.dim();
  require(static_cast<int>(counts.size()) == n, "grid mask needs one count per axis", "E/counts");
  std::size_t total = 1;
  for (int c : counts) {
    require(c >= 1, "grid counts must be positive", "E/counts");
    total *= static_cast<std::size_t>(c);
  }
  require(mask.size() == total, "grid mask size must equal the product of counts", "E/mask");
  Region r;
  r.bounds_ = bounds;
  const Vec h = (bounds.hi - bounds.lo).cwiseQuotient(
      Eigen::Map<const Eigen::VectorXi>(counts.data(), n).cast<double>());
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!mask[idx]) continue;
    Box cell{Vec(n), Vec(n)};
    std::size_t rest = idx;
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<double>(rest % static_cast<std::size_t>(counts[k]));
      rest /= static_cast<std::size_t>(counts[k]);
      cell.lo[k] = bounds.lo[k] + i * h[k];
      cell.hi[k] = (i + 1 == counts[k]) ? bounds.hi[k] : bounds.lo[k] + (i + 1) * h[k];
    }
    r.parts_.push_back(std::move(cell));
  }
  r.counts_ = std::move(counts);
  r.mask_ = std::move(mask);
  return r;
}

double Region::measure() const {
  double total = 0.0;
  for (const auto& p : parts_) total += p.measure();
  return total;
}

double Region::measure_in(const Box& b) const {
  double total = 0.0;
  for (const auto& p : parts_) total += overlap(p, b);
  return total;
}

Region Region::clipped(const Box& b) const {
  Region r;
  r.bounds_ = Box{bounds_.lo.cwiseMax(b.lo), bounds_.hi.cwiseMin(b.hi)};
  r.bounds_.hi = r.bounds_.hi.cwiseMax(r.bounds_.lo);
  for (const auto& p : parts_) {
    Box q{p.lo.cwiseMax(b.lo), p.hi.cwiseMin(b.hi)};
    if ((q.hi.array() > q.lo.array()).all()) r.parts_.push_back(std::move(q));
  }
  return r;
}

bool Region::contains(const Vec& x) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const Box& p) { return p.contains(x); });
}

Vec Region::sample(Rng& rng) const {
  const double total = measure();
  require(total > 0.0, "cannot sample from a region of measure zero", "E");
  double pick = rng.uniform() * total;
  for (const auto& p : parts_) {
    pick -= p.measure();
    if (pick <= 0.0) return rng.in_box(p);
  }
  return rng.in_box(parts_.back());
}

LipschitzMap LipschitzMap::affine(Mat L, Vec c, double lipschitz) {
  require(c.size() == L.rows(), "affine offset must match the codomain dimension", "f/offset");
  LipschitzMap f;
  f.n = static_cast<int>(L.cols());
  f.m = static_cast<int>(L.rows());
  f.lipschitz = lipschitz;
  f.eval = [L, c](const Vec& x) -> Vec { return L * x + c; };
  f.linear = std::move(L);
  f.offset = std::move(c);
  f.description = "affine";
  return f;
}

LipschitzMap LipschitzMap::affine(Mat L, Vec c, const Norm& a, const Norm& b) {
  const double lip = OperatorNormEvaluator(a, b).upper(L);
  return affine(std::move(L), std::move(c), lip);
}

LipschitzMap LipschitzMap::zero(int n, int m) {
  LipschitzMap f = affine(Mat::Zero(m, n), Vec::Zero(m), 0.0);
  f.description = "zero";
  return f;
}

LipschitzMap LipschitzMap::abs_linear(Mat M, const Norm& a, const Norm& b) {
  const int n = static_cast<int>(M.cols());
  OperatorNormEvaluator eval(a, b);
  double lip = 0.0;
  for (std::uint32_t j = 0; j < (1u << n); ++j) {
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = ((j >> i) & 1u) ? -1.0 : 1.0;
    lip = std::max(lip, eval.upper(M * s.asDiagonal()));
  }
  LipschitzMap f;
  f.n = n;
  f.m = static_cast<int>(M.rows());
  f.lipschitz = lip;
  f.eval = [M](const Vec& x) -> Vec { return M * x.cwiseAbs(); };
  f.description = "abs_linear";
  return f;
}

LipschitzMap LipschitzMap::sine(Mat F, double scale, const Norm& a, const Norm& b) {
  const int n = static_cast<int>(F.cols());
  const int m = static_cast<int>(F.rows());
  const double to_inf = OperatorNormEvaluator(a, Norm::lp(m, Norm::kInfinity)).upper(F);
  const double inf_to_b = OperatorNormEvaluator(Norm::lp(m, Norm::kInfinity), b).upper(Mat::Identity(m, m));
  LipschitzMap f;
  f.n = n;
  f.m = m;
  f.lipschitz = std::abs(scale) * to_inf * inf_to_b;
  f.eval = [F, scale](const Vec& x) -> Vec { return scale * (F * x).array().sin().matrix(); };
  f.description = "sine";
  return f;
}

LipschitzMap LipschitzMap::scaled(double factor) const {
  LipschitzMap f = *this;
  f.lipschitz = lipschitz * std::abs(factor);
  auto inner = eval;
  f.eval = [inner, factor](const Vec& x) -> Vec { return factor * inner(x); };
  if (linear) f.linear = factor * *linear;
  if (offset) f.offset = factor * *offset;
  return f;
}

}  // namespace inflab
