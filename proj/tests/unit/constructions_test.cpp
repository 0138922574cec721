#include "inflab/constructions.hpp"
#include "inflab/measure.hpp"
#include "inflab/random.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

using namespace inflab;

namespace {

double largest_sv(const Mat& M) { return Eigen::JacobiSVD<Mat>(M).singularValues()[0]; }

Mat embed(int m, int n, double s) {
  Mat A = Mat::Zero(m, n);
  for (int i = 0; i < n; ++i) A(i, i) = s;
  return A;
}

Box square(double h) { return Box::cube(2, h); }

}  // namespace

TEST_CASE("zigzag around zero stays within eps") {
  const ZigzagCurve z = zigzag_curve(Vec::Zero(2), Vec{{1.0, 0.0}}, 0.1, 0.0, 1.0, Norm::euclidean(2));
  CHECK(z.segments() > 1);
  for (int k = 0; k <= 1000; ++k) {
    const Vec p = z(k / 1000.0);
    CHECK(p.norm() <= 0.1);
    CHECK(p[1] == 0.0);
  }
}

TEST_CASE("zigzag with kappa one is a single segment") {
  const Vec w{{0.3, 0.4}};
  const ZigzagCurve z = zigzag_curve(w, w, 0.05, -1.0, 1.0, Norm::euclidean(2));
  CHECK(z.segments() == 1);
  CHECK((z(0.7) - 0.7 * w).norm() <= 1e-15);
}

TEST_CASE("zigzag approximates a slow line") {
  const Vec w{{0.5, 0.0}};
  const ZigzagCurve z = zigzag_curve(w, Vec{{1.0, 0.0}}, 0.05, 0.0, 1.0, Norm::euclidean(2));
  double worst = 0.0;
  for (int k = 0; k <= 10000; ++k) worst = std::max(worst, (z(k / 1e4) - (k / 1e4) * w).norm());
  CHECK(worst < 0.05);
  for (int s : z.signs) CHECK(std::abs(s) == 1);
}

TEST_CASE("zigzag rejects shorter or skew directions") {
  const Norm b = Norm::euclidean(2);
  CHECK_THROWS_AS(zigzag_curve(Vec{{1.0, 0.0}}, Vec{{0.5, 0.0}}, 0.1, 0.0, 1.0, b), PreconditionError);
  CHECK_THROWS_AS(zigzag_curve(Vec{{1.0, 0.0}}, Vec{{1.0, 1.0}}, 0.1, 0.0, 1.0, b), PreconditionError);
}

TEST_CASE("affine inflation of the identity is the identity") {
  const Norm e2 = Norm::euclidean(2);
  const Mat A = Mat::Identity(2, 2);
  const InflationCertificate c = euclidean_inflation(LinearMap(A, e2, e2));
  const PiecewiseAffineMap g = inflate_affine(A, Vec::Zero(2), c, square(1.0), 0.1, e2, e2);
  CHECK(g.cell_count() == 1.0);
  CHECK((g(Vec{{0.3, -0.2}}) - Vec{{0.3, -0.2}}).norm() <= 1e-15);
}

TEST_CASE("affine inflation of a contraction has exact cell bounds") {
  const Norm a = Norm::euclidean(2), b = Norm::euclidean(3);
  const Mat A = embed(3, 2, 0.5);
  const Mat Ahat = A / 0.5;
  const InflationCertificate c = euclidean_inflation(LinearMap(Ahat, a, b));
  for (double eps : {0.1, 10.0}) {
    const PiecewiseAffineMap g = inflate_affine(A, Vec::Zero(3), c, square(1.0), eps, a, b, 0.5);
    // Per-cell recomputation from the slope tables.
    for (std::size_t k = 0; k < g.combo_count(); ++k) {
      const Mat L = g.linear_part(g.combo(k));
      CHECK(largest_sv(L) <= 0.5 + 1e-12);
      CHECK(vol(L) >= 0.25 - 1e-12);
    }
    CHECK(g.exact_lipschitz() <= 0.5 + 1e-12);
    Rng rng(1);
    for (int s = 0; s < 2000; ++s) {
      const Vec x = rng.in_box(square(1.0));
      CHECK((g(x) - A * x).norm() < eps);
    }
  }
}

TEST_CASE("affine inflation requires a verified certificate") {
  const Norm e2 = Norm::euclidean(2);
  InflationCertificate c = euclidean_inflation(LinearMap(Mat::Identity(2, 2), e2, e2));
  c.verified = false;
  CHECK_THROWS(inflate_affine(Mat::Identity(2, 2), Vec::Zero(2), c, square(1.0), 0.1, e2, e2));
  c.verified = true;
  CHECK_THROWS_AS(inflate_affine(Mat::Identity(2, 2), Vec::Zero(2), c, square(1.0), 0.0, e2, e2), PreconditionError);
}

TEST_CASE("gluing a patch equal to the base map returns the base map") {
  const Norm e2 = Norm::euclidean(2);
  PatchSpec spec;
  spec.a = spec.b = e2;
  spec.base = LipschitzMap::affine(Mat::Identity(2, 2) * 0.5, Vec::Zero(2), e2, e2);
  spec.delta = 0.1;
  Patch p;
  p.box = Box::cube(2, 0.5);
  p.rho = 0.5;
  p.map = spec.base.eval;
  spec.patches.push_back(p);
  const GluedMap g = glue_patches(spec, 0.5);
  Rng rng(2);
  for (int s = 0; s < 500; ++s) {
    const Vec x = rng.in_box(Box::cube(2, 2.0));
    CHECK((g(x) - 0.5 * x).norm() <= 1e-15);
  }
}

TEST_CASE("bump patch has slope two delta") {
  // f = 0, S = {0}, ρ = 1, g₁ ≡ c with |c| = δ: g(x) = max(1/2 − |x|, 0)/(1/2)·c.
  const Norm e2 = Norm::euclidean(2);
  const double delta = 0.1;
  PatchSpec spec;
  spec.a = spec.b = e2;
  spec.base = LipschitzMap::zero(2, 2);
  spec.delta = delta;
  Patch p;
  p.points = {Vec::Zero(2)};
  p.rho = 1.0;
  const Vec c{{delta, 0.0}};
  p.map = [c](const Vec&) { return c; };
  spec.patches.push_back(p);
  const GluedMap g = glue_patches(spec, 0.0);
  CHECK(g.lipschitz_bound() == doctest::Approx(4.0 * delta));
  Rng rng(3);
  double worst = 0.0;
  for (int s = 0; s < 5000; ++s) {
    const Vec x = rng.in_box(Box::cube(2, 1.0));
    const Vec y = x + 1e-3 * rng.unit_vec(2);
    const double chi = std::max(0.5 - x.norm(), 0.0) / 0.5;
    CHECK((g(x) - chi * c).norm() <= 1e-15);
    worst = std::max(worst, (g(x) - g(y)).norm() / (x - y).norm());
  }
  CHECK(worst <= 2.0 * delta + 1e-9);
  CHECK(worst >= 1.9 * delta);
}

TEST_CASE("two distant patches glue independently") {
  const Norm e2 = Norm::euclidean(2);
  const double delta = 0.05;
  PatchSpec spec;
  spec.a = spec.b = e2;
  spec.base = LipschitzMap::affine(Mat::Identity(2, 2) * 0.5, Vec::Zero(2), e2, e2);
  spec.delta = delta;
  for (double cx : {-2.0, 2.0}) {
    Patch p;
    p.box = Box{Vec{{cx - 0.5, -0.5}}, Vec{{cx + 0.5, 0.5}}};
    p.rho = 0.5;
    const double shift = cx > 0 ? delta * 0.5 : -delta * 0.5;
    p.map = [shift](const Vec& x) { return Vec(0.5 * x + Vec{{shift, 0.0}}); };
    spec.patches.push_back(p);
  }
  const GluedMap g = glue_patches(spec, 0.5);
  Rng rng(4);
  double worst = 0.0, dist = 0.0;
  for (int s = 0; s < 20000; ++s) {
    const Vec x = rng.in_box(Box{Vec{{-3.5, -1.5}}, Vec{{3.5, 1.5}}});
    const Vec y = x + 1e-2 * rng.unit_vec(2) * rng.uniform();
    worst = std::max(worst, (g(x) - g(y)).norm() / (x - y).norm());
    dist = std::max(dist, (g(x) - 0.5 * x).norm());
  }
  CHECK(worst <= g.lipschitz_bound() + 1e-9);
  CHECK(dist < delta);
  CHECK((g(Vec{{2.2, 0.1}}) - (0.5 * Vec{{2.2, 0.1}} + Vec{{delta * 0.5, 0.0}})).norm() <= 1e-15);
  CHECK((g(Vec{{0.0, 0.0}})).norm() == 0.0);
}

TEST_CASE("overlapping or distant patches are rejected") {
  const Norm e2 = Norm::euclidean(2);
  PatchSpec spec;
  spec.a = spec.b = e2;
  spec.base = LipschitzMap::zero(2, 2);
  spec.delta = 0.1;
  Patch p;
  p.points = {Vec::Zero(2)};
  p.rho = 1.0;
  p.map = [](const Vec&) { return Vec(Vec::Zero(2)); };
  spec.patches = {p, p};
  spec.patches[1].points = {Vec{{1.5, 0.0}}};
  CHECK_THROWS_AS(glue_patches(spec, 0.0), PreconditionError);

  spec.patches = {p};
  spec.patches[0].map = [](const Vec&) { return Vec(Vec::Constant(2, 0.2)); };
  CHECK_THROWS_AS(glue_patches(spec, 0.0), PreconditionError);
}

TEST_CASE("inflating the zero map on the square") {
  const Region E = Region::box(square(1.0));
  const auto res = inflate_on_set(LipschitzMap::zero(2, 3), E, Norm::euclidean(2), Norm::euclidean(3), 1.0, 0.1, 0.9, 1);
  CHECK(res.report.achieved);
  CHECK(res.report.integral >= 3.6);
  CHECK(res.report.lip_cells <= 1.0 + 1e-9);
  CHECK(res.report.sup_distance <= 0.1);
}

TEST_CASE("inflating a contraction keeps it close") {
  const Region E = Region::box(square(1.0));
  const Norm a = Norm::euclidean(2), b = Norm::euclidean(3);
  const LipschitzMap f = LipschitzMap::affine(embed(3, 2, 0.5), Vec::Zero(3), a, b);
  const auto res = inflate_on_set(f, E, a, b, 1.0, 0.1, 0.9, 2);
  CHECK(res.report.integral >= 3.6);
  Rng rng(5);
  for (int s = 0; s < 10000; ++s) {
    const Vec x = rng.in_box(square(1.0));
    CHECK(b((*res.map)(x) - f(x)) <= 0.1);
  }
}

TEST_CASE("inflating a non-affine map uses several patches") {
  const Norm a = Norm::euclidean(2), b = Norm::euclidean(3);
  Mat M = Mat::Zero(3, 2);
  M(0, 0) = 0.4;
  M(1, 1) = 0.4;
  M(2, 0) = 0.2;
  const LipschitzMap f = LipschitzMap::abs_linear(M, a, b);
  const auto res = inflate_on_set(f, Region::box(square(1.0)), a, b, 1.0, 0.1, 0.9, 3);
  CHECK(res.report.patches > 1);
  CHECK(res.report.lip_cells <= 1.0 + 1e-9);
  CHECK(res.report.sup_distance <= 0.1);
}

TEST_CASE("null sets are inflated trivially") {
  const Region E = Region::grid_mask(square(1.0), {2, 2}, {false, false, false, false});
  const auto res = inflate_on_set(LipschitzMap::zero(2, 3), E, Norm::euclidean(2), Norm::euclidean(3), 1.0, 0.1, 0.9, 1);
  CHECK(res.report.trivial);
  CHECK(res.report.integral == 0.0);
  CHECK(res.report.achieved);
}

TEST_CASE("expanding maps are rejected") {
  const Norm e2 = Norm::euclidean(2);
  const LipschitzMap f = LipschitzMap::affine(Mat::Identity(2, 2) * 1.5, Vec::Zero(2), e2, e2);
  CHECK_THROWS_AS(inflate_on_set(f, Region::box(square(1.0)), e2, e2, 1.0, 0.1, 0.9, 1), PreconditionError);
}

TEST_CASE("margins") {
  CHECK(lsc_margin(Mat::Identity(2, 2), 0.5) == doctest::Approx((1.0 - std::sqrt(0.5)) / 2.0).epsilon(1e-12));
  CHECK(lsc_margin(Mat::Identity(2, 2) * 2.0, 0.5) == doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-12));
  CHECK(balls_epsilon(2.0, 0.1, 5) == doctest::Approx(0.01));
  CHECK_THROWS_AS(lsc_margin(Mat::Identity(2, 2), 0.2), PreconditionError);
}
