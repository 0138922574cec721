#include "inflab/norm.hpp"
#include "inflab/polytope.hpp"
#include "inflab/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace inflab;

namespace {

const double kInf = Norm::kInfinity;

// Closed form for the ℓp ball: 2ⁿ Γ(1 + 1/p)ⁿ / Γ(1 + n/p).
double lp_ball_volume(int n, double p) {
  if (std::isinf(p)) return std::pow(2.0, n);
  return std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), n) / std::tgamma(1.0 + n / p);
}

}  // namespace

TEST_CASE("lp gauges agree with the coordinate formula") {
  Rng rng(11);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    const Norm a = Norm::lp(3, p);
    for (int k = 0; k < 50; ++k) {
      const Vec x = rng.normal_vec(3);
      double expected = 0.0;
      if (std::isinf(p)) expected = x.cwiseAbs().maxCoeff();
      else expected = std::pow(x.cwiseAbs().array().pow(p).sum(), 1.0 / p);
      CHECK(a(x) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("dual of l1 is the maximum norm") {
  const Norm l1 = Norm::lp(2, 1.0);
  CHECK(l1.dual(Vec{{0.3, -2.0}}) == doctest::Approx(2.0));
  const Norm linf = Norm::lp(2, kInf);
  CHECK(linf.dual(Vec{{0.3, -2.0}}) == doctest::Approx(2.3));
}

TEST_CASE("polytopal gauge of the cross polytope is l1") {
  const Norm a = Norm::polytopal({Vec{{1.0, 0.0}}, Vec{{-1.0, 0.0}}, Vec{{0.0, 1.0}}, Vec{{0.0, -1.0}}});
  CHECK(a(Vec{{0.3, -0.4}}) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(a.kind() == NormKind::polytopal);
}

TEST_CASE("transformed norm has ball W(B)") {
  Mat W = Mat::Zero(2, 2);
  W(0, 0) = 2.0;
  W(1, 1) = 3.0;
  const Norm a = Norm::transformed(Norm::euclidean(2), W);
  CHECK(a(Vec{{2.0, 0.0}}) == doctest::Approx(1.0));
  CHECK(a(Vec{{0.0, 1.5}}) == doctest::Approx(0.5));
  CHECK(ball_volume(a).value == doctest::Approx(6.0 * std::numbers::pi).epsilon(1e-9));
}

TEST_CASE("ball volumes match closed forms") {
  for (int n = 1; n <= 4; ++n)
    for (double p : {1.0, 1.5, 2.0, 4.0, kInf}) {
      const BallVolume v = ball_volume(Norm::lp(n, p));
      CHECK(v.value == doctest::Approx(lp_ball_volume(n, p)).epsilon(1e-9));
    }
  // Regular hexagon with circumradius 1.
  std::vector<Vec> hex;
  for (int k = 0; k < 6; ++k) hex.push_back(Vec{{std::cos(k * std::numbers::pi / 3), std::sin(k * std::numbers::pi / 3)}});
  CHECK(ball_volume(Norm::polytopal(hex)).value == doctest::Approx(1.5 * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("vol_of_norm reference values") {
  for (int n = 1; n <= 4; ++n) CHECK(vol_of_norm(Norm::lp(n, kInf)) == 1.0);
  CHECK(std::abs(vol_of_norm(Norm::lp(2, 1.0)) - 2.0) <= 1e-9);
  CHECK(std::abs(vol_of_norm(Norm::euclidean(2)) - 4.0 / std::numbers::pi) <= 1e-6);
}

TEST_CASE("quasi Monte Carlo volume brackets the exact value") {
  for (const Norm& a : {Norm::lp(2, 1.5), Norm::euclidean(3), Norm::lp(3, 1.0)}) {
    const BallVolume exact = ball_volume(a);
    const BallVolume est = estimate_ball_volume(a);
    CHECK_FALSE(est.exact);
    CHECK(std::abs(est.value - exact.value) <= est.error_bound);
  }
}

TEST_CASE("extremal points of the square and the disc") {
  const Norm sq = Norm::lp(2, kInf);
  const ExtremalReport edge = analyze_extremal(sq, Vec{{1.0, 0.0}});
  CHECK(edge.is_boundary);
  CHECK_FALSE(edge.is_extremal);
  CHECK_FALSE(edge.witness_projection);
  const ExtremalReport corner = analyze_extremal(sq, Vec{{1.0, 1.0}});
  CHECK(corner.is_strongly_extremal);
  REQUIRE(corner.witness_projection);
  // P = u ⊗ x*: P u = u and ‖P‖ ≤ 1.
  const Mat& P = *corner.witness_projection;
  CHECK((P * Vec{{1.0, 1.0}} - Vec{{1.0, 1.0}}).norm() <= 1e-12);

  const ExtremalReport disc = analyze_extremal(Norm::euclidean(2), Vec{{0.6, 0.8}});
  CHECK(disc.is_strongly_extremal);

  const ExtremalReport mid = analyze_extremal(Norm::lp(2, 1.0), Vec{{0.5, 0.5}});
  CHECK(mid.is_boundary);
  CHECK_FALSE(mid.is_extremal);
  CHECK(analyze_extremal(Norm::lp(2, 1.0), Vec{{1.0, 0.0}}).is_strongly_extremal);
}

TEST_CASE("extremality needs a unit vector") {
  CHECK_THROWS_AS(analyze_extremal(Norm::euclidean(2), Vec{{0.5, 0.0}}), PreconditionError);
}

TEST_CASE("invalid norms are rejected") {
  CHECK_THROWS_AS(Norm::lp(2, 0.5), PreconditionError);
  CHECK_THROWS_AS(Norm::euclidean(0), PreconditionError);
  CHECK_THROWS_AS(Norm::polytopal({Vec{{1.0, 0.0}}, Vec{{-1.0, 0.0}}}), PreconditionError);
  CHECK_THROWS_AS(Norm::transformed(Norm::euclidean(2), Mat::Zero(2, 2)), PreconditionError);
}

TEST_CASE("polytope volume of a unit simplex and a parallelepiped") {
  std::vector<Halfspace> h;
  for (int i = 0; i < 3; ++i) h.push_back(Halfspace{-Vec::Unit(3, i), 0.0});
  h.push_back(Halfspace{Vec::Ones(3), 1.0});
  CHECK(polytope_volume(h, 3, Vec::Constant(3, 0.2)) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  Mat B(2, 2);
  B << 2.0, 1.0, 0.0, 1.0;
  CHECK(polytope_volume(parallelepiped_halfspaces(B, Vec::Zero(2), Vec::Ones(2)), 2) == doctest::Approx(2.0));
}
