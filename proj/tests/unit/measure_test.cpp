#include "inflab/measure.hpp"

#include <doctest.h>

#include <cmath>

using namespace inflab;

namespace {

// Axis i traces t ↦ Σ_k slope_k·(segment length) with the given per-segment slopes.
PiecewiseAffineMap::Axis axis(std::vector<double> breaks, std::vector<Vec> slopes, std::vector<int> index) {
  PiecewiseAffineMap::Axis ax;
  ax.breaks = std::move(breaks);
  ax.slopes = std::move(slopes);
  ax.slope_index = std::move(index);
  ax.values.push_back(ax.breaks[0] * ax.slopes[static_cast<std::size_t>(ax.slope_index[0])]);
  for (std::size_t k = 0; k < ax.slope_index.size(); ++k)
    ax.values.push_back(ax.values.back() +
                        (ax.breaks[k + 1] - ax.breaks[k]) * ax.slopes[static_cast<std::size_t>(ax.slope_index[k])]);
  return ax;
}

PiecewiseAffineMap linear_pam(const Mat& L, const Box& E) {
  std::vector<PiecewiseAffineMap::Axis> axes;
  for (int i = 0; i < E.dim(); ++i) axes.push_back(axis({E.lo[i], E.hi[i]}, {L.col(i)}, {0}));
  return PiecewiseAffineMap(E, Mat::Identity(E.dim(), E.dim()), Vec::Zero(L.rows()), std::move(axes),
                            Norm::euclidean(E.dim()), Norm::euclidean(static_cast<int>(L.rows())));
}

Mat rotation3() {
  return (Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

TEST_CASE("jacobian integral of simple maps") {
  const Box unit{Vec::Zero(2), Vec::Ones(2)};
  CHECK(jacobian_integral(linear_pam(Mat::Identity(2, 2), unit), Region::box(unit)).value == doctest::Approx(1.0));
  Mat half = Mat::Identity(2, 2);
  half(1, 1) = 0.5;
  const Box sq = Box::cube(2, 1.0);
  CHECK(jacobian_integral(linear_pam(half, sq), Region::box(sq)).value == doctest::Approx(2.0));
}

TEST_CASE("superlevel fractions") {
  const Box sq = Box::cube(2, 1.0);
  CHECK(superlevel_fraction(linear_pam(Mat::Identity(2, 2), sq), Region::box(sq), 0.5).value == 1.0);
  CHECK(superlevel_fraction(linear_pam(Mat::Zero(2, 2), sq), Region::box(sq), 0.01).value == 0.0);
  // Axis 0 has slope e₀ on [−1, 0] and 0 on [0, 1]: vol is 1 on the left half, 0 on the right.
  std::vector<PiecewiseAffineMap::Axis> axes;
  axes.push_back(axis({-1.0, 0.0, 1.0}, {Vec{{1.0, 0.0}}, Vec{{0.0, 0.0}}}, {0, 1}));
  axes.push_back(axis({-1.0, 1.0}, {Vec{{0.0, 1.0}}}, {0}));
  const PiecewiseAffineMap g(sq, Mat::Identity(2, 2), Vec::Zero(2), std::move(axes), Norm::euclidean(2),
                             Norm::euclidean(2));
  CHECK(superlevel_fraction(g, Region::box(sq), 0.5).value == doctest::Approx(0.5));
  CHECK(jacobian_integral(g, Region::box(sq)).value == doctest::Approx(2.0));
}

TEST_CASE("box counting calibration cases") {
  const Vec q{{std::cos(0.3), std::sin(0.3)}};
  const MeasureReport seg =
      boxcount_image_measure([q](const Vec& x) { return Vec(x[0] * q); }, Region::box(Box{Vec::Zero(1), Vec::Ones(1)}), 2, 1e-3);
  CHECK(seg.value == doctest::Approx(1.0).epsilon(0.02));
  REQUIRE(seg.error_bound);

  const Box sq = Box::cube(2, 1.0);
  const MeasureReport rot = boxcount_image_measure(linear_pam(rotation3().leftCols(2), sq), Region::box(sq), 1e-2);
  CHECK(rot.value == doctest::Approx(4.0).epsilon(0.02));

  const MeasureReport flat = boxcount_image_measure([](const Vec&) { return Vec(Vec::Constant(3, 0.3)); },
                                                    Region::box(Box::cube(2, 0.5)), 3, 1e-2);
  CHECK(flat.value == 0.0);
}

TEST_CASE("box counting agrees between mesh paths") {
  const Box sq = Box::cube(2, 1.0);
  const Mat Q = rotation3().leftCols(2);
  const MeasureReport a = boxcount_image_measure(linear_pam(Q, sq), Region::box(sq), 2e-2);
  const MeasureReport b = boxcount_image_measure([Q](const Vec& x) { return Vec(Q * x); }, Region::box(sq), 3, 2e-2);
  CHECK(a.value == doctest::Approx(b.value).epsilon(0.03));
}

TEST_CASE("box counting rejects unsupported dimensions") {
  const auto g = [](const Vec& x) { return Vec(Vec::Zero(5) + Vec::Constant(5, x[0])); };
  CHECK_THROWS_AS(boxcount_image_measure(g, Region::box(Box::cube(2, 1.0)), 5, 1e-2), PreconditionError);
  CHECK_THROWS_AS(boxcount_image_measure(g, Region::box(Box::cube(3, 1.0)), 3, 1e-2), PreconditionError);
  CHECK_THROWS_AS(boxcount_image_measure(g, Region::box(Box::cube(2, 1.0)), 3, 0.0), PreconditionError);
}

TEST_CASE("coverage of the disc") {
  const auto id = [](const Vec& x) { return x; };
  CHECK(coverage_check(id, 2, 2, 1.0, std::sqrt(0.5), 1.0 / 200).value == 1.0);
  const auto half = [](const Vec& x) { return Vec(0.5 * x); };
  const double part = coverage_check(half, 2, 2, 1.0, std::sqrt(0.5), 1.0 / 200).value;
  CHECK(part < 0.6);
  CHECK(part > 0.4);
}

TEST_CASE("sampled lipschitz constant of a scaling") {
  const auto f = [](const Vec& x) { return Vec(0.5 * x); };
  const MeasureReport r = estimate_lipschitz(f, Region::box(Box::cube(2, 1.0)), Norm::euclidean(2), Norm::euclidean(2), 2000, 1);
  CHECK(r.value <= 0.5 + 1e-12);
  CHECK(r.value >= 0.5 - 1e-9);
  const Box sq = Box::cube(2, 1.0);
  const MeasureReport p = estimate_lipschitz(linear_pam(Mat::Identity(2, 2) * 0.5, sq), Region::box(sq), 500, 2);
  REQUIRE(p.exact);
  CHECK(*p.exact == doctest::Approx(0.5));
  CHECK(p.value <= *p.exact + 1e-12);
}

TEST_CASE("map specs build the declared maps") {
  const Norm a = Norm::euclidean(2), b = Norm::euclidean(2);
  MapSpec lin{MapKind::linear, Mat::Identity(2, 2) * 0.5, Vec{{1.0, 0.0}}, 1.0};
  const LipschitzMap f = make_map(lin, 2, 2, a, b);
  CHECK(f(Vec{{2.0, 2.0}}) == Vec{{2.0, 1.0}});
  CHECK(f.lipschitz == doctest::Approx(0.5));
  MapSpec absl{MapKind::abs_linear, Mat::Identity(2, 2) * 0.5, Vec(), 1.0};
  CHECK(make_map(absl, 2, 2, a, b)(Vec{{-2.0, 2.0}}) == Vec{{1.0, 1.0}});
  MapSpec bad{MapKind::linear, Mat::Identity(3, 3), Vec(), 1.0};
  CHECK_THROWS_AS(make_map(bad, 2, 2, a, b), PreconditionError);
}

TEST_CASE("small positive experiment") {
  PositiveConfig c;
  c.box_size = 0.0;
  c.lipschitz_pairs = 2000;
  c.eps = {0.2, 0.1};
  const PositiveReport r = run_positive_experiment(c, 1);
  REQUIRE(r.records.size() == 2);
  CHECK(r.all_achieved);
  CHECK(r.distance_ok);
  CHECK(r.lipschitz_ok);
  CHECK_FALSE(r.boxcount_soft_check);
  for (const auto& rec : r.records) CHECK(rec.superlevel_fraction >= 0.9);
}

TEST_CASE("small negative experiment") {
  NegativeConfig c;
  c.eps = {0.5, 0.25};
  c.restarts = 3;
  c.iterations = 50;
  const NegativeReport r = run_negative_experiment(c, 2);
  CHECK(r.mv == 0.0);
  CHECK(r.threshold == doctest::Approx(0.01));
  REQUIRE(r.records.size() == 2);
  for (const auto& rec : r.records) {
    CHECK(rec.fraction >= 0.0);
    CHECK(rec.fraction <= 1.0);
    CHECK(rec.restart_fractions.size() == 3);
    CHECK(rec.lip_exact <= 1.0 + 1e-9);
    CHECK(rec.sup_distance <= rec.eps);
    REQUIRE(rec.control_fraction);
    CHECK(*rec.control_fraction >= 0.8);
  }
  CHECK(r.control_high.value_or(false));
}

TEST_CASE("negative experiment validates its inputs") {
  NegativeConfig c;
  c.u = Vec{{0.5, 0.0}};
  CHECK_THROWS_AS(run_negative_experiment(c, 1), PreconditionError);
  c = NegativeConfig{};
  c.r = 0.0;
  CHECK_THROWS_AS(run_negative_experiment(c, 1), PreconditionError);
}
