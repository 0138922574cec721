#pragma once

#include "inflab/common.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace inflab {

/// splitmix64 finalizer; used to derive independent per-restart / per-cell seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Distribution code is written out here instead of using <random>'s
// distributions, whose output is implementation-defined; reports must be
// bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n) % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Mat normal_mat(int rows, int cols) {
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Vec unit_vec(int n) {
    Vec v = normal_vec(n);
    while (v.norm() == 0.0) v = normal_vec(n);
    return v / v.norm();
  }

  Vec in_box(const Box& box) {
    Vec x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
    return x;
  }

  /// Random m×k matrix with orthonormal columns (k ≤ m).
  Mat orthonormal(int m, int k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Mat Rng::orthonormal(int m, int k) {
  Eigen::HouseholderQR<Mat> qr(normal_mat(m, k));
  Mat q = qr.householderQ() * Mat::Identity(m, k);
  return q;
}

/// Rotation of R^m by angle `angle` in a random 2-plane.
Mat random_rotation(Rng& rng, int m, double angle);

}  // namespace inflab
