#include "inflab/common.hpp"
#include "inflab/random.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace inflab {
namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int threads) { g_threads.store(std::max(0, threads)); }

int thread_count() {
  const int t = g_threads.load();
  if (t > 0) return t;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Mat random_rotation(Rng& rng, int m, double angle) {
  Mat R = Mat::Identity(m, m);
  if (m < 2 || angle == 0.0) return R;
  const Mat Q = rng.orthonormal(m, 2);
  const Vec p = Q.col(0), q = Q.col(1);
  // Rotation by `angle` in span{p, q}, identity on the complement.
  const double c = std::cos(angle), s = std::sin(angle);
  R += (c - 1.0) * (p * p.transpose() + q * q.transpose()) + s * (q * p.transpose() - p * q.transpose());
  return R;
}

}  // namespace inflab
