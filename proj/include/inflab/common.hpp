#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace inflab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an operation's preconditions or input schema are violated.
/// The CLI maps it to exit status 2.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what, std::string field = {})
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised when a numerical procedure cannot deliver its guarantee
/// (unverified certificate, failed local search). CLI exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned closed box in R^n.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double measure() const;
  bool contains(const Vec& x, double tol = 0.0) const;
  Vec center() const { return 0.5 * (lo + hi); }
  double diameter() const { return (hi - lo).norm(); }

  static Box cube(int dim, double half_width);
};

inline double Box::measure() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
  return v;
}

inline bool Box::contains(const Vec& x, double tol) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

inline Box Box::cube(int dim, double half_width) {
  return Box{Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
}

inline void require(bool ok, const std::string& what, const std::string& field = {}) {
  if (!ok) throw PreconditionError(what, field);
}

// Number of worker threads used by library-internal parallel loops.
// Results never depend on this value.
void set_thread_count(int threads);
int thread_count();

}  // namespace inflab
