#pragma once

#include "inflab/common.hpp"

#include <vector>

namespace inflab {

/// { x : normal · x ≤ offset }
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

/// Lebesgue volume of a bounded polytope given in H-representation, by
/// Lasserre's facet recursion. Redundant and duplicated constraints are
/// allowed. `reference` should be a point near the polytope; it only
/// affects rounding.
double polytope_volume(const std::vector<Halfspace>& halfspaces, int dim,
                       const Vec& reference = Vec());

/// Facets { a · x ≤ 1 } of the convex hull of a centrally symmetric point set
/// spanning R^n. Brute force over n-subsets, intended for n ≤ 4 and a few
/// dozen points.
std::vector<Vec> hull_facets(const std::vector<Vec>& points);

/// Points of `points` that are vertices of their hull w.r.t. `facets`.
std::vector<Vec> hull_vertices(const std::vector<Vec>& points, const std::vector<Vec>& facets);

/// Halfspaces of the parallelepiped { basis · t : t ∈ [tlo, thi] }.
std::vector<Halfspace> parallelepiped_halfspaces(const Mat& basis, const Vec& tlo, const Vec& thi);

std::vector<Halfspace> box_halfspaces(const Box& box);

}  // namespace inflab
