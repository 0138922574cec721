#include "inflab/measure.hpp"

#include "inflab/parallel.hpp"
#include "inflab/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_set>

namespace inflab {

std::string to_string(MeasureQuantity q) {
  switch (q) {
    case MeasureQuantity::lipschitz_estimate: return "lipschitz_estimate";
    case MeasureQuantity::jacobian_integral: return "jacobian_integral";
    case MeasureQuantity::hausdorff_boxcount: return "hausdorff_boxcount";
    case MeasureQuantity::superlevel_fraction: return "superlevel_fraction";
    case MeasureQuantity::coverage_ratio: return "coverage_ratio";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Lipschitz estimates

MeasureReport estimate_lipschitz(const MapFn& f, const Region& domain, const Norm& a, const Norm& b, int pairs,
                                 std::uint64_t seed) {
  require(domain.measure() > 0.0, "domain is empty", "domain");
  require(pairs >= 1, "pairs must be positive", "pairs");
  require(a.dim() == domain.dim(), "domain norm dimension mismatch", "a");
  const int n = domain.dim();
  const double diam = a(domain.bounds().hi - domain.bounds().lo);
  constexpr int kChunk = 512;
  const int chunks = (pairs + kChunk - 1) / kChunk;
  std::vector<double> best(static_cast<std::size_t>(chunks), 0.0);
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng(mix_seed(seed, c));
    const int count = std::min(kChunk, pairs - static_cast<int>(c) * kChunk);
    for (int s = 0; s < count; ++s) {
      const Vec x = domain.sample(rng);
      Vec y;
      if (s % 2 == 0) {
        y = domain.sample(rng);
      } else {
        const Vec dir = rng.unit_vec(n);
        const double r = diam * std::pow(10.0, rng.uniform(-4.0, -1.0));
        y = x + (r / a(dir)) * dir;
        if (!domain.contains(y)) y = x - (r / a(dir)) * dir;
        if (!domain.contains(y)) continue;
      }
      const double d = a(x - y);
      if (d <= 0.0) continue;
      best[c] = std::max(best[c], b(f(x) - f(y)) / d);
    }
  });
  MeasureReport rep;
  rep.quantity = MeasureQuantity::lipschitz_estimate;
  rep.value = *std::max_element(best.begin(), best.end());
  rep.resolution = {{"pairs", static_cast<double>(pairs)}, {"min_separation", 1e-4 * diam}};
  rep.seed = seed;
  return rep;
}

MeasureReport estimate_lipschitz(const PiecewiseAffineMap& g, const Region& domain, int pairs, std::uint64_t seed) {
  MeasureReport rep = estimate_lipschitz([&g](const Vec& x) { return g(x); }, domain, g.domain_norm(),
                                         g.codomain_norm(), pairs, seed);
  rep.exact = g.exact_lipschitz();
  return rep;
}

// ---------------------------------------------------------------------------
// Exact integrals

MeasureReport jacobian_integral(const PiecewiseAffineMap& g, const Region& E) {
  require(E.dim() == g.dim(), "E dimension does not match the map", "E");
  const auto& vols = g.combo_stats().vols;
  MeasureReport rep;
  rep.quantity = MeasureQuantity::jacobian_integral;
  rep.value = g.integrate(E, [&](std::size_t c) { return vols[c]; });
  rep.resolution = {{"cells", g.cell_count()}};
  rep.error_bound = 0.0;
  return rep;
}

MeasureReport superlevel_fraction(const PiecewiseAffineMap& g, const Region& E, double r) {
  require(E.dim() == g.dim(), "E dimension does not match the map", "E");
  const auto& vols = g.combo_stats().vols;
  MeasureReport rep;
  rep.quantity = MeasureQuantity::superlevel_fraction;
  rep.resolution = {{"cells", g.cell_count()}, {"threshold", r}};
  rep.error_bound = 0.0;
  const double total = E.measure();
  if (total > 0.0) rep.value = g.integrate(E, [&](std::size_t c) { return vols[c] >= r ? 1.0 : 0.0; }) / total;
  return rep;
}

// ---------------------------------------------------------------------------
// Box counting

namespace {

using Point4 = std::array<double, 4>;

struct Simplex {
  int vertices = 0;  // 2 or 3
  Point4 p[3];
};

class BoxCounter {
 public:
  BoxCounter(int m, double side) : m_(m), side_(side), bits_(64 / m) {
    // Lattice offset by golden-ratio fractions of the side.
    for (int k = 0; k < m; ++k) shift_[static_cast<std::size_t>(k)] = side * std::fmod(0.381966 + 0.618034 * (k + 1), 1.0);
  }

  void add(const Simplex& s) {
    // Unit Plücker vector of the simplex's tangent space.
    std::array<double, 6> pl{};
    int count = 0;
    std::array<double, 4> weight{};
    if (s.vertices == 2) {
      for (int k = 0; k < m_; ++k) {
        pl[static_cast<std::size_t>(count++)] = s.p[1][static_cast<std::size_t>(k)] - s.p[0][static_cast<std::size_t>(k)];
        weight[static_cast<std::size_t>(k)] = std::abs(pl[static_cast<std::size_t>(k)]);
      }
    } else {
      for (int i = 0; i < m_; ++i)
        for (int j = i + 1; j < m_; ++j) {
          const auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
          const double e1i = s.p[1][I] - s.p[0][I], e1j = s.p[1][J] - s.p[0][J];
          const double e2i = s.p[2][I] - s.p[0][I], e2j = s.p[2][J] - s.p[0][J];
          const double v = e1i * e2j - e1j * e2i;
          pl[static_cast<std::size_t>(count++)] = v;
          weight[I] += std::abs(v);
          weight[J] += std::abs(v);
        }
    }
    double l1 = 0.0, l2 = 0.0, scale = 0.0;
    for (int k = 0; k < count; ++k) {
      l1 += std::abs(pl[static_cast<std::size_t>(k)]);
      l2 += pl[static_cast<std::size_t>(k)] * pl[static_cast<std::size_t>(k)];
    }
    for (int v = 0; v < s.vertices; ++v)
      for (int k = 0; k < m_; ++k) scale = std::max(scale, std::abs(s.p[v][static_cast<std::size_t>(k)]));
    l2 = std::sqrt(l2);
    if (l2 <= 1e-14 * std::pow(std::max(1.0, scale), s.vertices - 1)) return;
    w_ = static_cast<float>(l2 / l1);
    for (int k = 0; k < m_; ++k) order_[static_cast<std::size_t>(k)] = k;
    std::sort(order_.begin(), order_.begin() + m_, [&](int x, int y) {
      return weight[static_cast<std::size_t>(x)] > weight[static_cast<std::size_t>(y)] ||
             (weight[static_cast<std::size_t>(x)] == weight[static_cast<std::size_t>(y)] && x < y);
    });
    Poly poly;
    poly.size = s.vertices;
    for (int v = 0; v < s.vertices; ++v) poly.v[static_cast<std::size_t>(v)] = s.p[v];
    recurse(0, poly);
  }

  /// Marked boxes, one entry per box with the smallest weight seen.
  std::vector<std::pair<std::uint64_t, float>> take_marks() {
    std::sort(marks_.begin(), marks_.end());
    marks_.erase(std::unique(marks_.begin(), marks_.end(),
                             [](const auto& x, const auto& y) { return x.first == y.first; }),
                 marks_.end());
    return std::move(marks_);
  }

 private:
  struct Poly {
    int size = 0;
    std::array<Point4, 16> v;
  };

  static Poly clip(const Poly& in, std::size_t c, double bound, bool keep_above) {
    Poly out;
    if (in.size == 0) return out;
    auto inside = [&](const Point4& p) { return keep_above ? p[c] >= bound : p[c] <= bound; };
    for (int i = 0; i < in.size; ++i) {
      const Point4& cur = in.v[static_cast<std::size_t>(i)];
      const Point4& nxt = in.v[static_cast<std::size_t>((i + 1) % in.size)];
      const bool ci = inside(cur), ni = inside(nxt);
      if (ci) out.v[static_cast<std::size_t>(out.size++)] = cur;
      if (ci != ni) {
        const double t = (bound - cur[c]) / (nxt[c] - cur[c]);
        Point4 p{};
        for (std::size_t k = 0; k < 4; ++k) p[k] = cur[k] + t * (nxt[k] - cur[k]);
        p[c] = bound;
        out.v[static_cast<std::size_t>(out.size++)] = p;
      }
      if (out.size >= 15) break;
    }
    return out;
  }

  void recurse(int level, const Poly& poly) {
    if (level == m_) {
      std::uint64_t key = 0;
      const std::int64_t half = std::int64_t{1} << (bits_ - 1);
      for (int k = 0; k < m_; ++k) {
        const std::int64_t i = index_[static_cast<std::size_t>(k)];
        if (i <= -half || i >= half - 1)
          throw PreconditionError("image extends beyond the box-count grid range for this box size", "box_size");
        key = (bits_ == 64 ? 0 : key << bits_) | static_cast<std::uint64_t>(i + half);
      }
      marks_.emplace_back(key, w_);
      return;
    }
    const auto c = static_cast<std::size_t>(order_[static_cast<std::size_t>(level)]);
    double lo = poly.v[0][c], hi = lo;
    for (int i = 1; i < poly.size; ++i) {
      lo = std::min(lo, poly.v[static_cast<std::size_t>(i)][c]);
      hi = std::max(hi, poly.v[static_cast<std::size_t>(i)][c]);
    }
    const double off = shift_[c];
    const auto ilo = static_cast<std::int64_t>(std::floor((lo - off) / side_));
    const auto ihi = std::max(ilo, static_cast<std::int64_t>(std::ceil((hi - off) / side_)) - 1);
    if (ilo == ihi) {
      index_[c] = ilo;
      recurse(level + 1, poly);
      return;
    }
    for (std::int64_t i = ilo; i <= ihi; ++i) {
      const Poly q = clip(clip(poly, c, off + static_cast<double>(i) * side_, true), c,
                          off + static_cast<double>(i + 1) * side_, false);
      if (q.size == 0) continue;
      index_[c] = i;
      recurse(level + 1, q);
    }
  }

  int m_;
  double side_;
  int bits_;
  float w_ = 1.0f;
  std::array<int, 4> order_{};
  std::array<std::int64_t, 4> index_{};
  std::array<double, 4> shift_{};
  std::vector<std::pair<std::uint64_t, float>> marks_;
};

Point4 to_point(const Vec& y) {
  Point4 p{};
  for (int k = 0; k < y.size(); ++k) p[static_cast<std::size_t>(k)] = y[k];
  return p;
}

MeasureReport finish_boxcount(std::vector<std::vector<std::pair<std::uint64_t, float>>> batches, int n,
                              double side, double simplices) {
  std::vector<std::pair<std::uint64_t, float>> all;
  std::size_t total = 0;
  for (const auto& b : batches) total += b.size();
  all.reserve(total);
  for (auto& b : batches) {
    all.insert(all.end(), b.begin(), b.end());
    std::vector<std::pair<std::uint64_t, float>>().swap(b);
  }
  std::sort(all.begin(), all.end());
  double sum = 0.0;
  std::size_t boxes = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i > 0 && all[i].first == all[i - 1].first) continue;
    sum += all[i].second;
    ++boxes;
  }
  MeasureReport rep;
  rep.quantity = MeasureQuantity::hausdorff_boxcount;
  rep.value = sum * std::pow(side, n);
  rep.resolution = {{"box_size", side}, {"boxes", static_cast<double>(boxes)}, {"simplices", simplices}};
  rep.error_bound = (0.02 + 10.0 * n * side) * std::max(rep.value, std::pow(side, n));
  return rep;
}

void check_boxcount_dims(int n, int m, double side) {
  require(n >= 1 && n <= 2, "box counting supports n <= 2", "E");
  require(m >= n && m <= 4, "box counting supports n <= m <= 4", "m");
  require(side > 0.0 && std::isfinite(side), "box_size must be positive", "box_size");
}

}  // namespace

MeasureReport boxcount_image_measure(const MapFn& g, const Region& E, int m, double box_size) {
  const int n = E.dim();
  check_boxcount_dims(n, m, box_size);
  // Mesh each part of E on a grid of spacing ≈ 2·box_size; rows are processed in parallel blocks.
  const double mesh = 2.0 * box_size;
  struct Job {
    std::size_t part;
    long row_lo, row_hi;
  };
  std::vector<Job> jobs;
  std::vector<std::array<long, 2>> steps;
  for (std::size_t p = 0; p < E.parts().size(); ++p) {
    const Box& q = E.parts()[p];
    std::array<long, 2> st{1, 1};
    for (int k = 0; k < n; ++k)
      st[static_cast<std::size_t>(k)] = std::max(1L, static_cast<long>(std::ceil((q.hi[k] - q.lo[k]) / mesh)));
    steps.push_back(st);
    if (q.measure() <= 0.0) continue;
    const long rows = n == 1 ? 1 : st[1];
    constexpr long kBlock = 32;
    for (long r = 0; r < rows; r += kBlock) jobs.push_back({p, r, std::min(rows, r + kBlock)});
  }
  std::vector<std::vector<std::pair<std::uint64_t, float>>> batches(jobs.size());
  std::vector<double> counts(jobs.size(), 0.0);
  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const Box& q = E.parts()[job.part];
    const auto st = steps[job.part];
    BoxCounter counter(m, box_size);
    auto at = [&](long i0, long i1) {
      Vec x(n);
      x[0] = i0 == st[0] ? q.hi[0] : q.lo[0] + (q.hi[0] - q.lo[0]) * static_cast<double>(i0) / static_cast<double>(st[0]);
      if (n == 2)
        x[1] = i1 == st[1] ? q.hi[1] : q.lo[1] + (q.hi[1] - q.lo[1]) * static_cast<double>(i1) / static_cast<double>(st[1]);
      const Vec y = g(x);
      require(y.size() == m, "map output dimension does not match m", "m");
      return to_point(y);
    };
    if (n == 1) {
      Point4 prev = at(0, 0);
      for (long i = 1; i <= st[0]; ++i) {
        Simplex s;
        s.vertices = 2;
        s.p[0] = prev;
        s.p[1] = at(i, 0);
        counter.add(s);
        prev = s.p[1];
        counts[j] += 1.0;
      }
    } else {
      std::vector<Point4> below(static_cast<std::size_t>(st[0] + 1)), above(below.size());
      for (long i = 0; i <= st[0]; ++i) below[static_cast<std::size_t>(i)] = at(i, job.row_lo);
      for (long r = job.row_lo; r < job.row_hi; ++r) {
        for (long i = 0; i <= st[0]; ++i) above[static_cast<std::size_t>(i)] = at(i, r + 1);
        for (long i = 0; i < st[0]; ++i) {
          const auto I = static_cast<std::size_t>(i);
          Simplex s;
          s.vertices = 3;
          s.p[0] = below[I];
          s.p[1] = below[I + 1];
          s.p[2] = above[I + 1];
          counter.add(s);
          s.p[1] = above[I + 1];
          s.p[2] = above[I];
          counter.add(s);
          counts[j] += 2.0;
        }
        std::swap(below, above);
      }
    }
    batches[j] = counter.take_marks();
  });
  double simplices = 0.0;
  for (double c : counts) simplices += c;
  return finish_boxcount(std::move(batches), n, box_size, simplices);
}

MeasureReport boxcount_image_measure(const PiecewiseAffineMap& g, const Region& E, double box_size) {
  const int n = g.dim();
  const int m = g.codim();
  check_boxcount_dims(n, m, box_size);
  require(E.dim() == n, "E dimension does not match the map", "E");
  if (g.cell_count() > 1e6) return boxcount_image_measure([&g](const Vec& x) { return g(x); }, E, m, box_size);

  std::vector<Box> parts;
  for (const auto& p : E.parts()) {
    Box q{p.lo.cwiseMax(g.domain().lo), p.hi.cwiseMin(g.domain().hi)};
    if ((q.hi.array() > q.lo.array()).all()) parts.push_back(std::move(q));
  }
  BoxCounter counter(m, box_size);
  double simplices = 0.0;
  const Mat& X = g.basis();
  g.for_each_cell([&](std::size_t, const Vec& tlo, const Vec& thi) {
    for (const auto& q : parts) {
      // Cell ∩ part as a convex polygon (interval when n = 1) in x-space.
      std::vector<Vec> poly;
      if (n == 1) {
        const double a0 = X(0, 0) * tlo[0], a1 = X(0, 0) * thi[0];
        const double lo = std::max(std::min(a0, a1), q.lo[0]), hi = std::min(std::max(a0, a1), q.hi[0]);
        if (hi <= lo) continue;
        Simplex s;
        s.vertices = 2;
        s.p[0] = to_point(g(Vec::Constant(1, lo)));
        s.p[1] = to_point(g(Vec::Constant(1, hi)));
        counter.add(s);
        simplices += 1.0;
        continue;
      }
      const std::array<std::array<double, 2>, 4> corners{{{tlo[0], tlo[1]}, {thi[0], tlo[1]}, {thi[0], thi[1]}, {tlo[0], thi[1]}}};
      for (const auto& c : corners) poly.push_back(X * Vec{{c[0], c[1]}});
      for (int k = 0; k < 2 && !poly.empty(); ++k)
        for (int side = 0; side < 2 && !poly.empty(); ++side) {
          const double bound = side == 0 ? q.lo[k] : q.hi[k];
          std::vector<Vec> out;
          for (std::size_t i = 0; i < poly.size(); ++i) {
            const Vec& cur = poly[i];
            const Vec& nxt = poly[(i + 1) % poly.size()];
            const bool ci = side == 0 ? cur[k] >= bound : cur[k] <= bound;
            const bool ni = side == 0 ? nxt[k] >= bound : nxt[k] <= bound;
            if (ci) out.push_back(cur);
            if (ci != ni) {
              const double t = (bound - cur[k]) / (nxt[k] - cur[k]);
              Vec p = cur + t * (nxt - cur);
              p[k] = bound;
              out.push_back(std::move(p));
            }
          }
          poly = std::move(out);
        }
      if (poly.size() < 3) continue;
      // g is affine on the cell: evaluate at an interior point and extend linearly.
      const Vec centre = std::accumulate(poly.begin(), poly.end(), Vec(Vec::Zero(n))) / static_cast<double>(poly.size());
      const Vec gc = g(centre);
      const Vec tc = g.basis_inverse() * centre;
      Mat L(m, n);
      for (int k = 0; k < n; ++k) {
        const auto& ax = g.axes()[static_cast<std::size_t>(k)];
        L.col(k) = ax.slopes[static_cast<std::size_t>(ax.slope_index[ax.segment_of(tc[k])])];
      }
      L = L * g.basis_inverse();
      std::vector<Point4> img;
      img.reserve(poly.size());
      for (const auto& v : poly) img.push_back(to_point(gc + L * (v - centre)));
      for (std::size_t i = 1; i + 1 < img.size(); ++i) {
        Simplex s;
        s.vertices = 3;
        s.p[0] = img[0];
        s.p[1] = img[i];
        s.p[2] = img[i + 1];
        counter.add(s);
        simplices += 1.0;
      }
    }
  });
  std::vector<std::vector<std::pair<std::uint64_t, float>>> batches;
  batches.push_back(counter.take_marks());
  return finish_boxcount(std::move(batches), n, box_size, simplices);
}

// ---------------------------------------------------------------------------
// Coverage

MeasureReport coverage_check(const MapFn& g, int n, int m, double radius, double target_radius, double spacing) {
  require(n == 2 && m == 2, "coverage check supports n = m = 2 only", "n");
  require(radius > 0.0 && std::isfinite(radius), "radius must be positive", "radius");
  require(target_radius >= 0.0 && std::isfinite(target_radius), "target radius must be nonnegative", "target_radius");
  require(spacing > 0.0 && spacing <= radius, "spacing must lie in (0, radius]", "spacing");

  const double h = 0.5 * spacing;
  const long steps = static_cast<long>(std::ceil(radius / h));
  const long rows = 2 * steps + 1;
  std::vector<std::vector<std::uint64_t>> marked(static_cast<std::size_t>(rows) + 1);
  auto key = [](std::int64_t i, std::int64_t j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
  };
  auto mark = [&](std::vector<std::uint64_t>& out, const Vec& x) {
    const Vec y = g(x);
    require(y.size() == 2, "map output dimension must be 2", "g");
    out.push_back(key(static_cast<std::int64_t>(std::floor(y[0] / spacing)),
                      static_cast<std::int64_t>(std::floor(y[1] / spacing))));
  };
  parallel_for(static_cast<std::size_t>(rows) + 1, [&](std::size_t r) {
    auto& out = marked[r];
    if (r == static_cast<std::size_t>(rows)) {
      const long ring = static_cast<long>(std::ceil(2.0 * std::numbers::pi * radius / h));
      for (long k = 0; k < ring; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(ring);
        mark(out, Vec{{radius * std::cos(th), radius * std::sin(th)}});
      }
      return;
    }
    const double x1 = static_cast<double>(static_cast<long>(r) - steps) * h;
    for (long c = -steps; c <= steps; ++c) {
      const Vec x{{static_cast<double>(c) * h, x1}};
      if (x.norm() <= radius) mark(out, x);
    }
  });
  std::unordered_set<std::uint64_t> cells;
  for (const auto& v : marked) cells.insert(v.begin(), v.end());

  const long tsteps = static_cast<long>(std::floor(target_radius / spacing));
  double total = 0.0, covered = 0.0;
  for (long i = -tsteps; i <= tsteps; ++i)
    for (long j = -tsteps; j <= tsteps; ++j) {
      const double z0 = static_cast<double>(i) * spacing, z1 = static_cast<double>(j) * spacing;
      if (std::hypot(z0, z1) > target_radius) continue;
      total += 1.0;
      const auto ci = static_cast<std::int64_t>(std::floor(z0 / spacing));
      const auto cj = static_cast<std::int64_t>(std::floor(z1 / spacing));
      bool hit = false;
      for (std::int64_t di = -1; di <= 1 && !hit; ++di)
        for (std::int64_t dj = -1; dj <= 1 && !hit; ++dj) hit = cells.count(key(ci + di, cj + dj)) > 0;
      if (hit) covered += 1.0;
    }
  MeasureReport rep;
  rep.quantity = MeasureQuantity::coverage_ratio;
  rep.value = total > 0.0 ? covered / total : 1.0;
  rep.resolution = {{"spacing", spacing}, {"grid_points", total}, {"samples", static_cast<double>(cells.size())}};
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments

LipschitzMap make_map(const MapSpec& spec, int n, int m, const Norm& a, const Norm& b) {
  auto check_matrix = [&] {
    require(spec.matrix.rows() == m && spec.matrix.cols() == n, "f matrix must be m x n", "f/matrix");
    require(spec.matrix.allFinite(), "f matrix must be finite", "f/matrix");
  };
  switch (spec.kind) {
    case MapKind::zero: return LipschitzMap::zero(n, m);
    case MapKind::linear: {
      check_matrix();
      const Vec c = spec.offset.size() == 0 ? Vec(Vec::Zero(m)) : spec.offset;
      require(c.size() == m, "f offset must have length m", "f/offset");
      return LipschitzMap::affine(spec.matrix, c, a, b);
    }
    case MapKind::abs_linear: check_matrix(); return LipschitzMap::abs_linear(spec.matrix, a, b);
    case MapKind::sine:
      check_matrix();
      require(std::isfinite(spec.scale), "f scale must be finite", "f/scale");
      return LipschitzMap::sine(spec.matrix, spec.scale, a, b);
  }
  throw PreconditionError("unknown map kind", "f/kind");
}

namespace {

double glued_fraction(const InflateResult& res, const Region& E, double threshold) {
  const double total = E.measure();
  if (total <= 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& p : res.map->spec().patches) {
    if (!p.pam || !p.box) continue;
    const auto& vols = p.pam->combo_stats().vols;
    sum += p.pam->integrate(E.clipped(*p.box),
                            [&](std::size_t c) { return vols[c] >= threshold * (1.0 - 1e-12) ? 1.0 : 0.0; });
  }
  return sum / total;
}

const PiecewiseAffineMap* single_piece(const InflateResult& res, const Region& E) {
  const auto& patches = res.map->spec().patches;
  if (patches.size() != 1 || !patches[0].box || !patches[0].pam) return nullptr;
  const Box& S = *patches[0].box;
  const Box& B = E.bounds();
  if ((S.lo.array() <= B.lo.array()).all() && (S.hi.array() >= B.hi.array()).all()) return patches[0].pam.get();
  return nullptr;
}

}  // namespace

PositiveReport run_positive_experiment(const PositiveConfig& config, std::uint64_t seed) {
  const Region& E = config.E;
  const int n = E.dim();
  const int m = config.b.dim();
  require(config.a.dim() == n, "domain norm dimension must match E", "a");
  require(!config.eps.empty(), "eps schedule must not be empty", "eps");
  const LipschitzMap f = make_map(config.f, n, m, config.a, config.b);

  PositiveReport rep;
  rep.all_achieved = rep.lipschitz_ok = rep.distance_ok = true;
  const bool count_boxes = config.box_size > 0.0 && m > n && n <= 2 && m <= 4;
  if (count_boxes) rep.boxcount_soft_check = true;
  for (std::size_t k = 0; k < config.eps.size(); ++k) {
    PositiveRecord rec;
    rec.eps = config.eps[k];
    const std::uint64_t run_seed = mix_seed(seed, k);
    const InflateResult res = inflate_on_set(f, E, config.a, config.b, config.lambda, rec.eps, config.eta, run_seed,
                                             config.inflate);
    rec.inflate = res.report;
    const GluedMap& g = *res.map;
    if (E.measure() > 0.0) {
      rec.lip_sampled = estimate_lipschitz([&g](const Vec& x) { return g(x); }, E, config.a, config.b,
                                           config.lipschitz_pairs, mix_seed(run_seed, 1))
                            .value;
      rec.superlevel_fraction = glued_fraction(res, E, config.eta * config.lambda);
    }
    if (count_boxes && E.measure() > 0.0) {
      const PiecewiseAffineMap* pam = single_piece(res, E);
      rec.boxcount = pam ? boxcount_image_measure(*pam, E, config.box_size)
                         : boxcount_image_measure([&g](const Vec& x) { return g(x); }, E, m, config.box_size);
      if (rec.boxcount->value < 0.8 * config.lambda * E.measure()) rep.boxcount_soft_check = false;
    }
    rep.all_achieved = rep.all_achieved && rec.inflate.achieved;
    rep.lipschitz_ok = rep.lipschitz_ok && rec.inflate.lip_bound <= 1.0 + 1e-9 && rec.lip_sampled <= 1.0 + 1e-9;
    rep.distance_ok = rep.distance_ok && rec.inflate.sup_distance <= rec.eps;
    rep.records.push_back(std::move(rec));
  }
  return rep;
}


namespace {

struct Candidate {
  double fraction = 0.0;
  double sup = 0.0;
  double lip = 0.0;
  double jac = 0.0;
  bool feasible = false;
};

class NegativeSearch {
 public:
  NegativeSearch(const NegativeConfig& c, double threshold)
      : config_(c),
        n_(c.a.dim()),
        m_(c.b.dim()),
        threshold_(threshold),
        Q_(Region::box(Box{Vec::Constant(n_, -1.0), Vec::Constant(n_, 1.0)})),
        eval_(c.a, c.b) {
    // Orthonormal directions completing u.
    Mat basis(m_, m_ + 1);
    basis.col(0) = c.u / c.u.norm();
    basis.rightCols(m_) = Mat::Identity(m_, m_);
    Eigen::HouseholderQR<Mat> qr(basis);
    const Mat q = qr.householderQ() * Mat::Identity(m_, m_);
    complement_ = q.rightCols(m_ - 1).leftCols(n_ - 1);
  }

  const Region& cube() const { return Q_; }

  Candidate run(double eps, int restart, std::uint64_t seed) const {
    return restart == 0 ? structured(eps) : ascent(eps, seed);
  }

 private:
  // φ₀ − f₀ and φ_j − f_j at the breakpoints; f(x) = x₁u.
  double sup_bound(const PiecewiseAffineMap& g) const {
    double total = 0.0;
    for (int i = 0; i < n_; ++i) {
      const auto& ax = g.axes()[static_cast<std::size_t>(i)];
      double worst = 0.0;
      for (std::size_t k = 0; k < ax.breaks.size(); ++k) {
        const Vec target = i == 0 ? Vec(ax.breaks[k] * config_.u) : Vec(Vec::Zero(m_));
        worst = std::max(worst, config_.b(ax.values[k] - target));
      }
      total += worst;
    }
    return total;
  }

  Candidate evaluate(const PiecewiseAffineMap& g, double eps) const {
    Candidate c;
    c.sup = sup_bound(g);
    c.lip = g.exact_lipschitz();
    c.feasible = c.sup <= eps * (1.0 + 1e-12) && c.lip <= 1.0 + 1e-12;
    c.jac = jacobian_integral(g, Q_).value;
    c.fraction = c.feasible ? superlevel_fraction(g, Q_, threshold_).value : 0.0;
    return c;
  }

  Mat columns(double alpha, double beta, std::uint32_t signs) const {
    Mat M(m_, n_);
    M.col(0) = alpha * config_.u;
    for (int j = 1; j < n_; ++j) M.col(j) = (((signs >> (j - 1)) & 1u) ? -beta : beta) * complement_.col(j - 1);
    return M;
  }

  bool lip_ok(double alpha, double beta) const {
    for (std::uint32_t s = 0; s < (1u << (n_ - 1)); ++s)
      if (eval_.upper(columns(alpha, beta, s)) > 1.0) return false;
    return true;
  }

  // φ₀(t) = αtu and zigzags of slope ±βv_j on the other axes, with the ε budget
  // split evenly between the linear error and the zigzag amplitudes.
  Candidate structured(double eps) const {
    const double ub = config_.b(config_.u);
    const double lo = std::max(0.0, 1.0 - 0.5 * eps / ub);
    double best_vol = -1.0, best_alpha = 1.0, best_beta = 0.0;
    for (int k = 0; k <= 32; ++k) {
      const double alpha = lo + (1.0 - lo) * k / 32.0;
      double beta = 0.0;
      if (n_ > 1 && lip_ok(alpha, 0.0)) {
        double a = 0.0, b = 1.0;
        while (lip_ok(alpha, b) && b < 1e6) b *= 2.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (a + b);
          (lip_ok(alpha, mid) ? a : b) = mid;
        }
        beta = a;
      }
      const double v = vol(columns(alpha, beta, 0));
      if (v > best_vol) {
        best_vol = v;
        best_alpha = alpha;
        best_beta = beta;
      }
    }
    std::vector<PiecewiseAffineMap::Axis> axes(static_cast<std::size_t>(n_));
    auto& first = axes[0];
    first.breaks = {-1.0, 1.0};
    first.slopes = {best_alpha * config_.u};
    first.slope_index = {0};
    first.values = {-best_alpha * config_.u, best_alpha * config_.u};
    for (int j = 1; j < n_; ++j) {
      auto& ax = axes[static_cast<std::size_t>(j)];
      if (best_beta > 0.0) {
        const double budget = 0.5 * eps / (n_ - 1);
        ax = zigzag_axis(zigzag_curve(Vec::Zero(m_), best_beta * complement_.col(j - 1), budget, -1.0, 1.0, config_.b));
      } else {
        ax.breaks = {-1.0, 1.0};
        ax.slopes = {Vec::Zero(m_)};
        ax.slope_index = {0};
        ax.values = {Vec::Zero(m_), Vec::Zero(m_)};
      }
    }
    const PiecewiseAffineMap g(Q_.bounds(), Mat::Identity(n_, n_), Vec::Zero(m_), std::move(axes), config_.a,
                               config_.b);
    return evaluate(g, eps);
  }

  // Coordinate perturbation ascent over per-segment slopes of a uniform grid map,
  // rejecting moves that break the Lipschitz or distance constraints.
  Candidate ascent(double eps, std::uint64_t seed) const {
    const int K = config_.grid;
    const double h = 2.0 / K;
    std::size_t combos = 1;
    for (int i = 0; i < n_; ++i) combos *= static_cast<std::size_t>(K);
    Rng rng(seed);
    std::vector<std::vector<Vec>> S(static_cast<std::size_t>(n_), std::vector<Vec>(static_cast<std::size_t>(K)));
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < K; ++k)
        S[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
            i == 0 ? Vec((1.0 - 0.25 * eps) * config_.u) : Vec(Vec::Zero(m_));

    auto fprime = [&](int i) { return i == 0 ? Vec(config_.u) : Vec(Vec::Zero(m_)); };
    auto axis_sup = [&](int i) {
      std::vector<Vec> D(static_cast<std::size_t>(K) + 1, Vec::Zero(m_));
      for (int k = 0; k < K; ++k)
        D[static_cast<std::size_t>(k) + 1] =
            D[static_cast<std::size_t>(k)] + h * (S[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] - fprime(i));
      Vec lo = D[0], hi = D[0];
      for (const auto& d : D) {
        lo = lo.cwiseMin(d);
        hi = hi.cwiseMax(d);
      }
      const Vec c = -0.5 * (lo + hi);
      double worst = 0.0;
      for (const auto& d : D) worst = std::max(worst, config_.b(c + d));
      return std::pair<double, Vec>{worst, c};
    };
    auto combo_matrix = [&](std::size_t idx) {
      Mat M(m_, n_);
      for (int i = 0; i < n_; ++i) {
        M.col(i) = S[static_cast<std::size_t>(i)][idx % static_cast<std::size_t>(K)];
        idx /= static_cast<std::size_t>(K);
      }
      return M;
    };
    std::vector<double> norms(combos), vols(combos);
    auto refresh = [&](std::size_t idx) {
      const Mat M = combo_matrix(idx);
      norms[idx] = eval_.upper(M);
      vols[idx] = vol(M);
    };
    auto score = [&] {
      double hit = 0.0, soft = 0.0;
      for (std::size_t c = 0; c < combos; ++c) {
        if (vols[c] >= threshold_) hit += 1.0;
        soft += std::min(vols[c] / threshold_, 1.0);
      }
      return (hit + 1e-3 * soft) / static_cast<double>(combos);
    };
    auto feasible = [&] {
      double total = 0.0;
      for (int i = 0; i < n_; ++i) total += axis_sup(i).first;
      if (total > eps) return false;
      for (double v : norms)
        if (v > 1.0) return false;
      return true;
    };

    // Random start near the base map, kept only if feasible.
    const auto start = S;
    for (auto& axis : S)
      for (auto& s : axis) s += 0.05 * eps * rng.normal_vec(m_);
    for (std::size_t c = 0; c < combos; ++c) refresh(c);
    if (!feasible()) {
      S = start;
      for (std::size_t c = 0; c < combos; ++c) refresh(c);
    }
    std::vector<double> sup(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) sup[static_cast<std::size_t>(i)] = axis_sup(i).first;
    double current = score();
    std::vector<double> step(static_cast<std::size_t>(n_), 0.2);
    std::vector<std::size_t> touched;
    for (int it = 0; it < config_.iterations; ++it) {
      const int i = static_cast<int>(rng.index(static_cast<std::size_t>(n_)));
      const int k = static_cast<int>(rng.index(static_cast<std::size_t>(K)));
      auto& slot = S[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      const Vec old = slot;
      slot += step[static_cast<std::size_t>(i)] * rng.normal_vec(m_);
      bool ok = true;
      const double new_sup = axis_sup(i).first;
      double total = new_sup;
      for (int j = 0; j < n_; ++j)
        if (j != i) total += sup[static_cast<std::size_t>(j)];
      ok = total <= eps;
      touched.clear();
      std::vector<double> saved_norms, saved_vols;
      if (ok) {
        std::size_t stride = 1;
        for (int j = 0; j < i; ++j) stride *= static_cast<std::size_t>(K);
        for (std::size_t c = 0; c < combos; ++c)
          if ((c / stride) % static_cast<std::size_t>(K) == static_cast<std::size_t>(k)) touched.push_back(c);
        for (std::size_t c : touched) {
          saved_norms.push_back(norms[c]);
          saved_vols.push_back(vols[c]);
          refresh(c);
          if (norms[c] > 1.0) ok = false;
        }
      }
      const double next = ok ? score() : -1.0;
      if (ok && next >= current) {
        current = next;
        sup[static_cast<std::size_t>(i)] = new_sup;
        step[static_cast<std::size_t>(i)] = std::min(1.0, step[static_cast<std::size_t>(i)] * 1.5);
      } else {
        slot = old;
        for (std::size_t t = 0; t < saved_norms.size(); ++t) {
          norms[touched[t]] = saved_norms[t];
          vols[touched[t]] = saved_vols[t];
        }
        step[static_cast<std::size_t>(i)] = std::max(1e-9, step[static_cast<std::size_t>(i)] * 0.7);
      }
    }

    std::vector<PiecewiseAffineMap::Axis> axes(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      auto& ax = axes[static_cast<std::size_t>(i)];
      const Vec c = axis_sup(i).second;
      ax.slopes = S[static_cast<std::size_t>(i)];
      Vec value = (i == 0 ? Vec(-config_.u) : Vec(Vec::Zero(m_))) + c;
      for (int k = 0; k <= K; ++k) {
        ax.breaks.push_back(k == K ? 1.0 : -1.0 + k * h);
        ax.values.push_back(value);
        if (k < K) {
          ax.slope_index.push_back(k);
          value += h * S[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
      }
    }
    const PiecewiseAffineMap g(Q_.bounds(), Mat::Identity(n_, n_), Vec::Zero(m_), std::move(axes), config_.a,
                               config_.b);
    return evaluate(g, eps);
  }

  const NegativeConfig& config_;
  int n_, m_;
  double threshold_;
  Region Q_;
  OperatorNormEvaluator eval_;
  Mat complement_;
};

NegativeRecord negative_record(const NegativeSearch& search, double eps, int restarts, std::uint64_t seed) {
  std::vector<Candidate> results(static_cast<std::size_t>(restarts));
  parallel_for(results.size(), [&](std::size_t r) {
    results[r] = search.run(eps, static_cast<int>(r), mix_seed(seed, r));
  });
  NegativeRecord rec;
  rec.eps = eps;
  rec.best_restart = -1;
  for (std::size_t r = 0; r < results.size(); ++r) {
    rec.restart_fractions.push_back(results[r].fraction);
    if (results[r].feasible && (rec.best_restart < 0 || results[r].fraction > rec.fraction)) {
      rec.best_restart = static_cast<int>(r);
      rec.fraction = results[r].fraction;
      rec.sup_distance = results[r].sup;
      rec.lip_exact = results[r].lip;
      rec.jac_integral = results[r].jac;
    }
  }
  if (rec.best_restart < 0) throw NumericalError("no feasible map found at eps = " + std::to_string(eps));
  return rec;
}

}  // namespace

NegativeReport run_negative_experiment(const NegativeConfig& config, std::uint64_t seed) {
  const int n = config.a.dim();
  const int m = config.b.dim();
  require(n >= 1 && n <= 3, "negative experiment supports 1 <= n <= 3", "a");
  require(n <= m, "negative experiment needs n <= m", "b");
  require(config.u.size() == m && config.u.allFinite(), "u must be a finite vector in R^m", "u");
  require(config.r > 0.0 && std::isfinite(config.r), "r must be positive", "r");
  require(config.restarts >= 1, "restarts must be positive", "restarts");
  require(config.grid >= 1 && config.grid <= 64, "grid must lie in [1, 64]", "grid");
  require(config.iterations >= 0, "iterations must be nonnegative", "iterations");
  require(!config.eps.empty(), "eps schedule must not be empty", "eps");
  for (double e : config.eps) require(e > 0.0 && std::isfinite(e), "eps values must be positive", "eps");
  for (double e : config.extended_eps) require(e > 0.0 && std::isfinite(e), "eps values must be positive", "extended_eps");
  const double un = config.b(config.u) * config.a.dual(Vec::Unit(n, 0));
  require(std::abs(un - 1.0) <= 1e-9, "the map (u|0) must have operator norm 1", "u");
  require(analyze_extremal(config.b, config.u / config.b(config.u)).is_strongly_extremal,
          "u must be a strongly extremal direction of the codomain ball", "u");

  NegativeReport rep;
  MvOptions mv_options = config.mv;
  mv_options.seed = mix_seed(seed, 0x3F);
  rep.mv = max_volume(config.u, config.a, config.b, mv_options).value;
  rep.threshold = rep.mv + config.r;

  const NegativeSearch search(config, rep.threshold);
  for (std::size_t k = 0; k < config.eps.size(); ++k)
    rep.records.push_back(negative_record(search, config.eps[k], config.restarts, mix_seed(seed, 100 + k)));
  for (std::size_t k = 0; k < config.extended_eps.size(); ++k)
    rep.extended.push_back(
        negative_record(search, config.extended_eps[k], config.restarts, mix_seed(seed, 10000 + k)));

  if (config.control) {
    const Norm ea = Norm::euclidean(n), eb = Norm::euclidean(m);
    Mat A = Mat::Zero(m, n);
    A.col(0) = config.u / config.u.norm();
    const LipschitzMap f = LipschitzMap::affine(A, Vec::Zero(m), ea, eb);
    bool high = true;
    for (std::size_t k = 0; k < rep.records.size(); ++k) {
      const InflateResult res =
          inflate_on_set(f, search.cube(), ea, eb, 1.0, config.eps[k], 0.9, mix_seed(seed, 200 + k));
      rep.records[k].control_fraction = glued_fraction(res, search.cube(), rep.threshold);
      high = high && *rep.records[k].control_fraction >= 0.8;
    }
    rep.control_high = high;
  }

  rep.weakly_decreasing = true;
  for (std::size_t k = 1; k < rep.records.size(); ++k)
    rep.weakly_decreasing = rep.weakly_decreasing && rep.records[k].fraction <= rep.records[k - 1].fraction + 0.02;
  rep.final_small = rep.records.back().fraction <= 0.1;
  return rep;
}

}  // namespace inflab
