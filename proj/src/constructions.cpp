#include "inflab/constructions.hpp"

#include "inflab/parallel.hpp"
#include "inflab/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace inflab {

PiecewiseAffineMap inflate_affine(const Mat& A_lin, const Vec& offset, const InflationCertificate& cert,
                                  const Box& E, double eps, const Norm& a, const Norm& b, double scale) {
  const int n = static_cast<int>(A_lin.cols());
  const int m = static_cast<int>(A_lin.rows());
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive", "eps");
  require(scale > 0.0 && std::isfinite(scale), "scale must be positive", "scale");
  require(E.dim() == n && a.dim() == n && b.dim() == m && offset.size() == m,
          "inflate_affine: dimensions of map, box and norms disagree", "A");
  require(cert.verified, "unverified certificate", "cert");
  const LinearMap scaled(A_lin / scale, a, b);
  const VerificationReport check = verify_certificate(scaled, cert);
  require(check.verified, "certificate does not verify for this map: " + check.reason, "cert");

  const Mat& X = cert.preimages;
  const Mat Xinv = X.inverse();
  auto [tlo, thi] = basis_range(Xinv, E);
  std::vector<PiecewiseAffineMap::Axis> axes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vec w = A_lin * X.col(i);
    const Vec u = cert.eigenvalues[i] * w;
    const double hi = std::max(thi[i], tlo[i] + 1e-12 * std::max(1.0, std::abs(tlo[i])));
    const ZigzagCurve z = zigzag_curve(w, u, eps / n, tlo[i], hi, b);
    axes[static_cast<std::size_t>(i)] = zigzag_axis(z);
  }
  return PiecewiseAffineMap(E, X, offset, std::move(axes), a, b);
}

// ---------------------------------------------------------------------------
// Gluing

namespace {

Box reach_box(const Patch& p, double radius, const Norm& a) {
  const int n = a.dim();
  Vec ext(n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = 1.0;
    ext[k] = radius * a.dual(e);
  }
  if (p.box) return Box{p.box->lo - ext, p.box->hi + ext};
  Vec lo = p.points.front(), hi = p.points.front();
  for (const auto& q : p.points) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  return Box{lo - ext, hi + ext};
}

double point_box_dist(const Vec& x, const Box& b, const Norm& a) {
  return a(x - x.cwiseMax(b.lo).cwiseMin(b.hi));
}

double set_distance(const Patch& p, const Patch& q, const Norm& a) {
  if (p.box && q.box) {
    const Vec gap = (q.box->lo - p.box->hi).cwiseMax(p.box->lo - q.box->hi).cwiseMax(0.0);
    return a(gap);
  }
  if (p.box || q.box) {
    const Patch& bx = p.box ? p : q;
    const Patch& pts = p.box ? q : p;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& x : pts.points) d = std::min(d, point_box_dist(x, *bx.box, a));
    return d;
  }
  double d = std::numeric_limits<double>::infinity();
  for (const auto& x : p.points)
    for (const auto& y : q.points) d = std::min(d, a(x - y));
  return d;
}

}  // namespace

GluedMap::GluedMap(PatchSpec spec, double lipschitz_bound)
    : spec_(std::move(spec)), lipschitz_bound_(lipschitz_bound) {
  reach_.reserve(spec_.patches.size());
  for (const auto& p : spec_.patches) reach_.push_back(reach_box(p, 0.5 * p.rho, spec_.a));
}

double GluedMap::dist(std::size_t i, const Vec& x) const {
  const Patch& p = spec_.patches[i];
  if (p.box) return point_box_dist(x, *p.box, spec_.a);
  double d = std::numeric_limits<double>::infinity();
  for (const auto& q : p.points) d = std::min(d, spec_.a(x - q));
  return d;
}

std::optional<std::size_t> GluedMap::active_patch(const Vec& x) const {
  for (std::size_t i = 0; i < reach_.size(); ++i) {
    if (!reach_[i].contains(x)) continue;
    if (dist(i, x) < 0.5 * spec_.patches[i].rho) return i;
  }
  return std::nullopt;
}

Vec GluedMap::operator()(const Vec& x) const {
  std::optional<Vec> fx;
  Vec acc;
  bool blended = false;
  for (std::size_t i = 0; i < reach_.size(); ++i) {
    if (!reach_[i].contains(x)) continue;
    const double half = 0.5 * spec_.patches[i].rho;
    const double d = dist(i, x);
    if (d >= half) continue;
    if (d == 0.0) return spec_.patches[i].map(x);
    if (!fx) {
      fx = spec_.base(x);
      acc = *fx;
    }
    const double chi = (half - d) / half;
    acc += chi * (spec_.patches[i].map(x) - *fx);
    blended = true;
  }
  if (blended) return acc;
  return fx ? *fx : spec_.base(x);
}

GluedMap glue_patches(PatchSpec spec, double L, const GlueOptions& options) {
  const Norm& a = spec.a;
  const Norm& b = spec.b;
  require(spec.delta > 0.0 && std::isfinite(spec.delta), "delta must be positive", "delta");
  require(L >= 0.0 && std::isfinite(L), "Lipschitz bound must be nonnegative", "L");
  require(spec.base.eval != nullptr, "base map is missing", "base");
  const int n = a.dim();
  for (std::size_t i = 0; i < spec.patches.size(); ++i) {
    const Patch& p = spec.patches[i];
    const std::string field = "patches/" + std::to_string(i);
    require(p.rho > 0.0 && p.rho <= 1.0, "patch radius must lie in (0, 1]", field + "/rho");
    require(p.box.has_value() != !p.points.empty(), "a patch is either a box or a point cloud", field);
    require(p.map != nullptr, "patch map is missing", field + "/map");
    if (p.box) {
      require(a.is_coordinate_monotone(), "box patches need an lp-family domain norm", field + "/box");
      require(p.box->dim() == n, "patch box dimension mismatch", field + "/box");
    }
    for (const auto& q : p.points) require(q.size() == n, "patch point dimension mismatch", field + "/points");
  }

  // Sweep along axis 0: |y|_a ≥ |y₀| / dual_a(e₀).
  const std::size_t count = spec.patches.size();
  std::vector<Box> bounds;
  bounds.reserve(count);
  for (const auto& p : spec.patches) bounds.push_back(reach_box(p, 0.0, a));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return bounds[i].lo[0] < bounds[j].lo[0] || (bounds[i].lo[0] == bounds[j].lo[0] && i < j);
  });
  Vec e0 = Vec::Zero(n);
  e0[0] = 1.0;
  const double dual0 = a.dual(e0);
  double rho_max = 0.0;
  for (const auto& p : spec.patches) rho_max = std::max(rho_max, p.rho);
  for (std::size_t oi = 0; oi < count; ++oi) {
    const std::size_t i = order[oi];
    for (std::size_t oj = oi + 1; oj < count; ++oj) {
      const std::size_t j = order[oj];
      if ((bounds[j].lo[0] - bounds[i].hi[0]) / dual0 >= spec.patches[i].rho + rho_max) break;
      const double need = spec.patches[i].rho + spec.patches[j].rho;
      if (set_distance(spec.patches[i], spec.patches[j], a) < need)
        throw PreconditionError("patch neighborhoods overlap: patches " + std::to_string(std::min(i, j)) +
                                    " and " + std::to_string(std::max(i, j)),
                                "patches");
    }
  }

  std::vector<std::string> violations(count);
  parallel_for(count, [&](std::size_t i) {
    const Patch& p = spec.patches[i];
    Rng rng(mix_seed(options.seed, i));
    const Box reach = reach_box(p, p.rho, a);
    const double limit = spec.delta * p.rho * (1.0 + 1e-12);
    auto check = [&](const Vec& x) {
      if (!violations[i].empty()) return;
      double d = 0.0;
      if (p.box)
        d = point_box_dist(x, *p.box, a);
      else {
        d = std::numeric_limits<double>::infinity();
        for (const auto& q : p.points) d = std::min(d, a(x - q));
      }
      if (d > p.rho) return;
      const double dev = b(p.map(x) - spec.base(x));
      if (dev > limit)
        violations[i] = "patch " + std::to_string(i) + ": |g_i - f| = " + std::to_string(dev) +
                        " exceeds delta*rho = " + std::to_string(spec.delta * p.rho);
    };
    if (p.box) {
      check(p.box->center());
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        Vec c(n);
        for (int k = 0; k < n; ++k) c[k] = ((mask >> k) & 1u) ? p.box->hi[k] : p.box->lo[k];
        check(c);
      }
    } else {
      for (const auto& q : p.points) check(q);
    }
    for (int s = 0; s < options.samples_per_patch; ++s) check(rng.in_box(reach));
  });
  for (const auto& v : violations)
    if (!v.empty()) throw PreconditionError(v, "patches");
  const double bound = L + 4.0 * spec.delta;
  return GluedMap(std::move(spec), bound);
}

// ---------------------------------------------------------------------------
// Inflation on sets

namespace {

double corner_radius(const Box& box, const Vec& centre, const Norm& a) {
  const int n = box.dim();
  double r = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Vec c(n);
    for (int k = 0; k < n; ++k) c[k] = ((mask >> k) & 1u) ? box.hi[k] : box.lo[k];
    r = std::max(r, a(c - centre));
  }
  return r;
}

// max over x in the box of |M(x − centre)|_b, attained at a corner.
double corner_deviation(const Mat& M, const Box& box, const Vec& centre, const Norm& b) {
  const int n = box.dim();
  double r = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Vec c(n);
    for (int k = 0; k < n; ++k) c[k] = ((mask >> k) & 1u) ? box.hi[k] : box.lo[k];
    r = std::max(r, b(M * (c - centre)));
  }
  return r;
}

InflationCertificate certify(const Mat& L, const Norm& a, const Norm& b, double lambda,
                             const SearchOptions& search, const std::string& where) {
  const LinearMap map(L, a, b);
  if (a.is_euclidean() && b.is_euclidean()) return euclidean_inflation(map);
  auto cert = inflation_search(map, lambda, search);
  if (!cert) throw NumericalError("inflation search found no " + std::to_string(lambda) + "-inflation on " + where);
  return *cert;
}

struct Piece {
  Box cell;
  Vec centre;
  Mat L;        // fitted linear part, |L| ≤ cap
  Vec value;    // fitted value at the centre
  double residual = 0.0;
};

Piece fit_piece(const LipschitzMap& f, const Box& cell, const Norm& b, const OperatorNormEvaluator& eval,
                double cap) {
  const int n = cell.dim();
  const int m = f.m;
  int points = 1;
  for (int k = 0; k < n; ++k) points *= 5;
  Mat design(points, n + 1);
  Mat rhs(points, m);
  std::vector<Vec> xs;
  xs.reserve(static_cast<std::size_t>(points));
  Piece piece{cell, cell.center(), Mat(), Vec(), 0.0};
  for (int p = 0; p < points; ++p) {
    Vec x(n);
    int rest = p;
    for (int k = 0; k < n; ++k) {
      x[k] = cell.lo[k] + (rest % 5) * 0.25 * (cell.hi[k] - cell.lo[k]);
      rest /= 5;
    }
    design.row(p).head(n) = (x - piece.centre).transpose();
    design(p, n) = 1.0;
    rhs.row(p) = f(x).transpose();
    xs.push_back(std::move(x));
  }
  const Mat sol = design.colPivHouseholderQr().solve(rhs);
  piece.L = sol.topRows(n).transpose();
  piece.value = sol.row(n).transpose();
  const double norm = eval.upper(piece.L);
  if (norm > cap) piece.L *= cap / norm;
  for (int p = 0; p < points; ++p) {
    const Vec model = piece.value + piece.L * (xs[static_cast<std::size_t>(p)] - piece.centre);
    piece.residual = std::max(piece.residual, b(rhs.row(p).transpose() - model));
  }
  return piece;
}

std::vector<Box> dyadic_cells(const Region& E, int depth) {
  const Box& B = E.bounds();
  const int n = B.dim();
  const long long per_axis = 1LL << depth;
  long long total = 1;
  for (int k = 0; k < n; ++k) total *= per_axis;
  std::vector<Box> cells;
  const Vec h = (B.hi - B.lo) / static_cast<double>(per_axis);
  for (long long idx = 0; idx < total; ++idx) {
    Box c{Vec(n), Vec(n)};
    long long rest = idx;
    for (int k = 0; k < n; ++k) {
      const auto i = static_cast<double>(rest % per_axis);
      rest /= per_axis;
      c.lo[k] = B.lo[k] + i * h[k];
      c.hi[k] = (i + 1 == static_cast<double>(per_axis)) ? B.hi[k] : B.lo[k] + (i + 1) * h[k];
    }
    if (E.measure_in(c) > 0.0) cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace

InflateResult inflate_on_set(const LipschitzMap& f, const Region& E, const Norm& a, const Norm& b, double lambda,
                             double eps, double eta, std::uint64_t seed, const InflateOptions& options) {
  const int n = E.dim();
  const int m = b.dim();
  require(a.dim() == n, "domain norm dimension must match E", "a");
  require(f.n == n && f.m == m, "f must map R^n to R^m", "f");
  require(n <= m, "inflation needs n <= m", "b");
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative", "lambda");
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive", "eps");
  require(eta >= 0.0 && eta < 1.0, "eta must lie in [0, 1)", "eta");
  require(options.sigma > 0.0 && options.sigma < 1.0, "sigma must lie in (0, 1)", "sigma");

  InflateResult result;
  InflateReport& rep = result.report;
  rep.measure_E = E.measure();
  rep.target = eta * lambda * rep.measure_E;
  rep.lip_bound = f.lipschitz;
  if (rep.measure_E == 0.0) {
    PatchSpec spec{{}, f, 1.0, a, b};
    result.map = std::make_shared<GluedMap>(std::move(spec), f.lipschitz);
    rep.trivial = true;
    rep.achieved = true;
    return result;
  }
  require(f.lipschitz <= 1.0 + 1e-9,
          "Lip(f) must be at most 1 (declared " + std::to_string(f.lipschitz) + ")", "f/lipschitz");

  LipschitzMap F = f;
  double eps_work = eps;
  if (f.lipschitz >= 1.0 - 1e-6) {
    rep.scaled_f = true;
    rep.f_scale = 1.0 - 1e-6;
    F = f.scaled(rep.f_scale);
    const Box& B = E.bounds();
    const double sup_f = b(f(B.center())) + f.lipschitz * corner_radius(B, B.center(), a);
    eps_work -= 1e-6 * sup_f;
    require(eps_work > 0.0, "eps too small to absorb the rescaling of f", "eps");
  }

  const OperatorNormEvaluator eval(a, b);
  Rng rng(mix_seed(seed, 0xF17));
  std::vector<std::shared_ptr<const PiecewiseAffineMap>> pams;
  PatchSpec spec{{}, F, 1.0, a, b};

  if (F.is_affine()) {
    const Box B = E.bounds();
    const Vec c = B.center();
    const double radius = corner_radius(B, c, a);
    Mat L = *F.linear;
    if (!is_full_rank(L)) {
      const Mat Q = rng.orthonormal(m, n);
      const double qn = eval.upper(Q);
      const double room = std::max(0.0, 1.0 - eval.upper(L));
      double tau = 0.5 * room / qn;
      if (radius > 0.0) tau = std::min(tau, 0.25 * eps_work / (qn * radius));
      L += tau * Q;
      require(is_full_rank(L), "could not perturb f to full rank", "f");
    }
    const Vec value = F(c);
    const InflationCertificate cert = certify(L, a, b, lambda, options.search, "cell 0 (centre " + [&] {
      std::string s;
      for (int k = 0; k < n; ++k) s += (k ? ", " : "") + std::to_string(c[k]);
      return s;
    }() + ")");
    auto pam = std::make_shared<PiecewiseAffineMap>(
        inflate_affine(L, value - L * c, cert, B, 0.5 * eps_work, a, b, 1.0));
    Patch patch;
    patch.box = B;
    patch.rho = 1.0;
    patch.map = [pam](const Vec& x) { return (*pam)(x); };
    patch.pam = pam;
    spec.patches.push_back(std::move(patch));
    pams.push_back(pam);
    rep.sigma = 1.0;
    rep.lip_cells = pam->exact_lipschitz();
    rep.lip_bound = rep.lip_cells;
    result.map = std::make_shared<GluedMap>(std::move(spec), rep.lip_bound);
  } else {
    const double root = std::pow(eta, 1.0 / n);
    const double lip_f = F.lipschitz;
    const double delta = std::min({0.45 * eps_work, (1.0 - lip_f) / 8.0, (1.0 - root) / 8.0});
    require(delta > 0.0, "Lip(f) must be < 1 after scaling", "f/lipschitz");
    const double L0 = 1.0 - 4.0 * delta;
    const double sigma = std::max(options.sigma, 0.5 * (root / L0 + 1.0));
    double R_a = 0.0;
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e[k] = 1.0;
      R_a = std::max(R_a, a.dual(e));
    }
    rep.delta = delta;
    rep.sigma = sigma;
    const double cap = L0 * (1.0 - 1e-3);

    std::vector<Piece> pieces;
    std::vector<double> rhos;
    bool fitted = false;
    for (int depth = 0; depth <= options.max_depth && !fitted; ++depth) {
      std::vector<Box> cells = dyadic_cells(E, depth);
      require(static_cast<double>(cells.size()) <= options.max_patches,
              "affine fit did not reach the gluing budget within the patch limit", "f");
      pieces.assign(cells.size(), Piece{});
      rhos.assign(cells.size(), 0.0);
      parallel_for(cells.size(), [&](std::size_t j) {
        pieces[j] = fit_piece(F, cells[j], b, eval, cap);
        const Vec hw = 0.5 * (cells[j].hi - cells[j].lo);
        rhos[j] = std::min(1.0, 0.999 * (1.0 - sigma) * hw.minCoeff() / R_a);
      });
      fitted = true;
      for (std::size_t j = 0; j < pieces.size() && fitted; ++j)
        fitted = pieces[j].residual <= delta * rhos[j] / 3.0;
      rep.depth = depth;
    }
    if (!fitted)
      throw NumericalError("affine fit residual still above the gluing budget at depth " +
                           std::to_string(options.max_depth));

    std::vector<Patch> patches(pieces.size());
    parallel_for(pieces.size(), [&](std::size_t j) {
      const Piece& pc = pieces[j];
      const double budget = delta * rhos[j] / 3.0;
      Rng local(mix_seed(seed, j + 1));
      const Mat Q = local.orthonormal(m, n);
      const double qn = eval.upper(Q);
      const double radius = corner_radius(pc.cell, pc.centre, a);
      const double room = std::max(0.0, L0 - eval.upper(pc.L));
      const double tau = std::min(0.5 * room / qn, 0.5 * budget / (qn * radius));
      Mat L = pc.L + tau * Q;
      if (m > n) {
        // Generic position: tilt the image plane by a small random rotation.
        double angle = (0.5 + 0.5 * local.uniform()) * 1e-3;
        for (int tries = 0; tries < 60; ++tries, angle *= 0.5) {
          Rng plane(mix_seed(seed, 1000003 + j));
          Mat rotated = random_rotation(plane, m, angle) * L;
          const double rn = eval.upper(rotated);
          if (rn > L0) rotated *= L0 / rn;
          if (corner_deviation(rotated - pc.L, pc.cell, pc.centre, b) <= budget) {
            L = std::move(rotated);
            break;
          }
        }
      }
      require(is_full_rank(L), "perturbed piece is not full rank", "f");
      std::string where = "cell " + std::to_string(j) + " (centre";
      for (int k = 0; k < n; ++k) where += " " + std::to_string(pc.centre[k]);
      where += ")";
      const InflationCertificate cert = certify(L / L0, a, b, lambda, options.search, where);
      auto pam = std::make_shared<PiecewiseAffineMap>(
          inflate_affine(L, pc.value - L * pc.centre, cert, pc.cell, budget, a, b, L0));
      Patch& patch = patches[j];
      const Vec hw = 0.5 * sigma * (pc.cell.hi - pc.cell.lo);
      patch.box = Box{pc.centre - hw, pc.centre + hw};
      patch.rho = rhos[j];
      patch.map = [pam](const Vec& x) { return (*pam)(x); };
      patch.pam = pam;
    });
    double lip_cells = 0.0;
    for (const auto& p : patches) {
      pams.push_back(p.pam);
      lip_cells = std::max(lip_cells, p.pam->exact_lipschitz());
    }
    rep.lip_cells = lip_cells;
    spec.patches = std::move(patches);
    spec.delta = delta;
    GlueOptions gopt;
    gopt.seed = mix_seed(seed, 0x61);
    result.map = std::make_shared<GluedMap>(glue_patches(std::move(spec), std::max(lip_f, lip_cells), gopt));
    rep.lip_bound = result.map->lipschitz_bound();
  }

  rep.patches = static_cast<int>(pams.size());
  rep.min_cell_vol = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pams.size(); ++i) {
    const auto& pam = *pams[i];
    const auto& vols = pam.combo_stats().vols;
    rep.cells += pam.cell_count();
    rep.min_cell_vol = std::min(rep.min_cell_vol, *std::min_element(vols.begin(), vols.end()));
    const Box& S = *result.map->spec().patches[i].box;
    rep.integral += pam.integrate(E.clipped(S), [&](std::size_t c) { return vols[c]; });
  }
  rep.achieved = rep.integral >= rep.target * (1.0 - 1e-12);

  const int samples = std::max(0, options.check_samples);
  constexpr int kChunk = 256;
  const int chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> worst(static_cast<std::size_t>(chunks), 0.0);
  const GluedMap& g = *result.map;
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng local(mix_seed(seed, 0x5A000 + c));
    const int count = std::min(kChunk, samples - static_cast<int>(c) * kChunk);
    for (int s = 0; s < count; ++s) {
      const Vec x = E.sample(local);
      worst[c] = std::max(worst[c], b(g(x) - f(x)));
    }
  });
  for (double w : worst) rep.sup_distance = std::max(rep.sup_distance, w);
  return result;
}

double lsc_margin(const Mat& A, double eta) {
  const int n = static_cast<int>(A.cols());
  require(n >= 1 && A.rows() >= n, "lsc_margin needs an m x n map with n <= m", "A");
  require(eta > std::pow(2.0, -n) && eta < 1.0, "eta must lie in (2^-n, 1)", "eta");
  require(is_full_rank(A), "lsc_margin needs a full-rank map", "A");
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()[n - 1] * (1.0 - std::pow(eta, 1.0 / n)) / 2.0;
}

double balls_epsilon(double K, double delta, long long N) {
  require(K > 0.0 && std::isfinite(K), "K must be positive", "K");
  require(delta > 0.0 && std::isfinite(delta), "delta must be positive", "delta");
  require(N >= 1, "N must be a positive integer", "N");
  return delta / (K * static_cast<double>(N));
}

}  // namespace inflab
