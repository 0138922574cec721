#include "inflab/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace inflab {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& path) { throw PreconditionError(what, path); }

const json& member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail("expected an object", path);
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'", path + "/" + key);
  return *it;
}

const json* optional_member(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail("expected an object", path);
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

int read_int(const json& j, const std::string& path, long long lo, long long hi) {
  if (!j.is_number_integer()) fail("expected an integer", path);
  const auto v = j.get<long long>();
  if (v < lo || v > hi) fail("integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", path);
  return static_cast<int>(v);
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail("expected a boolean", path);
  return j.get<bool>();
}

double read_finite(const json& j, const std::string& path) {
  const double v = read_number(j, path);
  if (!std::isfinite(v)) fail("expected a finite number", path);
  return v;
}

template <class F>
void with_optional(const json& params, const char* key, const std::string& path, F&& fn) {
  if (const json* v = optional_member(params, key, path)) fn(*v, path + "/" + key);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail("expected an object", path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) fail("unknown field '" + it.key() + "'", path + "/" + it.key());
  }
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> read_schedule(const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    if (j.empty()) fail("schedule must not be empty", path);
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_finite(j[i], path + "/" + std::to_string(i)));
  } else {
    out.push_back(read_finite(j, path));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Primitives

double read_number(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail("expected a number", path);
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Vec read_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail("expected a non-empty array of numbers", path);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_finite(j[i], path + "/" + std::to_string(i));
  return v;
}

Mat read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail("expected a non-empty array of rows", path);
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) fail("expected a non-empty row", path + "/0");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].size() != cols) fail("rows must have equal length", rp);
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = read_finite(j[r][c], rp + "/" + std::to_string(c));
  }
  return m;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vec(m.row(r).transpose())));
  return out;
}

// ---------------------------------------------------------------------------
// Norms and maps

json to_json(const Norm& norm) {
  json out;
  out["dim"] = norm.dim();
  switch (norm.kind()) {
    case NormKind::euclidean: out["kind"] = "euclidean"; break;
    case NormKind::lp: out["kind"] = json{{"lp", number(norm.p())}}; break;
    case NormKind::polytopal: {
      json pts = json::array();
      for (const auto& p : norm.points()) pts.push_back(to_json(p));
      out["kind"] = json{{"polytopal", pts}};
      break;
    }
    case NormKind::transformed:
      out["kind"] = json{{"transformed", json{{"base", to_json(norm.base())}, {"W", to_json(norm.transform())}}}};
      break;
  }
  return out;
}

Norm read_norm(const json& j, const std::string& path) {
  check_keys(j, path, {"dim", "kind"});
  const int dim = read_int(member(j, "dim", path), path + "/dim", 1, 16);
  const json& kind = member(j, "kind", path);
  const std::string kp = path + "/kind";
  try {
    if (kind.is_string()) {
      const auto s = kind.get<std::string>();
      if (s == "euclidean") return Norm::euclidean(dim);
      fail("unknown norm kind '" + s + "'", kp);
    }
    if (!kind.is_object() || kind.size() != 1) fail("norm kind must be \"euclidean\" or a one-key object", kp);
    if (const json* p = optional_member(kind, "lp", kp)) return Norm::lp(dim, read_number(*p, kp + "/lp"));
    if (const json* pts = optional_member(kind, "polytopal", kp)) {
      if (!pts->is_array() || pts->empty()) fail("polytopal norm needs a list of points", kp + "/polytopal");
      std::vector<Vec> points;
      for (std::size_t i = 0; i < pts->size(); ++i) {
        Vec v = read_vector((*pts)[i], kp + "/polytopal/" + std::to_string(i));
        if (v.size() != dim) fail("point dimension differs from dim", kp + "/polytopal/" + std::to_string(i));
        points.push_back(std::move(v));
      }
      return Norm::polytopal(std::move(points));
    }
    if (const json* t = optional_member(kind, "transformed", kp)) {
      const std::string tp = kp + "/transformed";
      check_keys(*t, tp, {"base", "W"});
      Norm base = read_norm(member(*t, "base", tp), tp + "/base");
      Mat W = read_matrix(member(*t, "W", tp), tp + "/W");
      if (base.dim() != dim || W.rows() != dim || W.cols() != dim)
        fail("transformed norm dimensions differ from dim", tp);
      return Norm::transformed(base, std::move(W));
    }
  } catch (const PreconditionError& e) {
    if (!e.field().empty() && e.field()[0] == '/') throw;
    throw PreconditionError(e.what(), kp);
  }
  fail("unknown norm kind", kp);
}

json to_json(const LinearMap& map) {
  return json{{"entries", to_json(map.matrix())},
              {"domain_norm", to_json(map.domain_norm())},
              {"codomain_norm", to_json(map.codomain_norm())}};
}

LinearMap read_linear_map(const json& j, const std::string& path) {
  check_keys(j, path, {"entries", "domain_norm", "codomain_norm"});
  Mat entries = read_matrix(member(j, "entries", path), path + "/entries");
  Norm a = read_norm(member(j, "domain_norm", path), path + "/domain_norm");
  Norm b = read_norm(member(j, "codomain_norm", path), path + "/codomain_norm");
  if (entries.cols() != a.dim()) fail("entries must have domain_norm.dim columns", path + "/entries");
  if (entries.rows() != b.dim()) fail("entries must have codomain_norm.dim rows", path + "/entries");
  return LinearMap(std::move(entries), std::move(a), std::move(b));
}

json to_json(const Box& box) { return json{{"lo", to_json(box.lo)}, {"hi", to_json(box.hi)}}; }

Box read_box(const json& j, const std::string& path) {
  check_keys(j, path, {"lo", "hi"});
  Box b{read_vector(member(j, "lo", path), path + "/lo"), read_vector(member(j, "hi", path), path + "/hi")};
  if (b.lo.size() != b.hi.size()) fail("lo and hi must have the same length", path + "/hi");
  for (Eigen::Index k = 0; k < b.lo.size(); ++k)
    if (b.lo[k] > b.hi[k]) fail("lo must not exceed hi", path + "/hi/" + std::to_string(k));
  return b;
}

json to_json(const Region& region) {
  if (const auto* mask = region.mask()) {
    json m = json::array();
    for (bool v : *mask) m.push_back(v ? 1 : 0);
    return json{{"grid", json{{"lo", to_json(region.bounds().lo)},
                              {"hi", to_json(region.bounds().hi)},
                              {"counts", *region.mask_counts()},
                              {"mask", m}}}};
  }
  return json{{"box", to_json(region.bounds())}};
}

Region read_region(const json& j, const std::string& path) {
  if (j.is_object() && j.contains("grid")) {
    check_keys(j, path, {"grid"});
    const json& g = j["grid"];
    const std::string gp = path + "/grid";
    check_keys(g, gp, {"lo", "hi", "counts", "mask"});
    Box bounds = read_box(json{{"lo", member(g, "lo", gp)}, {"hi", member(g, "hi", gp)}}, gp);
    const json& counts = member(g, "counts", gp);
    if (!counts.is_array()) fail("counts must be an array", gp + "/counts");
    std::vector<int> c;
    for (std::size_t i = 0; i < counts.size(); ++i) c.push_back(read_int(counts[i], gp + "/counts/" + std::to_string(i), 1, 1 << 20));
    const json& mask = member(g, "mask", gp);
    if (!mask.is_array()) fail("mask must be an array", gp + "/mask");
    std::vector<bool> m;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const json& v = mask[i];
      if (v.is_boolean()) m.push_back(v.get<bool>());
      else m.push_back(read_int(v, gp + "/mask/" + std::to_string(i), 0, 1) == 1);
    }
    try {
      return Region::grid_mask(std::move(bounds), std::move(c), std::move(m));
    } catch (const PreconditionError& e) {
      throw PreconditionError(e.what(), gp);
    }
  }
  if (j.is_object() && j.contains("box")) {
    check_keys(j, path, {"box"});
    return Region::box(read_box(j["box"], path + "/box"));
  }
  return Region::box(read_box(j, path));
}

MapSpec read_map_spec(const json& j, const std::string& path) {
  MapSpec spec;
  const json obj = j.is_string() ? json{{"kind", j}} : j;
  check_keys(obj, path, {"kind", "matrix", "offset", "scale"});
  const json& kind = member(obj, "kind", path);
  if (!kind.is_string()) fail("map kind must be a string", path + "/kind");
  const auto k = kind.get<std::string>();
  if (k == "zero") spec.kind = MapKind::zero;
  else if (k == "linear") spec.kind = MapKind::linear;
  else if (k == "abs_linear") spec.kind = MapKind::abs_linear;
  else if (k == "sine") spec.kind = MapKind::sine;
  else fail("unknown map kind '" + k + "'", path + "/kind");
  if (spec.kind != MapKind::zero) spec.matrix = read_matrix(member(obj, "matrix", path), path + "/matrix");
  with_optional(obj, "offset", path, [&](const json& v, const std::string& p) { spec.offset = read_vector(v, p); });
  with_optional(obj, "scale", path, [&](const json& v, const std::string& p) { spec.scale = read_finite(v, p); });
  return spec;
}

json to_json(const MapSpec& spec) {
  static const char* names[] = {"zero", "linear", "abs_linear", "sine"};
  json out{{"kind", names[static_cast<int>(spec.kind)]}};
  if (spec.kind != MapKind::zero) out["matrix"] = to_json(spec.matrix);
  if (spec.offset.size() > 0) out["offset"] = to_json(spec.offset);
  if (spec.kind == MapKind::sine) out["scale"] = number(spec.scale);
  return out;
}

// ---------------------------------------------------------------------------
// Linear analysis and mv

json to_json(const VerificationReport& r) {
  json out{{"verified", r.verified},
           {"non_shrinking", r.non_shrinking},
           {"worst_sign_norm", number(r.worst_sign_norm)},
           {"min_sign_vol", number(r.min_sign_vol)},
           {"reason", r.reason}};
  out["failing_pattern"] = r.failing_pattern ? to_json(*r.failing_pattern) : json(nullptr);
  return out;
}

json to_json(const InflationCertificate& c) {
  json pre = json::array();
  for (Eigen::Index i = 0; i < c.preimages.cols(); ++i) pre.push_back(to_json(Vec(c.preimages.col(i))));
  return json{{"preimages", pre},
              {"eigenvalues", to_json(c.eigenvalues)},
              {"lambda", number(c.lambda)},
              {"verified", c.verified},
              {"worst_sign_norm", number(c.worst_sign_norm)},
              {"report", to_json(c.report)}};
}

json to_json(const SearchOptions& o) {
  return json{{"restarts", o.restarts}, {"steps", o.steps}, {"seed", o.seed}};
}

SearchOptions read_search_options(const json& j, const std::string& path, SearchOptions defaults) {
  check_keys(j, path, {"restarts", "steps"});
  with_optional(j, "restarts", path, [&](const json& v, const std::string& p) { defaults.restarts = read_int(v, p, 1, 100000); });
  with_optional(j, "steps", path, [&](const json& v, const std::string& p) { defaults.steps = read_int(v, p, 0, 1000000); });
  return defaults;
}

json to_json(const PairProbeReport& r) {
  json failures = json::array();
  for (const auto& f : r.failures)
    failures.push_back(json{{"index", f.index}, {"entries", to_json(f.entries)}, {"best_lambda", number(f.best_lambda)}});
  return json{{"lambda", number(r.lambda)},
              {"normalized_lambda", number(r.normalized_lambda)},
              {"samples", r.samples},
              {"certified", r.certified},
              {"certified_normalized", r.certified_normalized},
              {"fraction", number(r.fraction)},
              {"fraction_normalized", number(r.fraction_normalized)},
              {"failures", failures}};
}

json to_json(const MvResult& r) {
  return json{{"value", number(r.value)},
              {"best_V", r.best_V.size() > 0 ? to_json(r.best_V) : json::array()},
              {"feasibility_gap", number(r.feasibility_gap)},
              {"restarts_used", r.restarts_used},
              {"analytic", r.analytic}};
}

json to_json(const UscReport& r) {
  json records = json::array();
  for (const auto& x : r.records)
    records.push_back(json{{"eps", number(x.eps)},
                           {"trials_run", x.trials_run},
                           {"skipped", x.skipped},
                           {"worst_value", number(x.worst_value)},
                           {"passed", x.passed}});
  return json{{"base_value", number(r.base_value)},
              {"delta", number(r.delta)},
              {"bound", number(r.bound)},
              {"largest_passing_eps", r.largest_passing_eps ? number(*r.largest_passing_eps) : json(nullptr)},
              {"under_converged", r.under_converged},
              {"records", records}};
}

json to_json(const ExtremalReport& r) {
  return json{{"point", to_json(r.point)},
              {"is_boundary", r.is_boundary},
              {"is_extremal", r.is_extremal},
              {"is_strongly_extremal", r.is_strongly_extremal},
              {"witness_projection", r.witness_projection ? to_json(*r.witness_projection) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Piecewise-affine maps

namespace {

// Affine data y = L x + c of the cell whose t-box starts at tlo.
std::pair<Mat, Vec> cell_affine(const PiecewiseAffineMap& g, std::size_t combo, const Vec& tlo, const Vec& thi) {
  const Mat L = g.linear_part(g.combo(combo));
  Vec c = g.offset();
  for (int i = 0; i < g.dim(); ++i) {
    const auto& ax = g.axes()[static_cast<std::size_t>(i)];
    const std::size_t k = ax.segment_of(0.5 * (tlo[i] + thi[i]));
    c += ax.values[k] - ax.slopes[static_cast<std::size_t>(ax.slope_index[k])] * ax.breaks[k];
  }
  return {L, c};
}

}  // namespace

json to_json(const PiecewiseAffineMap& g, double max_cells) {
  json axes = json::array();
  double segments = 0.0;
  for (const auto& ax : g.axes()) segments += static_cast<double>(ax.segments());
  const bool full_axes = segments <= 200000.0;
  for (const auto& ax : g.axes()) {
    json a{{"segments", ax.segments()}};
    json slopes = json::array();
    for (const auto& s : ax.slopes) slopes.push_back(to_json(s));
    a["slopes"] = slopes;
    if (full_axes) {
      json values = json::array();
      for (const auto& v : ax.values) values.push_back(to_json(v));
      json breaks = json::array();
      for (double b : ax.breaks) breaks.push_back(number(b));
      a["breaks"] = breaks;
      a["slope_index"] = ax.slope_index;
      a["values"] = values;
    } else {
      a["range"] = json::array({number(ax.breaks.front()), number(ax.breaks.back())});
    }
    axes.push_back(std::move(a));
  }
  const auto& stats = g.combo_stats();
  json combos = json::array();
  for (std::size_t c = 0; c < g.combo_count(); ++c)
    combos.push_back(json{{"choice", g.combo(c)},
                          {"linear", to_json(g.linear_part(g.combo(c)))},
                          {"norm", number(stats.norms[c])},
                          {"vol", number(stats.vols[c])}});
  json out{{"domain", to_json(g.domain())},
           {"basis", to_json(g.basis())},
           {"offset", to_json(g.offset())},
           {"domain_norm", to_json(g.domain_norm())},
           {"codomain_norm", to_json(g.codomain_norm())},
           {"cell_count", number(g.cell_count())},
           {"exact_lipschitz", number(g.exact_lipschitz())},
           {"axes", axes},
           {"axes_truncated", !full_axes},
           {"combos", combos}};
  if (g.cell_count() <= max_cells) {
    json cells = json::array();
    g.for_each_cell([&](std::size_t combo, const Vec& tlo, const Vec& thi) {
      auto [L, c] = cell_affine(g, combo, tlo, thi);
      cells.push_back(json{{"combo", combo}, {"t_lo", to_json(tlo)}, {"t_hi", to_json(thi)}, {"linear", to_json(L)}, {"constant", to_json(c)}});
    });
    out["cells"] = cells;
  } else {
    out["cells"] = nullptr;
  }
  return out;
}

std::string cells_csv(const PiecewiseAffineMap& g, double max_cells) {
  std::ostringstream os;
  const int n = g.dim();
  os << "cell,combo";
  for (int i = 0; i < n; ++i) os << ",t_lo" << i;
  for (int i = 0; i < n; ++i) os << ",t_hi" << i;
  os << ",norm,vol\n";
  const auto& stats = g.combo_stats();
  std::size_t index = 0;
  const auto limit = static_cast<std::size_t>(std::max(0.0, max_cells));
  try {
    g.for_each_cell([&](std::size_t combo, const Vec& tlo, const Vec& thi) {
      if (index >= limit) throw std::out_of_range("cap");
      os << index++ << ',' << combo;
      for (int i = 0; i < n; ++i) os << ',' << fmt(tlo[i]);
      for (int i = 0; i < n; ++i) os << ',' << fmt(thi[i]);
      os << ',' << fmt(stats.norms[combo]) << ',' << fmt(stats.vols[combo]) << '\n';
    });
  } catch (const std::out_of_range&) {
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const InflateReport& r) {
  return json{{"trivial", r.trivial},
              {"scaled_f", r.scaled_f},
              {"f_scale", number(r.f_scale)},
              {"measure_E", number(r.measure_E)},
              {"target", number(r.target)},
              {"integral", number(r.integral)},
              {"achieved", r.achieved},
              {"sup_distance", number(r.sup_distance)},
              {"lip_cells", number(r.lip_cells)},
              {"lip_bound", number(r.lip_bound)},
              {"delta", number(r.delta)},
              {"sigma", number(r.sigma)},
              {"depth", r.depth},
              {"patches", r.patches},
              {"cells", number(r.cells)},
              {"min_cell_vol", number(r.min_cell_vol)}};
}

json to_json(const MeasureReport& r) {
  json res = json::object();
  for (const auto& [k, v] : r.resolution) res[k] = number(v);
  return json{{"quantity", to_string(r.quantity)},
              {"value", number(r.value)},
              {"resolution", res},
              {"seed", r.seed},
              {"error_bound", r.error_bound ? number(*r.error_bound) : json(nullptr)},
              {"exact", r.exact ? number(*r.exact) : json(nullptr)}};
}

PositiveConfig read_positive_config(const json& params, const std::string& path) {
  check_keys(params, path,
             {"E", "a", "b", "m", "f", "lambda", "eta", "eps", "box_size", "lipschitz_pairs", "sigma", "max_depth",
              "max_patches", "search", "check_samples"});
  PositiveConfig c;
  with_optional(params, "E", path, [&](const json& v, const std::string& p) { c.E = read_region(v, p); });
  const int n = c.E.dim();
  c.a = Norm::euclidean(n);
  with_optional(params, "a", path, [&](const json& v, const std::string& p) { c.a = read_norm(v, p); });
  int m = 3;
  with_optional(params, "m", path, [&](const json& v, const std::string& p) { m = read_int(v, p, 1, 16); });
  c.b = Norm::euclidean(m);
  with_optional(params, "b", path, [&](const json& v, const std::string& p) { c.b = read_norm(v, p); });
  if (c.a.dim() != n) fail("domain norm dimension must match E", path + "/a");
  with_optional(params, "f", path, [&](const json& v, const std::string& p) { c.f = read_map_spec(v, p); });
  with_optional(params, "lambda", path, [&](const json& v, const std::string& p) { c.lambda = read_finite(v, p); });
  with_optional(params, "eta", path, [&](const json& v, const std::string& p) { c.eta = read_finite(v, p); });
  with_optional(params, "eps", path, [&](const json& v, const std::string& p) { c.eps = read_schedule(v, p); });
  with_optional(params, "box_size", path, [&](const json& v, const std::string& p) { c.box_size = read_finite(v, p); });
  with_optional(params, "lipschitz_pairs", path,
                [&](const json& v, const std::string& p) { c.lipschitz_pairs = read_int(v, p, 1, 100000000); });
  with_optional(params, "sigma", path, [&](const json& v, const std::string& p) { c.inflate.sigma = read_finite(v, p); });
  with_optional(params, "max_depth", path, [&](const json& v, const std::string& p) { c.inflate.max_depth = read_int(v, p, 0, 20); });
  with_optional(params, "max_patches", path,
                [&](const json& v, const std::string& p) { c.inflate.max_patches = read_int(v, p, 1, 1 << 20); });
  with_optional(params, "search", path,
                [&](const json& v, const std::string& p) { c.inflate.search = read_search_options(v, p, c.inflate.search); });
  with_optional(params, "check_samples", path,
                [&](const json& v, const std::string& p) { c.inflate.check_samples = read_int(v, p, 0, 100000000); });
  return c;
}

NegativeConfig read_negative_config(const json& params, const std::string& path) {
  check_keys(params, path,
             {"a", "b", "u", "r", "eps", "extended_eps", "restarts", "grid", "iterations", "control", "mv"});
  NegativeConfig c;
  with_optional(params, "a", path, [&](const json& v, const std::string& p) { c.a = read_norm(v, p); });
  c.b = Norm::euclidean(c.a.dim());
  with_optional(params, "b", path, [&](const json& v, const std::string& p) { c.b = read_norm(v, p); });
  c.u = Vec::Unit(c.b.dim(), 0);
  with_optional(params, "u", path, [&](const json& v, const std::string& p) {
    c.u = read_vector(v, p);
    if (c.u.size() != c.b.dim()) fail("u must have codomain dimension", p);
  });
  with_optional(params, "r", path, [&](const json& v, const std::string& p) { c.r = read_finite(v, p); });
  with_optional(params, "eps", path, [&](const json& v, const std::string& p) { c.eps = read_schedule(v, p); });
  with_optional(params, "extended_eps", path, [&](const json& v, const std::string& p) {
    c.extended_eps = v.is_array() && v.empty() ? std::vector<double>{} : read_schedule(v, p);
  });
  with_optional(params, "restarts", path, [&](const json& v, const std::string& p) { c.restarts = read_int(v, p, 1, 4096); });
  with_optional(params, "grid", path, [&](const json& v, const std::string& p) { c.grid = read_int(v, p, 1, 64); });
  with_optional(params, "iterations", path, [&](const json& v, const std::string& p) { c.iterations = read_int(v, p, 0, 10000000); });
  with_optional(params, "control", path, [&](const json& v, const std::string& p) { c.control = read_bool(v, p); });
  with_optional(params, "mv", path, [&](const json& v, const std::string& p) {
    check_keys(v, p, {"restarts", "iterations", "allow_analytic"});
    with_optional(v, "restarts", p, [&](const json& x, const std::string& q) { c.mv.restarts = read_int(x, q, 1, 100000); });
    with_optional(v, "iterations", p, [&](const json& x, const std::string& q) { c.mv.iterations = read_int(x, q, 0, 1000000); });
    with_optional(v, "allow_analytic", p, [&](const json& x, const std::string& q) { c.mv.allow_analytic = read_bool(x, q); });
  });
  return c;
}

json to_json(const PositiveReport& r) {
  json records = json::array();
  for (const auto& x : r.records)
    records.push_back(json{{"eps", number(x.eps)},
                           {"inflate", to_json(x.inflate)},
                           {"lip_sampled", number(x.lip_sampled)},
                           {"boxcount", x.boxcount ? to_json(*x.boxcount) : json(nullptr)},
                           {"superlevel_fraction", number(x.superlevel_fraction)}});
  return json{{"records", records},
              {"all_achieved", r.all_achieved},
              {"lipschitz_ok", r.lipschitz_ok},
              {"distance_ok", r.distance_ok},
              {"boxcount_soft_check", r.boxcount_soft_check ? json(*r.boxcount_soft_check) : json(nullptr)}};
}

namespace {

json negative_record_json(const NegativeRecord& x) {
  json fr = json::array();
  for (double f : x.restart_fractions) fr.push_back(number(f));
  return json{{"eps", number(x.eps)},
              {"fraction", number(x.fraction)},
              {"best_restart", x.best_restart},
              {"restart_fractions", fr},
              {"sup_distance", number(x.sup_distance)},
              {"lip_exact", number(x.lip_exact)},
              {"jac_integral", number(x.jac_integral)},
              {"control_fraction", x.control_fraction ? number(*x.control_fraction) : json(nullptr)}};
}

}  // namespace

json to_json(const NegativeReport& r) {
  json records = json::array(), extended = json::array();
  for (const auto& x : r.records) records.push_back(negative_record_json(x));
  for (const auto& x : r.extended) extended.push_back(negative_record_json(x));
  return json{{"mv", number(r.mv)},
              {"threshold", number(r.threshold)},
              {"records", records},
              {"extended", extended},
              {"weakly_decreasing", r.weakly_decreasing},
              {"final_small", r.final_small},
              {"control_high", r.control_high ? json(*r.control_high) : json(nullptr)}};
}

std::string experiment_csv(const PositiveReport& r) {
  std::ostringstream os;
  os << "eps,sup_dist,lip_exact,jac_integral,boxcount,superlevel_fraction\n";
  for (const auto& x : r.records)
    os << fmt(x.eps) << ',' << fmt(x.inflate.sup_distance) << ',' << fmt(x.inflate.lip_cells) << ','
       << fmt(x.inflate.integral) << ',' << (x.boxcount ? fmt(x.boxcount->value) : "") << ','
       << fmt(x.superlevel_fraction) << '\n';
  return os.str();
}

std::string experiment_csv(const NegativeReport& r) {
  std::ostringstream os;
  os << "eps,sup_dist,lip_exact,jac_integral,boxcount,superlevel_fraction\n";
  for (const auto* list : {&r.records, &r.extended})
    for (const auto& x : *list)
      os << fmt(x.eps) << ',' << fmt(x.sup_distance) << ',' << fmt(x.lip_exact) << ',' << fmt(x.jac_integral) << ",,"
         << fmt(x.fraction) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment configs

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check-inflation", "probe-pair",          "mv",
                                                 "inflate",         "glue",                "experiment-positive",
                                                 "experiment-negative", "calibrate"};
  return names;
}

json to_json(const ExperimentConfig& c) {
  return json{{"command", c.command},
              {"params", c.params},
              {"seed", c.seed},
              {"output", json{{"path", c.output.path}, {"format", c.output.format}}}};
}

ExperimentConfig read_experiment_config(const json& j) {
  check_keys(j, "", {"command", "params", "seed", "output"});
  ExperimentConfig c;
  const json& cmd = member(j, "command", "");
  if (!cmd.is_string()) fail("command must be a string", "/command");
  c.command = cmd.get<std::string>();
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), c.command) == names.end())
    fail("unknown command '" + c.command + "'", "/command");
  if (const json* p = optional_member(j, "params", "")) {
    if (!p->is_object()) fail("params must be an object", "/params");
    c.params = *p;
  }
  if (const json* s = optional_member(j, "seed", "")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      fail("seed must be a non-negative integer", "/seed");
    c.seed = s->get<std::uint64_t>();
  }
  if (const json* o = optional_member(j, "output", "")) {
    check_keys(*o, "/output", {"path", "format"});
    if (const json* p = optional_member(*o, "path", "/output")) {
      if (!p->is_string()) fail("output path must be a string", "/output/path");
      c.output.path = p->get<std::string>();
    }
    if (const json* f = optional_member(*o, "format", "/output")) {
      if (!f->is_string()) fail("output format must be a string", "/output/format");
      c.output.format = f->get<std::string>();
    }
  }
  if (c.output.format != "json" && c.output.format != "csv") fail("format must be json or csv", "/output/format");
  return c;
}

}  // namespace inflab
