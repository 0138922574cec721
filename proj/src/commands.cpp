#include "inflab/commands.hpp"

#include "inflab/random.hpp"

#include <cmath>
#include <sstream>

namespace inflab {

namespace {

const std::string kParams = "/params";

[[noreturn]] void fail(const std::string& what, const std::string& path) { throw PreconditionError(what, path); }

const json& need(const json& params, const char* key) {
  auto it = params.find(key);
  if (it == params.end()) fail(std::string("missing field '") + key + "'", kParams + "/" + key);
  return *it;
}

const json* find(const json& params, const char* key) {
  auto it = params.find(key);
  return it == params.end() ? nullptr : &*it;
}

void allow_only(const json& params, std::initializer_list<const char*> keys) {
  for (auto it = params.begin(); it != params.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) fail("unknown field '" + it.key() + "'", kParams + "/" + it.key());
  }
}

std::string at(const char* key) { return kParams + "/" + key; }

double real(const json& params, const char* key, double fallback) {
  const json* v = find(params, key);
  if (!v) return fallback;
  const double x = read_number(*v, at(key));
  if (!std::isfinite(x)) fail("expected a finite number", at(key));
  return x;
}

int integer(const json& params, const char* key, int fallback, int lo, int hi) {
  const json* v = find(params, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < lo || v->get<long long>() > hi)
    fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]", at(key));
  return v->get<int>();
}

bool boolean(const json& params, const char* key, bool fallback) {
  const json* v = find(params, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail("expected a boolean", at(key));
  return v->get<bool>();
}

std::string text(const json& params, const char* key, const std::string& fallback) {
  const json* v = find(params, key);
  if (!v) return fallback;
  if (!v->is_string()) fail("expected a string", at(key));
  return v->get<std::string>();
}

Norm norm_param(const json& params, const char* key) { return read_norm(need(params, key), at(key)); }

SearchOptions search_param(const json& params, std::uint64_t seed) {
  SearchOptions s;
  s.seed = seed;
  if (const json* v = find(params, "search")) s = read_search_options(*v, at("search"), s);
  return s;
}

bool both_euclidean(const Norm& a, const Norm& b) {
  return a.kind() == NormKind::euclidean && b.kind() == NormKind::euclidean;
}

// Certificate for `map`; euclidean pairs use the singular value construction.
std::optional<InflationCertificate> certify(const LinearMap& map, double lambda, const std::string& method,
                                            const SearchOptions& search, double* best) {
  const bool euclid = both_euclidean(map.domain_norm(), map.codomain_norm());
  if (method == "euclidean" || (method == "auto" && euclid && lambda <= 1.0)) {
    if (!euclid) fail("euclidean method needs euclidean norms", at("method"));
    if (map.domain_dim() > map.codomain_dim()) fail("map must have n <= m", at("map"));
    InflationCertificate c = euclidean_inflation(map);
    if (best) *best = c.verified ? c.lambda : 0.0;
    if (!c.verified || c.lambda < lambda) return std::nullopt;
    return c;
  }
  if (method != "auto" && method != "search") fail("method must be auto, euclidean or search", at("method"));
  return inflation_search(map, lambda, search, best);
}

// ---------------------------------------------------------------------------

CommandResult check_inflation(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  allow_only(p, {"map", "lambda", "method", "search"});
  const LinearMap map = read_linear_map(need(p, "map"), at("map"));
  const double lambda = real(p, "lambda", 1.0);
  if (!(lambda > 0.0)) fail("lambda must be positive", at("lambda"));
  const std::string method = text(p, "method", "auto");
  double best = 0.0;
  const auto cert = certify(map, lambda, method, search_param(p, mix_seed(cfg.seed, 1)), &best);

  CommandResult out;
  out.report = json{{"lambda", number(lambda)},
                    {"method", method},
                    {"operator_norm", number(operator_norm(map).upper)},
                    {"verified", cert.has_value()},
                    {"best_lambda", number(best)},
                    {"certificate", cert ? to_json(*cert) : json(nullptr)}};
  if (!cert) {
    out.status = ExitStatus::numerical;
    out.error = error_object(out.status, "no verified certificate found for the requested lambda");
  }
  return out;
}

CommandResult probe_pair(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  allow_only(p, {"a", "b", "lambda", "samples", "search"});
  const Norm a = norm_param(p, "a");
  const Norm b = norm_param(p, "b");
  const double lambda = real(p, "lambda", 1.0);
  const int samples = integer(p, "samples", 100, 1, 1000000);
  const PairProbeReport rep = inflating_pair_probe(a, b, lambda, samples, mix_seed(cfg.seed, 2),
                                                   search_param(p, mix_seed(cfg.seed, 3)));
  CommandResult out;
  out.report = to_json(rep);
  std::ostringstream csv;
  csv << "index,best_lambda\n";
  for (const auto& f : rep.failures) csv << f.index << ',' << number(f.best_lambda).dump() << '\n';
  out.csv = csv.str();
  return out;
}

CommandResult max_volume_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  allow_only(p, {"u", "a", "b", "restarts", "iterations", "allow_analytic", "usc"});
  const Norm a = norm_param(p, "a");
  const Norm b = norm_param(p, "b");
  const Vec u = read_vector(need(p, "u"), at("u"));
  if (u.size() != b.dim()) fail("u must have the codomain dimension", at("u"));
  MvOptions opt;
  opt.restarts = integer(p, "restarts", opt.restarts, 1, 100000);
  opt.iterations = integer(p, "iterations", opt.iterations, 0, 1000000);
  opt.allow_analytic = boolean(p, "allow_analytic", true);
  opt.seed = mix_seed(cfg.seed, 4);
  const MvResult res = max_volume(u, a, b, opt);

  CommandResult out;
  out.report = json{{"mv", to_json(res)}, {"value", number(res.value)}};
  const double un = b(u);
  if (un > 0.0) out.report["u_extremal"] = to_json(analyze_extremal(b, u / un));
  const Vec e1 = Vec::Unit(a.dim(), 0);
  out.report["e1_extremal"] = to_json(analyze_extremal(a, e1 / a(e1)));
  if (const json* usc = find(p, "usc")) {
    const std::string up = at("usc");
    if (!usc->is_object()) fail("expected an object", up);
    const double delta = usc->contains("delta") ? read_number((*usc)["delta"], up + "/delta") : 0.01;
    const int trials = usc->contains("trials") ? read_number((*usc)["trials"], up + "/trials") : 8;
    if (!(delta > 0.0)) fail("delta must be positive", up + "/delta");
    if (trials < 1) fail("trials must be positive", up + "/trials");
    out.report["usc"] = to_json(usc_probe(u, a, b, delta, trials, mix_seed(cfg.seed, 5), opt));
  }
  return out;
}

std::string patch_cells_csv(const GluedMap& g) {
  std::ostringstream os;
  bool header = false;
  const auto& patches = g.spec().patches;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (!patches[i].pam) continue;
    std::istringstream rows(cells_csv(*patches[i].pam));
    std::string line;
    std::getline(rows, line);
    if (!header) os << "patch," << line << '\n';
    header = true;
    while (std::getline(rows, line)) os << i << ',' << line << '\n';
  }
  return os.str();
}

CommandResult inflate_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const std::string mode = text(p, "mode", "set");
  CommandResult out;
  if (mode == "affine") {
    allow_only(p, {"mode", "map", "offset", "E", "eps", "lambda", "method", "search", "samples"});
    const LinearMap map = read_linear_map(need(p, "map"), at("map"));
    const Norm& a = map.domain_norm();
    const Norm& b = map.codomain_norm();
    Vec offset = Vec::Zero(map.codomain_dim());
    if (const json* v = find(p, "offset")) offset = read_vector(*v, at("offset"));
    if (offset.size() != map.codomain_dim()) fail("offset must have the codomain dimension", at("offset"));
    const Box E = read_box(need(p, "E"), at("E"));
    if (E.dim() != map.domain_dim()) fail("E must have the domain dimension", at("E"));
    const double eps = real(p, "eps", 0.1);
    if (!(eps > 0.0)) fail("eps must be positive", at("eps"));
    const double lambda = real(p, "lambda", 1.0);
    if (!is_full_rank(map.matrix())) fail("linear part must have full rank", at("map"));
    const double L0 = operator_norm(map).upper;
    if (L0 > 1.0 + 1e-12) fail("linear part must have operator norm at most 1", at("map"));
    double best = 0.0;
    const auto cert = certify(map.with_matrix(map.matrix() / L0), lambda, text(p, "method", "auto"),
                              search_param(p, mix_seed(cfg.seed, 6)), &best);
    if (!cert) {
      out.status = ExitStatus::numerical;
      out.report = json{{"verified", false}, {"best_lambda", number(best)}};
      out.error = error_object(out.status, "no verified certificate found for the normalized linear part");
      return out;
    }
    const PiecewiseAffineMap g = inflate_affine(map.matrix(), offset, *cert, E, eps, a, b, L0);
    const Region R = Region::box(E);
    double min_vol = std::numeric_limits<double>::infinity();
    for (double v : g.combo_stats().vols) min_vol = std::min(min_vol, v);
    const int samples = integer(p, "samples", 10000, 1, 10000000);
    Rng rng(mix_seed(cfg.seed, 7));
    double sup = 0.0;
    for (int s = 0; s < samples; ++s) {
      const Vec x = rng.in_box(E);
      sup = std::max(sup, b(g(x) - map.matrix() * x - offset));
    }
    out.report = json{{"certificate", to_json(*cert)},
                      {"operator_norm", number(L0)},
                      {"lip_exact", number(g.exact_lipschitz())},
                      {"min_cell_vol", number(min_vol)},
                      {"jacobian_integral", to_json(jacobian_integral(g, R))},
                      {"sup_distance", number(sup)},
                      {"map", to_json(g)}};
    out.csv = cells_csv(g);
    return out;
  }
  if (mode != "set") fail("mode must be set or affine", at("mode"));
  allow_only(p, {"mode", "E", "a", "b", "m", "f", "lambda", "eta", "eps", "sigma", "max_depth", "max_patches", "search",
                 "check_samples"});
  json pc = p;
  pc.erase("mode");
  PositiveConfig c = read_positive_config(pc, kParams);
  if (c.eps.size() != 1) fail("inflate takes a single eps", at("eps"));
  c.inflate.search.seed = mix_seed(cfg.seed, 8);
  const LipschitzMap f = make_map(c.f, c.E.dim(), c.b.dim(), c.a, c.b);
  const InflateResult res = inflate_on_set(f, c.E, c.a, c.b, c.lambda, c.eps[0], c.eta, cfg.seed, c.inflate);
  json patches = json::array();
  for (const auto& patch : res.map->spec().patches) {
    json pj{{"rho", number(patch.rho)}};
    pj["box"] = patch.box ? to_json(*patch.box) : json(nullptr);
    if (patch.pam) pj["map"] = to_json(*patch.pam, 0);
    patches.push_back(std::move(pj));
  }
  out.report = json{{"report", to_json(res.report)}, {"patches", patches}};
  out.csv = patch_cells_csv(*res.map);
  return out;
}

CommandResult glue_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  allow_only(p, {"a", "b", "base", "L", "delta", "patches", "domain", "samples", "pairs"});
  PatchSpec spec;
  spec.a = norm_param(p, "a");
  spec.b = norm_param(p, "b");
  const int n = spec.a.dim(), m = spec.b.dim();
  spec.base = make_map(read_map_spec(need(p, "base"), at("base")), n, m, spec.a, spec.b);
  spec.delta = real(p, "delta", 0.0);
  if (!(spec.delta > 0.0)) fail("delta must be positive", at("delta"));
  const double L = real(p, "L", spec.base.lipschitz);
  const json& list = need(p, "patches");
  if (!list.is_array() || list.empty()) fail("expected a non-empty array of patches", at("patches"));
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string pp = at("patches") + "/" + std::to_string(i);
    const json& pj = list[i];
    if (!pj.is_object()) fail("expected an object", pp);
    Patch patch;
    if (pj.contains("box")) {
      patch.box = read_box(pj["box"], pp + "/box");
      if (patch.box->dim() != n) fail("box dimension differs from the domain", pp + "/box");
    } else if (pj.contains("points")) {
      const json& pts = pj["points"];
      if (!pts.is_array() || pts.empty()) fail("expected a non-empty array of points", pp + "/points");
      for (std::size_t k = 0; k < pts.size(); ++k) {
        Vec x = read_vector(pts[k], pp + "/points/" + std::to_string(k));
        if (x.size() != n) fail("point dimension differs from the domain", pp + "/points/" + std::to_string(k));
        patch.points.push_back(std::move(x));
      }
    } else {
      fail("patch needs box or points", pp);
    }
    if (!pj.contains("rho")) fail("missing field 'rho'", pp + "/rho");
    patch.rho = read_number(pj["rho"], pp + "/rho");
    if (!pj.contains("map")) fail("missing field 'map'", pp + "/map");
    const LipschitzMap gi = make_map(read_map_spec(pj["map"], pp + "/map"), n, m, spec.a, spec.b);
    patch.map = gi.eval;
    spec.patches.push_back(std::move(patch));
  }

  GlueOptions opt;
  opt.samples_per_patch = integer(p, "samples", 64, 1, 1000000);
  opt.seed = mix_seed(cfg.seed, 9);
  const GluedMap g = glue_patches(spec, L, opt);

  Box domain;
  if (const json* d = find(p, "domain")) {
    domain = read_box(*d, at("domain"));
    if (domain.dim() != n) fail("domain dimension differs", at("domain"));
  } else {
    domain = Box{Vec::Constant(n, std::numeric_limits<double>::infinity()),
                 Vec::Constant(n, -std::numeric_limits<double>::infinity())};
    for (const auto& patch : g.spec().patches) {
      double reach = 0.0;
      for (int i = 0; i < n; ++i) reach = std::max(reach, spec.a.dual(Vec::Unit(n, i)));
      const double pad = patch.rho * reach;
      auto grow = [&](const Vec& lo, const Vec& hi) {
        domain.lo = domain.lo.cwiseMin(lo - Vec::Constant(n, pad));
        domain.hi = domain.hi.cwiseMax(hi + Vec::Constant(n, pad));
      };
      if (patch.box) grow(patch.box->lo, patch.box->hi);
      for (const auto& x : patch.points) grow(x, x);
    }
  }
  const int pairs = integer(p, "pairs", 20000, 1, 100000000);
  const Region R = Region::box(domain);
  const MeasureReport lip =
      estimate_lipschitz([&g](const Vec& x) { return g(x); }, R, spec.a, spec.b, pairs, mix_seed(cfg.seed, 10));
  Rng rng(mix_seed(cfg.seed, 11));
  double sup = 0.0;
  bool on_patch = true;
  for (int s = 0; s < pairs; ++s) {
    const Vec x = rng.in_box(domain);
    sup = std::max(sup, spec.b(g(x) - spec.base(x)));
  }
  for (const auto& patch : g.spec().patches) {
    if (patch.box) {
      for (int s = 0; s < opt.samples_per_patch; ++s) {
        const Vec x = rng.in_box(*patch.box);
        on_patch = on_patch && g(x) == patch.map(x);
      }
    }
    for (const auto& x : patch.points) on_patch = on_patch && g(x) == patch.map(x);
  }
  const double bound = g.lipschitz_bound();
  CommandResult out;
  out.report = json{{"lipschitz_bound", number(bound)},
                    {"sampled_lipschitz", to_json(lip)},
                    {"sup_distance", number(sup)},
                    {"domain", to_json(domain)},
                    {"matches_patches", on_patch},
                    {"lipschitz_ok", lip.value <= bound + 1e-9},
                    {"distance_ok", sup < spec.delta}};
  return out;
}

CommandResult experiment_positive(const ExperimentConfig& cfg) {
  PositiveConfig c = read_positive_config(cfg.params, kParams);
  c.inflate.search.seed = mix_seed(cfg.seed, 12);
  const PositiveReport rep = run_positive_experiment(c, cfg.seed);
  CommandResult out;
  out.report = to_json(rep);
  out.csv = experiment_csv(rep);
  return out;
}

CommandResult experiment_negative(const ExperimentConfig& cfg) {
  const NegativeConfig c = read_negative_config(cfg.params, kParams);
  const NegativeReport rep = run_negative_experiment(c, cfg.seed);
  CommandResult out;
  out.report = to_json(rep);
  out.csv = experiment_csv(rep);
  return out;
}

// Single-segment axes tracing t ↦ t·q_i give an isometric linear embedding.
PiecewiseAffineMap linear_embedding(const Mat& Q, const Box& E) {
  std::vector<PiecewiseAffineMap::Axis> axes;
  for (int i = 0; i < E.dim(); ++i) {
    PiecewiseAffineMap::Axis ax;
    ax.breaks = {E.lo[i], E.hi[i]};
    ax.slopes = {Q.col(i)};
    ax.slope_index = {0};
    ax.values = {E.lo[i] * Q.col(i), E.hi[i] * Q.col(i)};
    axes.push_back(std::move(ax));
  }
  return PiecewiseAffineMap(E, Mat::Identity(E.dim(), E.dim()), Vec::Zero(Q.rows()), std::move(axes),
                            Norm::euclidean(E.dim()), Norm::euclidean(static_cast<int>(Q.rows())));
}

Mat rotation3(double a, double b, double c) {
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(c, Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return R;
}

CommandResult calibrate(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  allow_only(p, {"box_size", "cases"});
  const double s = real(p, "box_size", 1e-3);
  if (!(s > 0.0) || s > 0.5) fail("box_size must lie in (0, 0.5]", at("box_size"));
  std::vector<std::string> cases = {"segment", "square", "constant"};
  if (const json* v = find(p, "cases")) {
    if (!v->is_array() || v->empty()) fail("expected a non-empty array of case names", at("cases"));
    cases.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string cp = at("cases") + "/" + std::to_string(i);
      if (!(*v)[i].is_string()) fail("expected a case name", cp);
      const auto name = (*v)[i].get<std::string>();
      if (name != "segment" && name != "square" && name != "constant") fail("unknown case '" + name + "'", cp);
      cases.push_back(name);
    }
  }
  json rows = json::array();
  std::ostringstream csv;
  csv << "case,n,m,expected,value,relative_error,passed\n";
  bool all = true;
  for (const auto& name : cases) {
    int n = 0, m = 0;
    double expected = 0.0;
    MeasureReport r;
    if (name == "segment") {
      n = 1, m = 2, expected = 1.0;
      const Vec q = Vec{{std::cos(0.3), std::sin(0.3)}};
      r = boxcount_image_measure([q](const Vec& x) { return Vec(x[0] * q); }, Region::box(Box::cube(1, 0.5)), m, s);
    } else if (name == "square") {
      n = 2, m = 3, expected = 4.0;
      const Box E = Box::cube(2, 1.0);
      r = boxcount_image_measure(linear_embedding(rotation3(0.4, 0.7, 0.2).leftCols(2), E), Region::box(E), s);
    } else {
      n = 2, m = 3, expected = 0.0;
      r = boxcount_image_measure([](const Vec&) { return Vec(Vec::Constant(3, 0.25)); },
                                 Region::box(Box::cube(2, 0.5)), m, s);
    }
    const double err = expected > 0.0 ? std::abs(r.value - expected) / expected : std::abs(r.value);
    const bool ok = err <= 0.02;
    all = all && ok;
    rows.push_back(json{{"case", name},
                        {"n", n},
                        {"m", m},
                        {"expected", number(expected)},
                        {"measure", to_json(r)},
                        {"relative_error", number(err)},
                        {"passed", ok}});
    csv << name << ',' << n << ',' << m << ',' << number(expected).dump() << ',' << number(r.value).dump() << ','
        << number(err).dump() << ',' << (ok ? "true" : "false") << '\n';
  }
  CommandResult out;
  out.report = json{{"box_size", number(s)}, {"cases", rows}, {"all_passed", all}};
  out.csv = csv.str();
  return out;
}

std::string params_field(const std::string& field) {
  if (field.empty() || field[0] == '/') return field;
  return kParams + "/" + field;
}

}  // namespace

json error_object(ExitStatus status, const std::string& message, const std::string& field) {
  static const char* kinds[] = {"ok", "", "precondition", "numerical", "internal"};
  json e{{"error", kinds[static_cast<int>(status)]}, {"message", message}, {"status", static_cast<int>(status)}};
  e["field"] = field.empty() ? json(nullptr) : json(field);
  return e;
}

CommandResult run_command(const ExperimentConfig& config) {
  try {
    if (!config.params.is_object()) fail("params must be an object", kParams);
    CommandResult out;
    const auto& c = config.command;
    if (c == "check-inflation") out = check_inflation(config);
    else if (c == "probe-pair") out = probe_pair(config);
    else if (c == "mv") out = max_volume_cmd(config);
    else if (c == "inflate") out = inflate_cmd(config);
    else if (c == "glue") out = glue_cmd(config);
    else if (c == "experiment-positive") out = experiment_positive(config);
    else if (c == "experiment-negative") out = experiment_negative(config);
    else if (c == "calibrate") out = calibrate(config);
    else fail("unknown command '" + c + "'", "/command");
    if (config.output.format == "csv" && out.csv.empty() && out.status == ExitStatus::ok)
      fail("command " + c + " has no csv output", "/output/format");
    return out;
  } catch (const PreconditionError& e) {
    CommandResult out;
    out.status = ExitStatus::precondition;
    out.error = error_object(out.status, e.what(), params_field(e.field()));
    return out;
  } catch (const NumericalError& e) {
    CommandResult out;
    out.status = ExitStatus::numerical;
    out.error = error_object(out.status, e.what());
    return out;
  } catch (const std::exception& e) {
    CommandResult out;
    out.status = ExitStatus::internal;
    out.error = error_object(out.status, e.what());
    return out;
  }
}

}  // namespace inflab
