#include "inflab/commands.hpp"

#include <doctest.h>

using namespace inflab;

namespace {

std::string field_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PreconditionError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("norms round-trip through json") {
  Mat W(2, 2);
  W << 1.0, 0.5, 0.0, 2.0;
  const std::vector<Norm> norms = {
      Norm::euclidean(3), Norm::lp(2, 1.5), Norm::lp(2, Norm::kInfinity),
      Norm::polytopal({Vec{{1.0, 0.0}}, Vec{{-1.0, 0.0}}, Vec{{0.5, 1.0}}, Vec{{-0.5, -1.0}}}),
      Norm::transformed(Norm::lp(2, 1.0), W)};
  for (const Norm& a : norms) {
    const json j = to_json(a);
    const Norm b = read_norm(j, "");
    CHECK(a == b);
    CHECK(to_json(b) == j);
  }
  CHECK(to_json(Norm::lp(2, Norm::kInfinity))["kind"]["lp"] == "inf");
}

TEST_CASE("norm errors point at the offending field") {
  CHECK(field_of([] { read_norm(json::parse(R"({"dim": 2})"), "/a"); }) == "/a/kind");
  CHECK(field_of([] { read_norm(json::parse(R"({"dim": 2, "kind": {"lp": 0.3}})"), "/a"); }) == "/a/kind");
  CHECK(field_of([] { read_norm(json::parse(R"({"dim": 2, "kind": "taxicab"})"), "/a"); }) == "/a/kind");
  CHECK(field_of([] { read_norm(json::parse(R"({"dim": "2", "kind": "euclidean"})"), "/a"); }) == "/a/dim");
  CHECK(field_of([] {
          read_norm(json::parse(R"({"dim": 2, "kind": {"polytopal": [[1, 0], [0, "x"]]}})"), "/a");
        }) == "/a/kind/polytopal/1/1");
}

TEST_CASE("linear maps and regions round-trip") {
  const LinearMap m((Mat(3, 2) << 1, 2, 3, 4, 5, 6).finished(), Norm::euclidean(2), Norm::lp(3, 1.0));
  const LinearMap r = read_linear_map(to_json(m), "");
  CHECK(r.matrix() == m.matrix());
  CHECK(r.codomain_norm() == m.codomain_norm());
  CHECK(field_of([] {
          read_linear_map(json::parse(R"({"entries": [[1, 0]], "domain_norm": {"dim": 2, "kind": "euclidean"},
                                          "codomain_norm": {"dim": 2, "kind": "euclidean"}})"),
                          "/map");
        }) == "/map/entries");

  const Region g = Region::grid_mask(Box::cube(2, 1.0), {2, 1}, {true, false});
  const json gj = to_json(g);
  const Region g2 = read_region(gj, "");
  CHECK(g2.measure() == doctest::Approx(2.0));
  CHECK(to_json(g2) == gj);
  CHECK(read_region(json::parse(R"({"lo": [0], "hi": [2]})"), "").measure() == 2.0);
  CHECK(field_of([] { read_region(json::parse(R"({"lo": [0, 1], "hi": [2, 0]})"), "/E"); }) == "/E/hi/1");
}

TEST_CASE("experiment configs round-trip unchanged") {
  const json j = json::parse(R"({"command": "mv", "params": {"u": [1, 0]}, "seed": 12,
                                 "output": {"path": "r.json", "format": "csv"}})");
  const ExperimentConfig c = read_experiment_config(j);
  CHECK(to_json(c) == j);
  const ExperimentConfig d = read_experiment_config(to_json(c));
  CHECK(to_json(d) == to_json(c));
}

TEST_CASE("config schema violations") {
  CHECK(field_of([] { read_experiment_config(json::parse(R"({"command": "fly"})")); }) == "/command");
  CHECK(field_of([] { read_experiment_config(json::parse(R"({"command": "mv", "seed": -1})")); }) == "/seed");
  CHECK(field_of([] { read_experiment_config(json::parse(R"({"command": "mv", "colour": 1})")); }) == "/colour");
  CHECK(field_of([] {
          read_experiment_config(json::parse(R"({"command": "mv", "output": {"format": "xml"}})"));
        }) == "/output/format");
  CHECK(field_of([] { read_experiment_config(json::parse(R"({"seed": 1})")); }) == "/command");
}

TEST_CASE("experiment params use defaults and validate") {
  const PositiveConfig p = read_positive_config(json::object(), "/params");
  CHECK(p.E.measure() == 4.0);
  CHECK(p.b.dim() == 3);
  const PositiveConfig q = read_positive_config(json::parse(R"({"eps": [0.2, 0.1], "m": 4})"), "/params");
  CHECK(q.eps.size() == 2);
  CHECK(q.b.dim() == 4);
  CHECK(field_of([] { read_positive_config(json::parse(R"({"eps": []})"), "/params"); }) == "/params/eps");
  const NegativeConfig n = read_negative_config(json::parse(R"({"restarts": 3, "mv": {"restarts": 2}})"), "/params");
  CHECK(n.restarts == 3);
  CHECK(n.mv.restarts == 2);
  CHECK(n.a == Norm::lp(2, Norm::kInfinity));
}

TEST_CASE("non-finite numbers are written as strings") {
  CHECK(number(Norm::kInfinity) == "inf");
  CHECK(number(-Norm::kInfinity) == "-inf");
  CHECK(number(std::nan("")) == "nan");
  CHECK(read_number(json("inf"), "") == Norm::kInfinity);
  CHECK_THROWS_AS(read_number(json("one"), ""), PreconditionError);
}

TEST_CASE("commands map errors to exit statuses") {
  ExperimentConfig c;
  c.command = "check-inflation";
  c.params = json::parse(R"({"map": {"entries": [[1, 0], [0, 1]], "domain_norm": {"dim": 2, "kind": "euclidean"},
                                     "codomain_norm": {"dim": 2, "kind": "euclidean"}}, "lambda": 1})");
  CommandResult ok = run_command(c);
  CHECK(ok.status == ExitStatus::ok);
  CHECK(ok.report["verified"] == true);

  c.params["lambda"] = 2;
  CommandResult num = run_command(c);
  CHECK(num.status == ExitStatus::numerical);
  CHECK(num.report["verified"] == false);
  CHECK(num.error["error"] == "numerical");

  c.params["map"]["entries"][0][0] = "x";
  CommandResult bad = run_command(c);
  CHECK(bad.status == ExitStatus::precondition);
  CHECK(bad.error["field"] == "/params/map/entries/0/0");

  c.command = "mv";
  c.params = json::parse(R"({"u": [1, 0], "a": {"dim": 2, "kind": {"lp": "inf"}}, "b": {"dim": 2, "kind": "euclidean"}})");
  CommandResult mv = run_command(c);
  CHECK(mv.status == ExitStatus::ok);
  CHECK(mv.report["value"] == 0.0);
  c.output.format = "csv";
  CHECK(run_command(c).error["field"] == "/output/format");
}

TEST_CASE("command reports are deterministic") {
  ExperimentConfig c;
  c.command = "experiment-negative";
  c.seed = 9;
  c.params = json::parse(R"({"eps": [0.5, 0.25], "restarts": 2, "iterations": 30})");
  const std::string a = run_command(c).report.dump();
  set_thread_count(3);
  const std::string b = run_command(c).report.dump();
  set_thread_count(0);
  CHECK(a == b);
}
