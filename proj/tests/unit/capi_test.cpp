#include "inflate_lab.h"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <string>

using nlohmann::json;

TEST_CASE("run a config through the C interface") {
  const char* cfg = R"({"command": "check-inflation", "seed": 1, "params": {"map": {"entries": [[1, 0], [0, 1]],
      "domain_norm": {"dim": 2, "kind": "euclidean"}, "codomain_norm": {"dim": 2, "kind": "euclidean"}}}})";
  inflab_report* r = nullptr;
  REQUIRE(inflab_run(cfg, &r) == INFLAB_OK);
  REQUIRE(r != nullptr);
  CHECK(inflab_report_status(r) == INFLAB_OK);
  CHECK(inflab_report_error(r) == nullptr);
  CHECK(inflab_last_error() == nullptr);
  const json doc = json::parse(inflab_report_json(r));
  CHECK(doc["command"] == "check-inflation");
  CHECK(doc["result"]["verified"] == true);
  CHECK(std::string(inflab_report_output_format(r)) == "json");
  inflab_report_free(r);
}

TEST_CASE("malformed configs report precondition errors") {
  inflab_report* r = nullptr;
  CHECK(inflab_run("{not json", &r) == INFLAB_PRECONDITION);
  CHECK(r == nullptr);
  REQUIRE(inflab_last_error() != nullptr);
  CHECK(json::parse(inflab_last_error())["error"] == "precondition");

  CHECK(inflab_run(R"({"command": "mv", "params": {"u": [1, 0]}})", &r) == INFLAB_PRECONDITION);
  REQUIRE(r != nullptr);
  CHECK(json::parse(inflab_report_error(r))["field"] == "/params/a");
  inflab_report_free(r);

  CHECK(inflab_run(R"({"command": "mv"})", nullptr) == INFLAB_PRECONDITION);
}

TEST_CASE("numerical failures keep a partial report") {
  const char* cfg = R"({"command": "check-inflation", "params": {"lambda": 3, "method": "euclidean", "map": {"entries": [[1, 0], [0, 1]],
      "domain_norm": {"dim": 2, "kind": "euclidean"}, "codomain_norm": {"dim": 2, "kind": "euclidean"}}}})";
  inflab_report* r = nullptr;
  CHECK(inflab_run(cfg, &r) == INFLAB_NUMERICAL);
  REQUIRE(r != nullptr);
  CHECK(json::parse(inflab_report_json(r))["result"]["verified"] == false);
  CHECK(json::parse(inflab_report_error(r))["status"] == 3);
  inflab_report_free(r);
}

TEST_CASE("config validation normalizes") {
  char* out = nullptr;
  REQUIRE(inflab_validate_config(R"({"command": "calibrate"})", &out) == INFLAB_OK);
  const json j = json::parse(out);
  inflab_string_free(out);
  CHECK(j["seed"] == 0);
  CHECK(j["output"]["format"] == "json");
  CHECK(inflab_validate_config(R"({"command": "calibrate", "extra": 1})", nullptr) == INFLAB_PRECONDITION);
}

TEST_CASE("norm handles") {
  inflab_norm* n = nullptr;
  REQUIRE(inflab_norm_create(R"({"dim": 2, "kind": {"lp": 1}})", &n) == INFLAB_OK);
  CHECK(inflab_norm_dim(n) == 2);
  const double x[2] = {0.5, -1.0};
  double v = 0.0;
  CHECK(inflab_norm_eval(n, x, 2, &v) == INFLAB_OK);
  CHECK(v == doctest::Approx(1.5));
  CHECK(inflab_norm_dual(n, x, 2, &v) == INFLAB_OK);
  CHECK(v == doctest::Approx(1.0));
  CHECK(inflab_norm_vol(n, &v) == INFLAB_OK);
  CHECK(v == doctest::Approx(2.0));
  CHECK(inflab_norm_eval(n, x, 3, &v) == INFLAB_PRECONDITION);
  inflab_norm_free(n);
  CHECK(inflab_norm_create(R"({"dim": 2, "kind": {"lp": 0}})", &n) == INFLAB_PRECONDITION);
  CHECK(n == nullptr);
}

TEST_CASE("thread setting") {
  inflab_set_threads(2);
  CHECK(inflab_get_threads() == 2);
  inflab_set_threads(0);
  CHECK(inflab_get_threads() >= 1);
}
