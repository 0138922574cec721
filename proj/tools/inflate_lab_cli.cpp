#include "inflate_lab.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using json = nlohmann::json;

constexpr int kPrecondition = 2;

struct Options {
  std::string config_path;
  std::string params;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<int> threads;
  bool meta = true;
};

int report_error(int status, const std::string& message, const std::string& field = {}) {
  json e{{"error", status == kPrecondition ? "precondition" : "internal"}, {"message", message}, {"status", status}};
  e["field"] = field.empty() ? json(nullptr) : json(field);
  std::cerr << e.dump() << '\n';
  return status;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  return static_cast<bool>(f);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run(const std::string& command, const Options& opt) {
  json config = json::object();
  if (!opt.config_path.empty()) {
    std::ifstream f(opt.config_path);
    if (!f) return report_error(kPrecondition, "cannot read config file " + opt.config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      config = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      return report_error(kPrecondition, std::string("malformed JSON: ") + e.what());
    }
    if (!config.is_object()) return report_error(kPrecondition, "config must be a JSON object", "");
  }
  if (!command.empty()) config["command"] = command;
  if (!opt.params.empty()) {
    json patch;
    try {
      patch = json::parse(opt.params);
    } catch (const json::parse_error& e) {
      return report_error(kPrecondition, std::string("malformed --params JSON: ") + e.what(), "/params");
    }
    if (!config.contains("params")) config["params"] = json::object();
    config["params"].merge_patch(patch);
  }
  if (opt.seed) config["seed"] = *opt.seed;
  if (!opt.out.empty()) config["output"]["path"] = opt.out;
  if (!opt.format.empty()) config["output"]["format"] = opt.format;

  int threads = 0;
  if (opt.threads) {
    threads = *opt.threads;
  } else if (const char* env = std::getenv("INFLATE_LAB_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      return report_error(kPrecondition, "INFLATE_LAB_THREADS must be an integer");
    }
  }
  if (threads < 0) return report_error(kPrecondition, "thread count must be non-negative");
  inflab_set_threads(threads);

  const auto start = std::chrono::steady_clock::now();
  inflab_report* report = nullptr;
  const inflab_status status = inflab_run(config.dump().c_str(), &report);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!report) {
    const char* err = inflab_last_error();
    std::cerr << (err ? err : "{\"error\":\"internal\"}") << '\n';
    return static_cast<int>(status);
  }

  const std::string format = inflab_report_output_format(report);
  const std::string path = inflab_report_output_path(report);
  const std::string body = format == "csv" && status == INFLAB_OK ? inflab_report_csv(report) : inflab_report_json(report);
  if (!body.empty()) {
    if (path.empty()) {
      std::cout << body;
    } else if (!write_file(path, body)) {
      inflab_report_free(report);
      return report_error(kPrecondition, "cannot write output file " + path, "/output/path");
    }
  }
  if (!path.empty() && opt.meta) {
    json meta{{"timestamp", utc_timestamp()},
              {"elapsed_seconds", elapsed},
              {"threads", inflab_get_threads()},
              {"version", inflab_version()},
              {"status", static_cast<int>(status)}};
    write_file(path + ".meta.json", meta.dump(2) + "\n");
  }
  if (const char* err = inflab_report_error(report)) std::cerr << err << '\n';
  inflab_report_free(report);
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inflation experiments for Lipschitz maps between normed spaces"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Experiment config file (JSON)");
    sub->add_option("--params", opt.params, "JSON object merged into params");
    sub->add_option("--seed", opt.seed, "Seed (overrides the config)");
    sub->add_option("--out", opt.out, "Output file (default: stdout)");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", opt.threads, "Worker threads (fallback: INFLATE_LAB_THREADS)")->check(CLI::NonNegativeNumber);
    sub->add_flag("!--no-meta", opt.meta, "Do not write <out>.meta.json");
  };

  const char* commands[][2] = {
      {"check-inflation", "Find and verify an inflation certificate for a linear map"},
      {"probe-pair", "Sample linear maps and test whether a norm pair is inflating"},
      {"mv", "Maximal volume of (u|V) under the operator-norm constraint"},
      {"inflate", "Inflate a Lipschitz map on a set (or an affine map on a box)"},
      {"glue", "Glue local maps into a global Lipschitz map and check it"},
      {"experiment-positive", "Positive experiment: inflation on a cube"},
      {"experiment-negative", "Negative experiment: adversarial superlevel fractions"},
      {"calibrate", "Box-counting calibration cases"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    add_common(sub);
    sub->callback([&chosen, name = std::string(c[0])] { chosen = name; });
  }
  CLI::App* run_sub = app.add_subcommand("run", "Run the command named in --config");
  add_common(run_sub);
  run_sub->callback([&chosen] { chosen.clear(); });
  bool is_run = false;
  run_sub->preparse_callback([&is_run](std::size_t) { is_run = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(kPrecondition, e.what());
  }
  if (is_run && opt.config_path.empty()) return report_error(kPrecondition, "run needs --config");
  return run(chosen, opt);
}
