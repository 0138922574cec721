#include "inflate_lab.h"

#include "inflab/commands.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct inflab_report {
  inflab_status status = INFLAB_OK;
  std::string json;
  std::string csv;
  std::string error;
  std::string path;
  std::string format;
};

struct inflab_norm {
  inflab::Norm norm;
};

namespace {

thread_local std::string last_error;
thread_local bool has_error = false;

inflab_status set_error(inflab::ExitStatus status, const std::string& message, const std::string& field = {}) {
  last_error = inflab::error_object(status, message, field).dump();
  has_error = true;
  return static_cast<inflab_status>(status);
}

void clear_error() {
  last_error.clear();
  has_error = false;
}

template <class F>
inflab_status guarded(F&& fn) {
  clear_error();
  try {
    return fn();
  } catch (const inflab::PreconditionError& e) {
    return set_error(inflab::ExitStatus::precondition, e.what(), e.field());
  } catch (const inflab::NumericalError& e) {
    return set_error(inflab::ExitStatus::numerical, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(inflab::ExitStatus::internal, "out of memory");
  } catch (const std::exception& e) {
    return set_error(inflab::ExitStatus::internal, e.what());
  }
}

inflab::ExperimentConfig parse_config(const char* text) {
  if (!text) throw inflab::PreconditionError("config is null", "");
  inflab::json j;
  try {
    j = inflab::json::parse(text);
  } catch (const inflab::json::parse_error& e) {
    throw inflab::PreconditionError(std::string("malformed JSON: ") + e.what(), "");
  }
  return inflab::read_experiment_config(j);
}

inflab::Vec to_vec(const double* x, size_t n) {
  inflab::Vec v(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v;
}

}  // namespace

extern "C" {

const char* inflab_version(void) { return "1.0.0"; }

const char* inflab_last_error(void) { return has_error ? last_error.c_str() : nullptr; }

void inflab_set_threads(int threads) { inflab::set_thread_count(threads); }

int inflab_get_threads(void) { return inflab::thread_count(); }

inflab_status inflab_validate_config(const char* config_json, char** normalized) {
  return guarded([&] {
    const auto cfg = parse_config(config_json);
    if (normalized) {
      const std::string s = inflab::to_json(cfg).dump(2);
      *normalized = static_cast<char*>(std::malloc(s.size() + 1));
      if (!*normalized) throw std::bad_alloc();
      std::memcpy(*normalized, s.c_str(), s.size() + 1);
    }
    return INFLAB_OK;
  });
}

void inflab_string_free(char* s) { std::free(s); }

inflab_status inflab_run(const char* config_json, inflab_report** report) {
  if (report) *report = nullptr;
  return guarded([&] {
    if (!report) throw inflab::PreconditionError("report pointer is null", "");
    const auto cfg = parse_config(config_json);
    const inflab::CommandResult res = inflab::run_command(cfg);
    auto* r = new inflab_report;
    r->status = static_cast<inflab_status>(res.status);
    r->path = cfg.output.path;
    r->format = cfg.output.format;
    r->csv = res.csv;
    if (!res.report.is_null()) {
      inflab::json config = inflab::to_json(cfg);
      config.erase("output");
      inflab::json doc{{"command", cfg.command},
                       {"seed", cfg.seed},
                       {"config", config},
                       {"status", static_cast<int>(res.status)},
                       {"result", res.report}};
      r->json = doc.dump(2) + "\n";
    }
    if (res.status != inflab::ExitStatus::ok) {
      r->error = res.error.dump();
      last_error = r->error;
      has_error = true;
    }
    *report = r;
    return r->status;
  });
}

inflab_status inflab_report_status(const inflab_report* report) { return report ? report->status : INFLAB_PRECONDITION; }

const char* inflab_report_json(const inflab_report* report) { return report ? report->json.c_str() : nullptr; }

const char* inflab_report_csv(const inflab_report* report) { return report ? report->csv.c_str() : nullptr; }

const char* inflab_report_error(const inflab_report* report) {
  return report && !report->error.empty() ? report->error.c_str() : nullptr;
}

const char* inflab_report_output_path(const inflab_report* report) { return report ? report->path.c_str() : nullptr; }

const char* inflab_report_output_format(const inflab_report* report) {
  return report ? report->format.c_str() : nullptr;
}

void inflab_report_free(inflab_report* report) { delete report; }

inflab_status inflab_norm_create(const char* norm_json, inflab_norm** norm) {
  if (norm) *norm = nullptr;
  return guarded([&] {
    if (!norm || !norm_json) throw inflab::PreconditionError("null argument", "");
    inflab::json j;
    try {
      j = inflab::json::parse(norm_json);
    } catch (const inflab::json::parse_error& e) {
      throw inflab::PreconditionError(std::string("malformed JSON: ") + e.what(), "");
    }
    *norm = new inflab_norm{inflab::read_norm(j, "")};
    return INFLAB_OK;
  });
}

int inflab_norm_dim(const inflab_norm* norm) { return norm ? norm->norm.dim() : 0; }

inflab_status inflab_norm_eval(const inflab_norm* norm, const double* x, size_t n, double* value) {
  return guarded([&] {
    if (!norm || !x || !value) throw inflab::PreconditionError("null argument", "");
    if (n != static_cast<size_t>(norm->norm.dim())) throw inflab::PreconditionError("dimension mismatch", "");
    *value = norm->norm(to_vec(x, n));
    return INFLAB_OK;
  });
}

inflab_status inflab_norm_dual(const inflab_norm* norm, const double* w, size_t n, double* value) {
  return guarded([&] {
    if (!norm || !w || !value) throw inflab::PreconditionError("null argument", "");
    if (n != static_cast<size_t>(norm->norm.dim())) throw inflab::PreconditionError("dimension mismatch", "");
    *value = norm->norm.dual(to_vec(w, n));
    return INFLAB_OK;
  });
}

inflab_status inflab_norm_vol(const inflab_norm* norm, double* value) {
  return guarded([&] {
    if (!norm || !value) throw inflab::PreconditionError("null argument", "");
    *value = inflab::vol_of_norm(norm->norm);
    return INFLAB_OK;
  });
}

void inflab_norm_free(inflab_norm* norm) { delete norm; }

}  // extern "C"
