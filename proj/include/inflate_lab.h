#ifndef INFLATE_LAB_H
#define INFLATE_LAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define INFLAB_API __declspec(dllexport)
#else
#define INFLAB_API __attribute__((visibility("default")))
#endif

typedef enum inflab_status {
  INFLAB_OK = 0,
  INFLAB_PRECONDITION = 2, /* invalid input or schema violation */
  INFLAB_NUMERICAL = 3,    /* unverified certificate, failed search */
  INFLAB_INTERNAL = 4
} inflab_status;

typedef struct inflab_report inflab_report;
typedef struct inflab_norm inflab_norm;

INFLAB_API const char* inflab_version(void);

/* JSON error object of the last failing call on this thread, or NULL. */
INFLAB_API const char* inflab_last_error(void);

/* Worker threads for library-internal loops (0 = hardware concurrency).
   Results do not depend on this setting. */
INFLAB_API void inflab_set_threads(int threads);
INFLAB_API int inflab_get_threads(void);

/* Parses and validates an experiment config; on success writes the
   normalized config JSON to *normalized (free with inflab_string_free). */
INFLAB_API inflab_status inflab_validate_config(const char* config_json, char** normalized);
INFLAB_API void inflab_string_free(char* s);

/* Runs an experiment config. *report is set whenever the config could be
   parsed, including numerical failures that produce a partial report. */
INFLAB_API inflab_status inflab_run(const char* config_json, inflab_report** report);

INFLAB_API inflab_status inflab_report_status(const inflab_report* report);
/* Full report document: command, seed, normalized config and result. */
INFLAB_API const char* inflab_report_json(const inflab_report* report);
/* CSV rendering, empty when the command has none. */
INFLAB_API const char* inflab_report_csv(const inflab_report* report);
/* Error object JSON, or NULL on success. */
INFLAB_API const char* inflab_report_error(const inflab_report* report);
/* Output path and format ("json" or "csv") taken from the config. */
INFLAB_API const char* inflab_report_output_path(const inflab_report* report);
INFLAB_API const char* inflab_report_output_format(const inflab_report* report);
INFLAB_API void inflab_report_free(inflab_report* report);

/* Norm handles, built from the same JSON form used in configs. */
INFLAB_API inflab_status inflab_norm_create(const char* norm_json, inflab_norm** norm);
INFLAB_API int inflab_norm_dim(const inflab_norm* norm);
INFLAB_API inflab_status inflab_norm_eval(const inflab_norm* norm, const double* x, size_t n, double* value);
INFLAB_API inflab_status inflab_norm_dual(const inflab_norm* norm, const double* w, size_t n, double* value);
/* 2^n divided by the Lebesgue measure of the unit ball. */
INFLAB_API inflab_status inflab_norm_vol(const inflab_norm* norm, double* value);
INFLAB_API void inflab_norm_free(inflab_norm* norm);

#ifdef __cplusplus
}
#endif

#endif
