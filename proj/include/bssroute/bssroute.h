#ifndef BSSROUTE_H
#define BSSROUTE_H

/* C interface to the bssroute library.
 *
 * Every call returns a bssr_status; on failure bssr_last_error() holds a
 * message for the calling thread. Strings returned through `char**` out
 * parameters are owned by the caller and released with bssr_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BSSR_API __declspec(dllexport)
#else
#define BSSR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bssr_status {
  BSSR_OK = 0,
  BSSR_E_INVALID_ARGUMENT = 1,
  BSSR_E_IO = 2,
  BSSR_E_PARSE = 3,
  BSSR_E_NUMERIC = 4,
  BSSR_E_ROUTING = 5,
  BSSR_E_NOT_FOUND = 6,
  BSSR_E_INTERNAL = 99
} bssr_status;

typedef enum bssr_family {
  BSSR_LOGNORMAL = 0,
  BSSR_GAUSSIAN = 1,
  BSSR_GAMMA = 2
} bssr_family;

typedef struct bssr_session bssr_session;
typedef struct bssr_sample bssr_sample;

/* HTTP GET hook. Return 0 and fill `http_status` and `body` (allocated with
 * malloc; the library frees it) on success, nonzero on transport failure. */
typedef int (*bssr_http_get_fn)(void* user, const char* url, double timeout_s, int* http_status, char** body);

BSSR_API const char* bssr_version(void);
BSSR_API const char* bssr_strerror(bssr_status status);
BSSR_API const char* bssr_last_error(void);
BSSR_API void bssr_string_free(char* s);

/* Requests issued by the built-in HTTP transport since process start. */
BSSR_API int64_t bssr_live_request_count(void);

/* Sessions: options are resolved as defaults < config file < environment
 * (BSSROUTE_ROUTING_URL) < bssr_session_set calls. */
BSSR_API bssr_status bssr_session_create(bssr_session** out);
BSSR_API void bssr_session_destroy(bssr_session* session);
BSSR_API bssr_status bssr_session_set(bssr_session* session, const char* key, const char* value);
BSSR_API bssr_status bssr_session_load_config(bssr_session* session, const char* path);
/* NUL-separated list of option keys, terminated by an empty string. */
BSSR_API const char* bssr_option_names(void);
/* Replaces the HTTP transport; a NULL `fn` restores the built-in one. */
BSSR_API bssr_status bssr_session_set_transport(bssr_session* session, bssr_http_get_fn fn, void* user);

/* Full pipeline; writes the output tree and returns a JSON summary. */
BSSR_API bssr_status bssr_run(bssr_session* session, char** summary_json);
BSSR_API bssr_status bssr_pair_report(bssr_session* session, const char* origin, const char* dest, char** report_json);
BSSR_API bssr_status bssr_routes_fetch(bssr_session* session, char** summary_json);

/* Synthetic data. `truth_json` is {"kind":"single","mode","sigma","n","seed"}
 * or {"kind":"mixture","w1","mode1","mode2","sigma","n","seed"}, with
 * optional "origin"/"dest". Writes a trip CSV to `out_csv`. */
BSSR_API bssr_status bssr_simulate_trips(const char* truth_json, const char* out_csv);
/* Writes the bundled 12-pair scenario (trips, stations, routes) into `dir`. */
BSSR_API bssr_status bssr_emit_scenario(const char* dir);
/* NUL-separated experiment names, terminated by an empty string. */
BSSR_API const char* bssr_experiment_names(void);
/* Zero `replicates` / `n` keep the experiment defaults. */
BSSR_API bssr_status bssr_experiment(const char* name, uint64_t seed, int parallelism, int64_t replicates, int64_t n,
                                     char** report_json, int* passed);

/* Low-level access on a single duration histogram. */
BSSR_API bssr_status bssr_sample_create(const int* minutes, const int64_t* counts, size_t len, bssr_sample** out);
BSSR_API void bssr_sample_destroy(bssr_sample* sample);
/* params receives (mu, sigma), (mean, sd) or (shape, rate). */
BSSR_API bssr_status bssr_fit(const bssr_sample* sample, bssr_family family, double params[2], double* loglik,
                              double* bic);
BSSR_API bssr_status bssr_chi_square(const bssr_sample* sample, bssr_family family, double alpha, double* statistic,
                                     int* dof, double* p_value, int* reject);
BSSR_API bssr_status bssr_mixture(const bssr_sample* sample, uint64_t seed, char** fit_json);
BSSR_API bssr_status bssr_discretized_pmf(bssr_family family, double p1, double p2, int k, double* out);
BSSR_API bssr_status bssr_lognormal_mode(double mu, double sigma, double* out);

#ifdef __cplusplus
}
#endif

#endif
