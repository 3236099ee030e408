/* C interface to the discrepancy-prior library. Every call returns a status code; on failure
 * hdsa_last_error() gives a message for the calling thread. Strings returned through char** are
 * owned by the caller and must be released with hdsa_string_free. */
#ifndef HDSA_H
#define HDSA_H

#include <stdint.h>

#if defined(HDSA_BUILDING_LIBRARY)
#define HDSA_API __attribute__((visibility("default")))
#else
#define HDSA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hdsa_status {
  HDSA_OK = 0,
  HDSA_ERR_INVALID_CONFIG = 1,
  HDSA_ERR_SHAPE = 2,
  HDSA_ERR_ASSEMBLY = 3,
  HDSA_ERR_LINEAR_SOLVE = 4,
  HDSA_ERR_RANK_DEFICIENCY = 5,
  HDSA_ERR_DEGENERATE_FIELD = 6,
  HDSA_ERR_INIT_FAILURE = 7,
  HDSA_ERR_ZERO_DATA = 8,
  HDSA_ERR_DEGENERATE_PERTURBATION = 9,
  HDSA_ERR_INVALID_INPUT = 10,
  HDSA_ERR_OPTIMIZATION_FAILURE = 11,
  HDSA_ERR_CURVATURE = 12,
  HDSA_ERR_CALIBRATION = 13,
  HDSA_ERR_VALIDATION = 14,
  HDSA_ERR_NO_DATA = 15,
  HDSA_ERR_NOT_FOUND = 16,
  HDSA_ERR_UNSUPPORTED_VIEW = 17,
  HDSA_ERR_DEGENERATE_SCALE = 18,
  HDSA_ERR_IO = 19,
  HDSA_ERR_NULL_ARGUMENT = 100,
  HDSA_ERR_INTERNAL = 101
} hdsa_status;

typedef struct hdsa_session hdsa_session;

HDSA_API const char* hdsa_status_name(hdsa_status status);
HDSA_API const char* hdsa_last_error(void);
HDSA_API void hdsa_string_free(char* s);

/* Sessions. scenario_json is a ScenarioConfig document; options_json may be NULL or an object with
 * the init-hyper options (delta_kappa, mc_gamma, mc_eig, seed, eps_t). */
HDSA_API hdsa_status hdsa_session_create(const char* id, const char* scenario_json, const char* options_json,
                                         hdsa_session** out);
HDSA_API void hdsa_session_destroy(hdsa_session* session);
HDSA_API hdsa_status hdsa_session_get_hyperparams(const hdsa_session* session, char** out_json);
HDSA_API hdsa_status hdsa_session_patch_hyperparams(hdsa_session* session, const char* patch_json, char** out_json);
/* seed < 0 uses the session's seed counter. */
HDSA_API hdsa_status hdsa_session_generate_samples(hdsa_session* session, int q, int64_t seed, char** out_json);
HDSA_API hdsa_status hdsa_session_overview(const hdsa_session* session, const char* view, char** out_json);
HDSA_API hdsa_status hdsa_session_inspect(const hdsa_session* session, int64_t i, int64_t k, char** out_json);
HDSA_API hdsa_status hdsa_session_timeseries(const hdsa_session* session, char** out_json);
HDSA_API hdsa_status hdsa_session_posterior(const hdsa_session* session, int n, uint64_t seed, char** out_json);
HDSA_API hdsa_status hdsa_session_export(const hdsa_session* session, char** out_json);

/* One-shot workflows used by the command line tool. */
HDSA_API hdsa_status hdsa_init_hyper(const char* scenario_json, const char* dataset_json, const char* options_json,
                                     char** out_json);
/* Writes {"hyperparams", "dataset", "ensemble"}; options: n_ensemble, seed, and init options. */
HDSA_API hdsa_status hdsa_run(const char* scenario_json, const char* options_json, char** out_json);
/* Prior sample dataset for a scenario; hyper_json may be NULL to use initialized values. */
HDSA_API hdsa_status hdsa_sample(const char* scenario_json, const char* hyper_json, int q, uint64_t seed,
                                 char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* HDSA_H */
