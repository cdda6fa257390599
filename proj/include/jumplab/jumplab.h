/* jumplab C API: jump-process simulation, heat-kernel estimation and
 * iterated-logarithm experiments behind opaque handles and error codes.
 *
 * Conventions:
 *   - every function returns a jl_status (JL_OK on success) unless noted;
 *   - out-parameters are written only on JL_OK;
 *   - handles are created by jl_*_create/open and released by jl_*_destroy;
 *   - jl_last_error() returns a thread-local message for the most recent
 *     failure on the calling thread.
 */
#ifndef JUMPLAB_JUMPLAB_H
#define JUMPLAB_JUMPLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t jl_status;

enum {
    JL_OK = 0,
    JL_E_UNKNOWN = 1,
    JL_E_PARSE = 2,         /* config or file syntax */
    JL_E_CONFIG = 3,        /* invariant violation / stale inputs */
    JL_E_MISSING_INPUT = 4, /* an upstream stage output is absent */
    JL_E_DOMAIN = 5,        /* argument outside an operation's domain */
    JL_E_NUMERIC = 6,       /* quadrature or solver failure */
    JL_E_IO = 7,
    JL_E_CHECK_FAILED = 8 /* stage ran; an executed acceptance check failed */
};

typedef struct jl_kernel jl_kernel;
typedef struct jl_experiment jl_experiment;

const char* jl_version(void);
const char* jl_status_name(jl_status s);
/* Message for the last failure on this thread; empty string if none. */
const char* jl_last_error(void);

/* ---- kernels ---------------------------------------------------------- */

/* Build a kernel from flat key=value text (same keys as the config file:
 * kernel.dimension, kernel.alpha, kernel.kappa, kernel.c_tail,
 * kernel.profile.family, kernel.profile.param, kernel.profile.param2,
 * kernel.profile.truncation_radius, kernel.modulation.lo/hi). */
jl_status jl_kernel_create(const char* config_text, jl_kernel** out);
jl_status jl_kernel_create_from_file(const char* path, jl_kernel** out);
void jl_kernel_destroy(jl_kernel* k);

jl_status jl_kernel_eval_j(const jl_kernel* k, double r, double* out);
/* Phi(s); *divergent is set to 1 and *out to 0 when the defining integral
 * diverges (constant profile). */
jl_status jl_kernel_capital_phi(const jl_kernel* k, double s, double* out, int* divergent);
jl_status jl_kernel_second_moment(const jl_kernel* k, double* out);
jl_status jl_kernel_tail_mass(const jl_kernel* k, double K, double* out);
/* lambda_small, sigma2_small, lambda_big for the cutoff delta. */
jl_status jl_kernel_levy_rates(const jl_kernel* k, double delta, double rates[3]);
jl_status jl_kernel_sample_big_jump_radius(const jl_kernel* k, double u, double* out);
/* Damping-profile audit (the assumption-A booleans) as a JSON document;
 * free with jl_string_free. */
jl_status jl_kernel_check_report_json(const jl_kernel* k, double grid_min, double grid_max,
                                      int grid_points, double gamma, char** out_json);
void jl_string_free(char* s);

/* ---- experiments ------------------------------------------------------ */

jl_status jl_experiment_open(const char* config_path, jl_experiment** out);
jl_status jl_experiment_open_text(const char* config_text, jl_experiment** out);
void jl_experiment_destroy(jl_experiment* e);

jl_status jl_experiment_set_seed(jl_experiment* e, uint64_t seed);
jl_status jl_experiment_set_threads(jl_experiment* e, int threads);
jl_status jl_experiment_set_output_dir(jl_experiment* e, const char* dir);
/* Hex digest of the effective config (seed overrides included). */
jl_status jl_experiment_digest(const jl_experiment* e, char out[17]);

/* stage in {check-kernel, sample-paths, density, bounds, lil, report}.
 * Returns JL_OK when the stage ran and its executed checks passed; any other
 * status is also the recommended process exit code. */
jl_status jl_experiment_run_stage(jl_experiment* e, const char* stage);

#ifdef __cplusplus
}
#endif

#endif /* JUMPLAB_JUMPLAB_H */
