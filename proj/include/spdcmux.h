/*
 * spdcmux: pulsed SPDC source and linear-optical gate simulator with
 * temporal multiplexing analysis.
 *
 * C interface of the shared library. All functions return a status code;
 * results travel through out-parameters. On any non-OK status a thread-local
 * message is available via spdcmux_last_error(). Handles are opaque and must
 * be released with their matching *_free call.
 *
 * Two-qubit matrices cross this interface as 32 doubles: 4x4, row-major,
 * interleaved (re, im), basis order (HH, HV, VH, VV).
 */
#ifndef SPDCMUX_H
#define SPDCMUX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spdcmux_status {
  SPDCMUX_OK = 0,
  SPDCMUX_ERR_INVALID_ARGUMENT = 1,
  SPDCMUX_ERR_CONFIG = 2,
  SPDCMUX_ERR_NUMERICAL = 3,
  SPDCMUX_ERR_IO = 4,
  SPDCMUX_ERR_VALIDATION_FAILED = 5
} spdcmux_status;

typedef struct spdcmux_source spdcmux_source;
typedef struct spdcmux_config spdcmux_config;

const char* spdcmux_version(void);
/* Message of the most recent failure on this thread; never NULL. */
const char* spdcmux_last_error(void);

/* ---- pair sources ----------------------------------------------------- */

spdcmux_status spdcmux_source_create(double lambda_per_pulse, double rep_rate_hz,
                                     int multiplex_factor, spdcmux_source** out);
spdcmux_status spdcmux_source_from_power(double pump_power_mw, double calib_k,
                                         double rep_rate_hz, int multiplex_factor,
                                         spdcmux_source** out);
void spdcmux_source_free(spdcmux_source* source);

double spdcmux_source_lambda(const spdcmux_source* source);
double spdcmux_default_calib_k(void);

/* ---- analytic rate laws ------------------------------------------------ */

spdcmux_status spdcmux_pair_probability(const spdcmux_source* source, int n, double* out);
spdcmux_status spdcmux_coincidence_rate(const spdcmux_source* source, double eta, double* out);
spdcmux_status spdcmux_snr(const spdcmux_source* source, double eta, double* out);
spdcmux_status spdcmux_heralded_joint_rate(const spdcmux_source* forward,
                                           const spdcmux_source* backward, double eta,
                                           double* out);
/* ok = 1 when rep_rate * m <= 1 / window. */
spdcmux_status spdcmux_validate_rep_rate(const spdcmux_source* source, double window_s,
                                         int* ok);

spdcmux_status spdcmux_hom_visibility(double c_dist, double c_indist, double* out);

/* ---- two-qubit metrics -------------------------------------------------- */

spdcmux_status spdcmux_state_fidelity(const double rho[32], const double sigma[32], double* out);
spdcmux_status spdcmux_tangle(const double rho[32], double* out);

/* ---- tomography fit ------------------------------------------------------
 * Reconstructs a density matrix from a 36-setting counts CSV
 * (columns setting_qubit1, setting_qubit2, counts; settings H V D A R L).
 * target may be NULL; fidelity is then reported against (|HD> + |VA>)/sqrt2.
 */
spdcmux_status spdcmux_tomo_fit_csv(const char* csv_path, const double* target_or_null,
                                    double rho_out[32], double* fidelity_out,
                                    double* tangle_out, double* log_likelihood_out);

/* ---- configuration and experiment runners ------------------------------ */

spdcmux_status spdcmux_config_default(spdcmux_config** out);
spdcmux_status spdcmux_config_load(const char* path, spdcmux_config** out);
void spdcmux_config_free(spdcmux_config* config);

/* Supported keys: "truncation", "seed", "workers", "svg" (0/1). */
spdcmux_status spdcmux_config_set_int(spdcmux_config* config, const char* key, long long value);
spdcmux_status spdcmux_config_hash(const spdcmux_config* config, uint64_t* out);

/* name: pn-ratio | hom-scan | cz-state | cz-process | vis-heatmap | validate.
 * Writes the experiment outputs under out_dir. summary_out (optional)
 * receives a one-line description; release it with spdcmux_string_free. */
spdcmux_status spdcmux_run_experiment(const spdcmux_config* config, const char* name,
                                      const char* out_dir, char** summary_out);
spdcmux_status spdcmux_run_tomo_fit(const spdcmux_config* config, const char* counts_csv,
                                    const char* out_dir, char** summary_out);
void spdcmux_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SPDCMUX_H */
