#ifndef INVSQ_H
#define INVSQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InvsqStatus {
  INVSQ_STATUS_OK = 0,
  INVSQ_STATUS_NULL_POINTER = 1,
  INVSQ_STATUS_INVALID_ARGUMENT = 2,
  INVSQ_STATUS_CONFIG = 3,
  INVSQ_STATUS_NUMERICS = 4,
  INVSQ_STATUS_NOT_CONVERGED = 5,
  INVSQ_STATUS_IO = 6,
  INVSQ_STATUS_BUFFER_TOO_SMALL = 7,
  INVSQ_STATUS_PANIC = 8,
} InvsqStatus;

// Experiment configuration.
typedef struct InvsqConfig InvsqConfig;

// Radial field sampled on the grid of its model.
typedef struct InvsqField InvsqField;

// Result summary of one experiment run.
typedef struct InvsqManifest InvsqManifest;

// Derived constants of the model (n, a, p).
typedef struct InvsqConstants {
  uintptr_t n;
  double a;
  double p;
  double lambda_n;
  double sigma;
  double nu0;
  double hardy_constant;
  double kinetic_constant;
  bool p_in_range;
  bool scattering_ok;
} InvsqConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *invsq_version(void);

// Copy the calling thread's last error message into `buf` (NUL-terminated).
// Returns the size needed including the NUL, or 0 when there is no error.
uintptr_t invsq_last_error_message(char *buf, uintptr_t len);

void invsq_clear_last_error(void);

enum InvsqStatus invsq_config_default(struct InvsqConfig **out);

// Parse config text (`key = value` lines).
enum InvsqStatus invsq_config_parse(const char *text_ptr, struct InvsqConfig **out);

enum InvsqStatus invsq_config_load(const char *path, struct InvsqConfig **out);

// Set one key; the config is left unchanged on error.
enum InvsqStatus invsq_config_set(struct InvsqConfig *cfg, const char *key, const char *value);

// Canonical text of the config. `needed` (optional) receives the size including the NUL.
enum InvsqStatus invsq_config_to_text(const struct InvsqConfig *cfg,
                                      char *buf,
                                      uintptr_t len,
                                      uintptr_t *needed);

void invsq_config_free(struct InvsqConfig *cfg);

// Run the configured experiment, writing its files into `out_dir`.
//
// When the run fails after the manifest was written (aborted, not converged),
// `*out` still receives that manifest and the failure status is returned;
// otherwise `*out` is set to NULL on failure.
enum InvsqStatus invsq_run(const struct InvsqConfig *cfg,
                           const char *out_dir,
                           struct InvsqManifest **out);

// "ok", "aborted", "not-converged" or "failed"; valid until the manifest is freed.
const char *invsq_manifest_status(const struct InvsqManifest *m);

// Full manifest as JSON; valid until the manifest is freed.
const char *invsq_manifest_json(const struct InvsqManifest *m);

// Named scalar; NaN when the run recorded it as not available.
enum InvsqStatus invsq_manifest_scalar(const struct InvsqManifest *m,
                                       const char *name,
                                       double *out);

enum InvsqStatus invsq_manifest_flag(const struct InvsqManifest *m, const char *name, bool *out);

void invsq_manifest_free(struct InvsqManifest *m);

enum InvsqStatus invsq_constants(uintptr_t n, double a, double p, struct InvsqConstants *out);

// Worst round-trip and Parseval residuals of the transform over the built-in test fields.
enum InvsqStatus invsq_dht_selftest(double nu,
                                    uintptr_t n_modes,
                                    double radius,
                                    uintptr_t dim,
                                    double *roundtrip,
                                    double *parseval);

// Heat kernel of −Δ + a|x|⁻² in three dimensions at angle cos θ = `mu`.
// `condition` (optional) receives the cancellation factor of the angular sum.
enum InvsqStatus invsq_heat_kernel(double a,
                                   double t,
                                   double r,
                                   double rp,
                                   double mu,
                                   double *value,
                                   double *condition);

// Collocation radii of the model grid, written to `nodes[0..n_modes]`.
enum InvsqStatus invsq_grid_nodes(uintptr_t n,
                                  double a,
                                  uintptr_t n_modes,
                                  double radius,
                                  double *nodes,
                                  uintptr_t len);

// Field from samples at the grid nodes (see [`invsq_grid_nodes`]); `im` may be NULL.
enum InvsqStatus invsq_field_create(uintptr_t n,
                                    double a,
                                    double p,
                                    uintptr_t n_modes,
                                    double radius,
                                    const double *re,
                                    const double *im,
                                    struct InvsqField **out);

uintptr_t invsq_field_len(const struct InvsqField *f);

// Copy the samples out; `im` may be NULL.
enum InvsqStatus invsq_field_samples(const struct InvsqField *f,
                                     double *re,
                                     double *im,
                                     uintptr_t len);

// ‖u‖²_{L²}.
enum InvsqStatus invsq_field_mass(const struct InvsqField *f, double *out);

// Energy with nonlinearity coefficient `coupling` (1 for the defocusing equation).
enum InvsqStatus invsq_field_energy(const struct InvsqField *f, double coupling, double *out);

// Apply e^{−itP_a} in place.
enum InvsqStatus invsq_field_propagate(struct InvsqField *f, double t);

// Advance `steps` Strang steps of size `dt` in place.
enum InvsqStatus invsq_field_evolve(struct InvsqField *f,
                                    double dt,
                                    uintptr_t steps,
                                    double coupling);

void invsq_field_free(struct InvsqField *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INVSQ_H */
