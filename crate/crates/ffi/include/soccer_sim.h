#ifndef SOCCER_SIM_H
#define SOCCER_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped whenever a signature or struct layout in this header changes.
 */
#define SS_ABI_VERSION 1

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_BUFFER_LENGTH = 3,
  SS_STATUS_IO = 4,
  SS_STATUS_FORMAT = 5,
  SS_STATUS_INCOMPATIBLE = 6,
  SS_STATUS_EPISODE_FINISHED = 7,
  SS_STATUS_PANIC = 99,
} SsStatus;

/**
 * Opaque batch of environment worlds.
 */
typedef struct SsEnv SsEnv;

/**
 * Opaque loaded policy.
 */
typedef struct SsPolicy SsPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI version of this library; compare with `SS_ABI_VERSION` in the header.
 */
uint32_t ss_abi_version(void);

/**
 * Description of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *ss_last_error_message(void);

/**
 * Creates `num_worlds` worlds from a built-in preset and scenario name
 * (`BS1`…`D3` or `random_train`). `workers <= 1` steps on the calling thread.
 *
 * # Safety
 * `preset` and `scenario` must be NUL-terminated strings; `out` must be writable.
 */
enum SsStatus ss_env_new(const char *preset,
                         const char *scenario,
                         uint32_t num_worlds,
                         uint64_t seed,
                         uint32_t workers,
                         bool auto_reset,
                         struct SsEnv **out);

/**
 * Like [`ss_env_new`] with the configuration given as TOML text.
 *
 * # Safety
 * `config_toml` and `scenario` must be NUL-terminated strings; `out` must be writable.
 */
enum SsStatus ss_env_new_from_toml(const char *config_toml,
                                   const char *scenario,
                                   uint32_t num_worlds,
                                   uint64_t seed,
                                   uint32_t workers,
                                   bool auto_reset,
                                   struct SsEnv **out);

/**
 * # Safety
 * `env` must come from `ss_env_new*` and not be used afterwards; null is ignored.
 */
void ss_env_free(struct SsEnv *env);

/**
 * Observation floats per agent; 0 for a null handle.
 *
 * # Safety
 * `env` must be a live handle or null.
 */
uint32_t ss_env_obs_len(const struct SsEnv *env);

/**
 * # Safety
 * `env` must be a live handle or null.
 */
uint32_t ss_env_num_agents(const struct SsEnv *env);

/**
 * # Safety
 * `env` must be a live handle or null.
 */
uint32_t ss_env_num_worlds(const struct SsEnv *env);

/**
 * Observation layout identifier, owned by the handle.
 *
 * # Safety
 * `env` must be a live handle or null.
 */
const char *ss_env_layout_version(const struct SsEnv *env);

/**
 * Restarts every world and writes `num_worlds · num_agents · obs_len` floats.
 *
 * # Safety
 * `env` must be a live handle; `observations` must hold `observations_len` floats.
 */
enum SsStatus ss_env_reset(struct SsEnv *env, float *observations, size_t observations_len);

/**
 * Steps every world. `actions` holds `num_worlds · num_agents · 5` floats
 * (forward, lateral, angular, kick, stand). `rewards`, `terminated` and
 * `truncated` hold one entry per world. `terminal_observations`, `kicks`
 * (one byte per agent) and `successes` are optional and may be null.
 *
 * # Safety
 * `env` must be a live handle and every non-null buffer must hold the
 * number of elements described above.
 */
enum SsStatus ss_env_step(struct SsEnv *env,
                          const float *actions,
                          float *observations,
                          float *rewards,
                          uint8_t *terminated,
                          uint8_t *truncated,
                          float *terminal_observations,
                          uint8_t *kicks,
                          uint8_t *successes);

/**
 * Loads a policy file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SsStatus ss_policy_load(const char *path, struct SsPolicy **out);

/**
 * # Safety
 * `policy` must come from [`ss_policy_load`] and not be used afterwards; null is ignored.
 */
void ss_policy_free(struct SsPolicy *policy);

/**
 * Input size of the policy; 0 for a null handle.
 *
 * # Safety
 * `policy` must be a live handle or null.
 */
uint32_t ss_policy_input_len(const struct SsPolicy *policy);

/**
 * Fails with `Incompatible` when the policy was built for another layout.
 *
 * # Safety
 * Both handles must be live.
 */
enum SsStatus ss_policy_check_env(const struct SsPolicy *policy, const struct SsEnv *env);

/**
 * Deterministic forward pass; writes 5 floats to `action_out`.
 *
 * # Safety
 * `policy` must be live, `observation` must hold `observation_len` floats
 * and `action_out` must hold 5 floats.
 */
enum SsStatus ss_policy_forward(const struct SsPolicy *policy,
                                const float *observation,
                                size_t observation_len,
                                float *action_out);

/**
 * Student-t confidence interval of the sample mean.
 *
 * # Safety
 * `samples` must hold `n` doubles; `mean_out` and `half_width_out` must be writable.
 */
enum SsStatus ss_student_t_ci(const double *samples,
                              size_t n,
                              double confidence,
                              double *mean_out,
                              double *half_width_out);

/**
 * Runs an evaluation suite and returns the JSON report in `*json_out`,
 * to be released with [`ss_string_free`]. A null `policy` selects the
 * built-in scripted controller. `scenarios` is comma-separated.
 *
 * # Safety
 * `policy` must be live or null; string arguments NUL-terminated; `json_out` writable.
 */
enum SsStatus ss_run_suite_json(const struct SsPolicy *policy,
                                const char *preset,
                                const char *scenarios,
                                uint32_t n_trials,
                                uint64_t base_seed,
                                uint32_t workers,
                                char **json_out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; null is ignored.
 */
void ss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOCCER_SIM_H */
