#ifndef TWOBUBBLE_H
#define TWOBUBBLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_UTF8 = 2,
  TB_STATUS_CONFIG = 3,
  TB_STATUS_ACCURACY = 4,
  TB_STATUS_SPECTRAL = 5,
  TB_STATUS_NUMERICAL = 6,
  TB_STATUS_DEGENERATE = 7,
  TB_STATUS_REGIME = 8,
  TB_STATUS_DECOMPOSITION = 9,
  TB_STATUS_CONSTRUCTION = 10,
  TB_STATUS_CHECK_FAILED = 11,
  TB_STATUS_PANIC = 12,
} TbStatus;

// Opaque run configuration.
typedef struct TbConfig TbConfig;

// Opaque radial grid.
typedef struct TbGrid TbGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Free with `tb_string_free`.
char *tb_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void tb_string_free(char *s);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer.
enum TbStatus tb_config_new(struct TbConfig **out);

// Parses flat `key=value` text over the defaults.
//
// # Safety
// `text` must be NUL-terminated; `out` must be valid.
enum TbStatus tb_config_parse(const char *text_, struct TbConfig **out);

// Sets one key.
//
// # Safety
// `cfg` must be a live handle; `key` and `value` NUL-terminated.
enum TbStatus tb_config_set(struct TbConfig *cfg, const char *key, const char *value);

// Resolved configuration as JSON.
//
// # Safety
// `cfg` must be a live handle; `out` valid.
enum TbStatus tb_config_json(const struct TbConfig *cfg, char **out);

// # Safety
// `cfg` must come from `tb_config_new` or `tb_config_parse`; null is ignored.
void tb_config_free(struct TbConfig *cfg);

// Closed-form constants as JSON.
//
// # Safety
// `cfg` must be a live handle; `out` valid.
enum TbStatus tb_constants_json(const struct TbConfig *cfg, char **out);

// Eigenpair summary as JSON.
//
// # Safety
// `cfg` must be a live handle; `out` valid.
enum TbStatus tb_eigen_json(const struct TbConfig *cfg, char **out);

// Runs the property suite (`only` may be null) and writes one JSON record per
// line. Returns `CheckFailed` when any check fails; `out` is written either way.
//
// # Safety
// `cfg` must be a live handle; `only` null or NUL-terminated; `out` valid.
enum TbStatus tb_check_jsonl(const struct TbConfig *cfg, const char *only, char **out);

// Reduced modulation law as CSV.
//
// # Safety
// `cfg` must be a live handle; `out` valid.
enum TbStatus tb_ode_csv(const struct TbConfig *cfg, char **out);

// Two-bubble experiment: trajectory CSV and summary JSON.
//
// # Safety
// `cfg` must be a live handle; both outputs valid.
enum TbStatus tb_simulate(const struct TbConfig *cfg, char **out_csv, char **out_json);

// Exit landscape: CSV and summary JSON.
//
// # Safety
// `cfg` must be a live handle; both outputs valid.
enum TbStatus tb_shoot(const struct TbConfig *cfg, char **out_csv, char **out_json);

// Tangent-graded radial grid in dimension `dim`.
//
// # Safety
// `out` must be valid.
enum TbStatus tb_grid_new(uintptr_t dim,
                          double r_max,
                          uintptr_t n_nodes,
                          double scale,
                          struct TbGrid **out);

// Number of nodes, or 0 for null.
//
// # Safety
// `grid` must be null or a live handle.
uintptr_t tb_grid_len(const struct TbGrid *grid);

// Copies up to `cap` node radii into `buf`.
//
// # Safety
// `grid` must be a live handle; `buf` must hold `cap` doubles.
enum TbStatus tb_grid_nodes(const struct TbGrid *grid, double *buf, uintptr_t cap);

// Largest relative residual of the ground-state equation on `[r_lo, r_hi]`.
//
// # Safety
// `grid` must be a live handle; `out` valid.
enum TbStatus tb_grid_w_residual(const struct TbGrid *grid, double r_lo, double r_hi, double *out);

// # Safety
// `grid` must come from `tb_grid_new`; null is ignored.
void tb_grid_free(struct TbGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOBUBBLE_H */
