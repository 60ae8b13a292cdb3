#ifndef NEB_CAPI_H
#define NEB_CAPI_H

/* Generated by cbindgen from the neb-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a C API call.
 */
typedef enum {
  NEB_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  NEB_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter value was out of range or inconsistent.
   */
  NEB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The scene failed to load or validate.
   */
  NEB_STATUS_SCENE_ERROR = 3,
  /**
   * The vertex store cannot hold the requested resolution and depth.
   */
  NEB_STATUS_CAPACITY_ERROR = 4,
  /**
   * Rendering failed for another reason.
   */
  NEB_STATUS_RENDER_ERROR = 5,
  /**
   * Writing an output file failed.
   */
  NEB_STATUS_IO_ERROR = 6,
  /**
   * A bug: the library panicked and the panic was contained.
   */
  NEB_STATUS_INTERNAL = 7,
} NebStatus;

/**
 * Opaque handle to a finished render.
 */
typedef struct NebRenderResult NebRenderResult;

/**
 * Opaque handle to a loaded scene.
 */
typedef struct NebScene NebScene;

/**
 * Render settings; fill with [`neb_render_params_default`] first.
 */
typedef struct {
  /**
   * One of `"pt"`, `"neb"`, `"neb+lp"`; NULL selects `"neb"`.
   */
  const char *integrator;
  uint32_t width;
  uint32_t height;
  /**
   * Iteration budget; set to 0 to use `time_seconds` instead.
   */
  uint32_t iterations;
  /**
   * Wall-clock budget; exactly one of the two budgets must be set.
   */
  double time_seconds;
  uint64_t seed;
  /**
   * Worker threads; 0 means all cores.
   */
  uint32_t threads;
  /**
   * Maximum path length in segments.
   */
  uint32_t max_depth;
  /**
   * Merge radius as a fraction of the scene diagonal.
   */
  double radius_scale;
  /**
   * Node budget of the density octree.
   */
  uint32_t octree_capacity;
  /**
   * Light photons per iteration (neb+lp only); 0 means one per pixel.
   */
  uint64_t n_light_photons;
  /**
   * Whether shadowed next-event vertices still count toward density.
   */
  bool count_occluded;
} NebRenderParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the most recent failure on this thread; empty if none.
 * Valid until the next failing call on the same thread.
 */
const char *neb_last_error_message(void);

/**
 * Fill `out` with the library defaults (512×512, 16 iterations, `"neb"`).
 */
NebStatus neb_render_params_default(NebRenderParams *out);

/**
 * Load a scene from a file path or a `builtin:<name>` spec.
 */
NebStatus neb_scene_load(const char *spec, NebScene **out);

void neb_scene_free(NebScene *scene);

/**
 * Render `scene` with `params` and hand back an owned result.
 */
NebStatus neb_render(const NebScene *scene, const NebRenderParams *params, NebRenderResult **out);

void neb_result_free(NebRenderResult *result);

uint32_t neb_result_width(const NebRenderResult *result);

uint32_t neb_result_height(const NebRenderResult *result);

/**
 * Completed iterations (camera samples per pixel).
 */
uint64_t neb_result_iterations(const NebRenderResult *result);

/**
 * Wall-clock render time in seconds.
 */
double neb_result_seconds(const NebRenderResult *result);

/**
 * Linear RGB triples, row major, `3 * width * height` doubles.
 * Valid until the result is freed.
 */
const double *neb_result_pixels(const NebRenderResult *result);

/**
 * Write the result as a little-endian PFM file.
 */
NebStatus neb_result_write_pfm(const NebRenderResult *result, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEB_CAPI_H */
