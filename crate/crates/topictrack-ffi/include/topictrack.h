#ifndef TOPICTRACK_H
#define TOPICTRACK_H

/* Generated by cbindgen from topictrack-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Association paradigm selector.
typedef enum TtParadigm {
  TtTopic = 0,
  TtMotionOnly = 1,
  TtAppearanceOnly = 2,
  TtSerialMotionPrimary = 3,
  TtSerialAppearancePrimary = 4,
} TtParadigm;

// Status codes returned by every fallible call.
typedef enum TtStatus {
  TtOk = 0,
  TtNullArgument = 1,
  TtInvalidConfig = 2,
  TtInvalidInput = 3,
  TtBufferTooSmall = 4,
  TtInternal = 5,
} TtStatus;

// Opaque tracker handle.
typedef struct TtTracker TtTracker;

// Tracker parameters. Obtain defaults from `tt_config_default` and adjust.
typedef struct TtConfig {
  // Motion-level threshold gating conflict resolution, in [0, 1].
  double alpha;
  enum TtParadigm paradigm;
  double det_conf_threshold;
  uint32_t min_hits;
  uint32_t max_age;
  uint32_t gallery_capacity;
  double appearance_gate;
  double serial_filter_gate;
  bool use_observation_recovery;
  bool use_direction_consistency;
  double direction_weight;
  bool normalize_reconstructed;
} TtConfig;

// One detection of the current frame, pixel units, top-left + size.
typedef struct TtDetection {
  double x;
  double y;
  double w;
  double h;
  double confidence;
} TtDetection;

// One emitted track box.
typedef struct TtTrack {
  uint64_t id;
  double x;
  double y;
  double w;
  double h;
  double confidence;
} TtTrack;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tt_version(void);

// Default configuration (parallel matching, alpha 0.5).
struct TtConfig tt_config_default(void);

// Thread-local message for the most recent failure on this thread. The
// pointer stays valid until the next failing call on the same thread.
const char *tt_last_error(void);

// Creates a tracker, or returns NULL when `config` is NULL or invalid
// (see `tt_last_error`).
//
// # Safety
// `config`, when non-NULL, must point to a valid `TtConfig`.
struct TtTracker *tt_tracker_new(const struct TtConfig *config);

// Destroys a tracker created by `tt_tracker_new`. NULL is a no-op.
//
// # Safety
// `tracker` must be NULL or a pointer previously returned by
// `tt_tracker_new` that has not been freed yet.
void tt_tracker_free(struct TtTracker *tracker);

// Feeds one frame of detections and collects the confirmed track boxes.
//
// `frame` indices must be strictly increasing and start at 1 or above.
// `embeddings`, when non-NULL, holds `n_detections * dim` doubles in
// row-major order (one `dim`-vector per detection); appearance-using
// paradigms require it. `out_tracks`/`capacity` receive at most
// `n_detections` boxes; the number written goes to `out_count`.
//
// # Safety
// Pointers must honor the stated lengths: `detections` addresses
// `n_detections` elements, `embeddings` (when non-NULL) `n_detections *
// dim` doubles, `out_tracks` `capacity` elements, and `out_count` one
// `usize`. The tracker must not be driven concurrently.
enum TtStatus tt_tracker_step(struct TtTracker *tracker,
                              uint32_t frame,
                              const struct TtDetection *detections,
                              size_t n_detections,
                              const double *embeddings,
                              size_t dim,
                              struct TtTrack *out_tracks,
                              size_t capacity,
                              size_t *out_count);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TOPICTRACK_H */
