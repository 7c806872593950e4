//! C ABI over the tracker: opaque handle, plain-old-data structs and status
//! codes. The header `include/topictrack.h` is generated by cbindgen at
//! build time.
//!
//! Thread safety: a `TtTracker` must be driven from one thread at a time;
//! distinct trackers are independent. `tt_last_error` returns a
//! thread-local message describing the most recent failure on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use topictrack::assoc::Paradigm;
use topictrack::tracker::{Tracker, TrackerConfig};
use topictrack::types::{Detection, Embedding};
use topictrack::BoundingBox;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<String>) {
    let owned = CString::new(message.into().replace('\0', " "))
        .unwrap_or_else(|_| CString::default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtStatus {
    TtOk = 0,
    TtNullArgument = 1,
    TtInvalidConfig = 2,
    TtInvalidInput = 3,
    TtBufferTooSmall = 4,
    TtInternal = 5,
}

/// Association paradigm selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtParadigm {
    TtTopic = 0,
    TtMotionOnly = 1,
    TtAppearanceOnly = 2,
    TtSerialMotionPrimary = 3,
    TtSerialAppearancePrimary = 4,
}

impl From<TtParadigm> for Paradigm {
    fn from(p: TtParadigm) -> Self {
        match p {
            TtParadigm::TtTopic => Paradigm::Topic,
            TtParadigm::TtMotionOnly => Paradigm::MotionOnly,
            TtParadigm::TtAppearanceOnly => Paradigm::AppearanceOnly,
            TtParadigm::TtSerialMotionPrimary => Paradigm::SerialMotionPrimary,
            TtParadigm::TtSerialAppearancePrimary => Paradigm::SerialAppearancePrimary,
        }
    }
}

/// Tracker parameters. Obtain defaults from `tt_config_default` and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TtConfig {
    /// Motion-level threshold gating conflict resolution, in [0, 1].
    pub alpha: f64,
    pub paradigm: TtParadigm,
    pub det_conf_threshold: f64,
    pub min_hits: u32,
    pub max_age: u32,
    pub gallery_capacity: u32,
    pub appearance_gate: f64,
    pub serial_filter_gate: f64,
    pub use_observation_recovery: bool,
    pub use_direction_consistency: bool,
    pub direction_weight: f64,
    pub normalize_reconstructed: bool,
}

impl TtConfig {
    fn to_tracker_config(self) -> TrackerConfig {
        let mut cfg = TrackerConfig {
            alpha: self.alpha,
            paradigm: self.paradigm.into(),
            det_conf_threshold: self.det_conf_threshold,
            min_hits: self.min_hits,
            max_age: self.max_age,
            serial_filter_gate: self.serial_filter_gate,
            ..TrackerConfig::default()
        };
        cfg.appearance.gallery_capacity = self.gallery_capacity as usize;
        cfg.appearance.appearance_gate = self.appearance_gate;
        cfg.appearance.normalize_reconstructed = self.normalize_reconstructed;
        cfg.motion.use_observation_recovery = self.use_observation_recovery;
        cfg.motion.use_direction_consistency = self.use_direction_consistency;
        cfg.motion.direction_weight = self.direction_weight;
        cfg
    }
}

/// One detection of the current frame, pixel units, top-left + size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TtDetection {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

/// One emitted track box.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TtTrack {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
}

/// Opaque tracker handle.
pub struct TtTracker {
    inner: Tracker,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Default configuration (parallel matching, alpha 0.5).
#[no_mangle]
pub extern "C" fn tt_config_default() -> TtConfig {
    let cfg = TrackerConfig::default();
    TtConfig {
        alpha: cfg.alpha,
        paradigm: TtParadigm::TtTopic,
        det_conf_threshold: cfg.det_conf_threshold,
        min_hits: cfg.min_hits,
        max_age: cfg.max_age,
        gallery_capacity: cfg.appearance.gallery_capacity as u32,
        appearance_gate: cfg.appearance.appearance_gate,
        serial_filter_gate: cfg.serial_filter_gate,
        use_observation_recovery: cfg.motion.use_observation_recovery,
        use_direction_consistency: cfg.motion.use_direction_consistency,
        direction_weight: cfg.motion.direction_weight,
        normalize_reconstructed: cfg.appearance.normalize_reconstructed,
    }
}

/// Thread-local message for the most recent failure on this thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a tracker, or returns NULL when `config` is NULL or invalid
/// (see `tt_last_error`).
///
/// # Safety
/// `config`, when non-NULL, must point to a valid `TtConfig`.
#[no_mangle]
pub unsafe extern "C" fn tt_tracker_new(config: *const TtConfig) -> *mut TtTracker {
    let Some(config) = config.as_ref() else {
        set_last_error("config is NULL");
        return std::ptr::null_mut();
    };
    match Tracker::new(config.to_tracker_config()) {
        Ok(inner) => Box::into_raw(Box::new(TtTracker { inner })),
        Err(e) => {
            set_last_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Destroys a tracker created by `tt_tracker_new`. NULL is a no-op.
///
/// # Safety
/// `tracker` must be NULL or a pointer previously returned by
/// `tt_tracker_new` that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn tt_tracker_free(tracker: *mut TtTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Feeds one frame of detections and collects the confirmed track boxes.
///
/// `frame` indices must be strictly increasing and start at 1 or above.
/// `embeddings`, when non-NULL, holds `n_detections * dim` doubles in
/// row-major order (one `dim`-vector per detection); appearance-using
/// paradigms require it. `out_tracks`/`capacity` receive at most
/// `n_detections` boxes; the number written goes to `out_count`.
///
/// # Safety
/// Pointers must honor the stated lengths: `detections` addresses
/// `n_detections` elements, `embeddings` (when non-NULL) `n_detections *
/// dim` doubles, `out_tracks` `capacity` elements, and `out_count` one
/// `usize`. The tracker must not be driven concurrently.
#[no_mangle]
pub unsafe extern "C" fn tt_tracker_step(
    tracker: *mut TtTracker,
    frame: u32,
    detections: *const TtDetection,
    n_detections: usize,
    embeddings: *const f64,
    dim: usize,
    out_tracks: *mut TtTrack,
    capacity: usize,
    out_count: *mut usize,
) -> TtStatus {
    let Some(tracker) = tracker.as_mut() else {
        set_last_error("tracker is NULL");
        return TtStatus::TtNullArgument;
    };
    let Some(out_count) = out_count.as_mut() else {
        set_last_error("out_count is NULL");
        return TtStatus::TtNullArgument;
    };
    *out_count = 0;
    if n_detections > 0 && detections.is_null() {
        set_last_error("detections is NULL");
        return TtStatus::TtNullArgument;
    }
    if !embeddings.is_null() && dim == 0 {
        set_last_error("dim must be positive when embeddings are supplied");
        return TtStatus::TtInvalidInput;
    }

    let raw = std::slice::from_raw_parts(detections, n_detections);
    let mut dets = Vec::with_capacity(n_detections);
    for (i, d) in raw.iter().enumerate() {
        let bbox = match BoundingBox::new(d.x, d.y, d.w, d.h) {
            Ok(b) => b,
            Err(e) => {
                set_last_error(format!("detection {i}: {e}"));
                return TtStatus::TtInvalidInput;
            }
        };
        let embedding = if embeddings.is_null() {
            None
        } else {
            let row = std::slice::from_raw_parts(embeddings.add(i * dim), dim);
            match Embedding::new(row.to_vec()) {
                Ok(e) => Some(e),
                Err(e) => {
                    set_last_error(format!("embedding {i}: {e}"));
                    return TtStatus::TtInvalidInput;
                }
            }
        };
        match Detection::new(frame, bbox, d.confidence, embedding) {
            Ok(det) => dets.push(det),
            Err(e) => {
                set_last_error(format!("detection {i}: {e}"));
                return TtStatus::TtInvalidInput;
            }
        }
    }

    let result = match tracker.inner.step(frame, &dets) {
        Ok(r) => r,
        Err(e) => {
            set_last_error(e.to_string());
            return TtStatus::TtInvalidInput;
        }
    };
    if result.tracks.len() > capacity {
        set_last_error(format!(
            "output buffer holds {capacity} tracks, need {}",
            result.tracks.len()
        ));
        return TtStatus::TtBufferTooSmall;
    }
    let out = std::slice::from_raw_parts_mut(out_tracks, capacity);
    for (slot, track) in out.iter_mut().zip(&result.tracks) {
        *slot = TtTrack {
            id: track.id.0,
            x: track.bbox.x,
            y: track.bbox.y,
            w: track.bbox.w,
            h: track.bbox.h,
            confidence: track.confidence,
        };
    }
    *out_count = result.tracks.len();
    TtStatus::TtOk
}
