//! Detector-agnostic multi-object tracking built around a parallel
//! association paradigm: appearance-based and motion-based assignment run
//! side by side, and conflicting matches are resolved by each tracklet's
//! motion level. A training-free residual-attention reconstruction sharpens
//! appearance similarities before matching.
//!
//! The crate also ships the supporting toolchain: MOT-format file I/O,
//! CLEAR/IDF1 evaluation, dataset motion-complexity statistics, a seeded
//! synthetic scenario generator, and a batch CLI (`topictrack`).

pub mod appearance;
pub mod assoc;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod motion;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod simgen;
pub mod tracker;
pub mod types;

pub use appearance::{
    aarm_similarity, appearance_cost_matrix, attention_map, cross_attention, gallery_push,
    reconstruct, AppearanceConfig, AttentionMap, SquareMatrix,
};
pub use assoc::{
    baseline_match, conflict_rate, hungarian_solve, topic_match, ConflictRecord, CostMatrix,
    MatchSet, Paradigm, Resolution, TopicOutcome,
};
pub use error::{Error, Result};
pub use geometry::{iou, motion_level, BoundingBox};
pub use motion::{kf_init, motion_cost_matrix, MotionConfig, MotionState};
pub use io::{
    attach_embeddings, emit_config, emit_detections, emit_embedding_sidecar, emit_ground_truth,
    emit_result_rows, emit_results, format_sig6, gt_to_tracked_boxes, load_config, load_sequence,
    parse_detections, parse_embedding_sidecar, parse_ground_truth, parse_results,
    results_to_tracked_boxes, GtRow, ResultRow, RunConfig, SequenceBundle, SidecarRow,
};
pub use metrics::{
    clear_eval, idf1_eval, intercs, intracs, mmsao, mmso, motion_complexity, motion_intensity,
    representation_report, DatasetStats, EvalReport, FrameBox, RepresentationStats, TrackedBoxes,
};
pub use rng::Rng;
pub use simgen::{
    emit_scenario_config, export, generate, mixed_regimes, parse_scenario_config, scenario_stats,
    DartParams, DetSource, DetectorModel, EmbeddingModel, MotionRegime, Scenario, ScenarioConfig,
    SimFrame,
};
pub use tracker::{
    run_sequence, run_sequence_logged, FrameDiagnostics, FrameResult, TrackOutput, Tracker,
    TrackerConfig,
};
pub use types::{Detection, Embedding, TrackId, TrackState, Tracklet};
