//! Frame-by-frame tracking pipeline: confidence gating, cost construction,
//! association, tracklet lifecycle and output assembly.

use crate::appearance::{appearance_cost_matrix, gallery_push, AppearanceConfig};
use crate::assoc::{
    baseline_match, topic_match, CostMatrix, MatchSet, Paradigm, TopicOutcome,
};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::motion::{kf_init, motion_cost_matrix, MotionConfig};
use crate::types::{Detection, Embedding, TrackId, TrackState, Tracklet};

/// Full tracker parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Motion-level threshold gating conflict resolution.
    pub alpha: f64,
    pub paradigm: Paradigm,
    pub det_conf_threshold: f64,
    /// Consecutive associations before a tentative track is confirmed.
    pub min_hits: u32,
    /// Missed frames tolerated before a track is removed.
    pub max_age: u32,
    pub motion: MotionConfig,
    pub appearance: AppearanceConfig,
    /// Secondary-feature cost cap for the serial paradigms.
    pub serial_filter_gate: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            paradigm: Paradigm::Topic,
            det_conf_threshold: 0.5,
            min_hits: 2,
            max_age: 30,
            motion: MotionConfig::default(),
            appearance: AppearanceConfig::default(),
            serial_filter_gate: 0.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |ok: bool, key: &str, range: &str, value: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::ConfigRange {
                    key: key.into(),
                    range: range.into(),
                    value,
                })
            }
        };
        range(
            (0.0..=1.0).contains(&self.alpha),
            "alpha",
            "[0,1]",
            self.alpha.to_string(),
        )?;
        range(
            (0.0..=1.0).contains(&self.det_conf_threshold),
            "det_conf_threshold",
            "[0,1]",
            self.det_conf_threshold.to_string(),
        )?;
        range(self.min_hits >= 1, "min_hits", ">= 1", self.min_hits.to_string())?;
        range(self.max_age >= 1, "max_age", ">= 1", self.max_age.to_string())?;
        range(
            self.appearance.gallery_capacity >= 1,
            "gallery_capacity",
            ">= 1",
            self.appearance.gallery_capacity.to_string(),
        )?;
        range(
            (0.0..=1.0).contains(&self.appearance.appearance_gate),
            "appearance_gate",
            "[0,1]",
            self.appearance.appearance_gate.to_string(),
        )?;
        range(
            self.serial_filter_gate >= 0.0,
            "serial_filter_gate",
            ">= 0",
            self.serial_filter_gate.to_string(),
        )?;
        range(
            self.motion.direction_weight >= 0.0 && self.motion.direction_weight.is_finite(),
            "direction_weight",
            ">= 0",
            self.motion.direction_weight.to_string(),
        )?;
        range(
            self.motion.process_noise_scale > 0.0,
            "process_noise_scale",
            "> 0",
            self.motion.process_noise_scale.to_string(),
        )?;
        range(
            self.motion.observation_noise_scale > 0.0,
            "observation_noise_scale",
            "> 0",
            self.motion.observation_noise_scale.to_string(),
        )?;
        Ok(())
    }
}

/// One emitted track box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: TrackId,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Association bookkeeping of one frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameDiagnostics {
    /// Conflicts resolved through the motion-level rule.
    pub conflicts: usize,
    pub appearance_resolutions: usize,
    pub motion_resolutions: usize,
    /// Distinct candidate pairs proposed by the two pre-matching rounds.
    pub candidate_pairs: usize,
    /// Candidate pairs that participated in a conflict.
    pub conflicted_pairs: usize,
}

/// Tracks emitted for one frame plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: u32,
    pub tracks: Vec<TrackOutput>,
    pub diagnostics: FrameDiagnostics,
}

/// Stateful per-sequence tracker. One instance per sequence, single writer.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracklets: Vec<Tracklet>,
    next_id: u64,
    last_frame: u32,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracklets: Vec::new(),
            next_id: 1,
            last_frame: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live tracklets (tentative, confirmed and lost).
    pub fn tracklets(&self) -> &[Tracklet] {
        &self.tracklets
    }

    /// Processes one frame of detections. Frames must arrive strictly
    /// increasing; detections below the confidence threshold are dropped.
    pub fn step(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult> {
        if frame <= self.last_frame {
            return Err(Error::OutOfOrderFrame {
                last: self.last_frame,
                got: frame,
            });
        }
        for det in detections {
            if det.frame != frame {
                return Err(Error::OutOfOrderFrame {
                    last: frame,
                    got: det.frame,
                });
            }
        }
        self.last_frame = frame;

        let kept: Vec<Detection> = detections
            .iter()
            .filter(|d| d.confidence >= self.cfg.det_conf_threshold)
            .cloned()
            .collect();
        if self.cfg.paradigm.uses_appearance() {
            if let Some(missing) = kept.iter().find(|d| d.embedding.is_none()) {
                return Err(Error::MissingEmbedding {
                    frame: missing.frame,
                });
            }
        }

        let (matches, diagnostics) = self.associate(&kept)?;

        // Advance every filter one frame, then correct the matched ones.
        for tracklet in &mut self.tracklets {
            tracklet.motion.predict(&self.cfg.motion);
        }

        let mut matched_tracklets = vec![false; self.tracklets.len()];
        let mut matched_detections = vec![false; kept.len()];
        let mut emitted_ids: Vec<(TrackId, usize)> = Vec::new();
        for &(ti, dj) in &matches.pairs {
            matched_tracklets[ti] = true;
            matched_detections[dj] = true;
            let det = &kept[dj];
            let tracklet = &mut self.tracklets[ti];
            tracklet.motion.update(&det.bbox, &self.cfg.motion);
            tracklet.motion_level = 1.0 - iou(&tracklet.last_box, &det.bbox);
            tracklet.prev_box = Some(tracklet.last_box);
            tracklet.last_box = det.bbox;
            tracklet.hits += 1;
            tracklet.misses = 0;
            match tracklet.state {
                TrackState::Tentative if tracklet.hits >= self.cfg.min_hits => {
                    tracklet.set_state(TrackState::Confirmed);
                }
                TrackState::Lost => tracklet.set_state(TrackState::Confirmed),
                _ => {}
            }
            if let Some(embedding) = &det.embedding {
                gallery_push(tracklet, embedding, &self.cfg.appearance)?;
            }
            if tracklet.state == TrackState::Confirmed {
                emitted_ids.push((tracklet.id, dj));
            }
        }

        for (ti, tracklet) in self.tracklets.iter_mut().enumerate() {
            if matched_tracklets[ti] {
                continue;
            }
            tracklet.misses += 1;
            tracklet.hits = 0;
            if tracklet.state == TrackState::Confirmed {
                tracklet.set_state(TrackState::Lost);
            }
            if tracklet.misses > self.cfg.max_age {
                tracklet.set_state(TrackState::Removed);
            }
        }
        self.tracklets.retain(|t| t.state != TrackState::Removed);

        for (dj, det) in kept.iter().enumerate() {
            if matched_detections[dj] {
                continue;
            }
            let tracklet = self.spawn(det)?;
            if tracklet.state == TrackState::Confirmed {
                emitted_ids.push((tracklet.id, dj));
            }
        }

        let mut tracks: Vec<TrackOutput> = emitted_ids
            .into_iter()
            .map(|(id, dj)| TrackOutput {
                id,
                bbox: kept[dj].bbox,
                confidence: kept[dj].confidence,
            })
            .collect();
        tracks.sort_by_key(|t| t.id);

        Ok(FrameResult {
            frame,
            tracks,
            diagnostics,
        })
    }

    fn associate(&self, kept: &[Detection]) -> Result<(MatchSet, FrameDiagnostics)> {
        let n = self.tracklets.len();
        let m = kept.len();
        if n == 0 || m == 0 {
            return Ok((MatchSet::empty(n, m), FrameDiagnostics::default()));
        }
        let a_cost: Option<CostMatrix> = if self.cfg.paradigm.uses_appearance() {
            Some(appearance_cost_matrix(
                &self.tracklets,
                kept,
                &self.cfg.appearance,
            )?)
        } else {
            None
        };
        let m_cost: Option<CostMatrix> = if self.cfg.paradigm.uses_motion() {
            Some(motion_cost_matrix(&self.tracklets, kept, &self.cfg.motion))
        } else {
            None
        };
        match self.cfg.paradigm {
            Paradigm::Topic => {
                let levels: Vec<f64> = self.tracklets.iter().map(|t| t.motion_level).collect();
                let outcome: TopicOutcome = topic_match(
                    &levels,
                    a_cost.as_ref().expect("appearance matrix built"),
                    m_cost.as_ref().expect("motion matrix built"),
                    self.cfg.alpha,
                )?;
                let diagnostics = FrameDiagnostics {
                    conflicts: outcome.conflicts.len(),
                    appearance_resolutions: outcome.appearance_resolutions(),
                    motion_resolutions: outcome.motion_resolutions(),
                    candidate_pairs: outcome.candidate_pairs,
                    conflicted_pairs: outcome.conflicted_pairs,
                };
                Ok((outcome.matches, diagnostics))
            }
            paradigm => {
                let matches = baseline_match(
                    paradigm,
                    a_cost.as_ref(),
                    m_cost.as_ref(),
                    self.cfg.serial_filter_gate,
                )?;
                Ok((matches, FrameDiagnostics::default()))
            }
        }
    }

    fn spawn(&mut self, det: &Detection) -> Result<&Tracklet> {
        let id = TrackId(self.next_id);
        self.next_id += 1;
        let mut tracklet = Tracklet {
            id,
            state: TrackState::Tentative,
            motion: kf_init(&det.bbox, &self.cfg.motion),
            gallery: Default::default(),
            last_box: det.bbox,
            prev_box: None,
            motion_level: 1.0,
            hits: 1,
            misses: 0,
        };
        if let Some(embedding) = &det.embedding {
            gallery_push(&mut tracklet, embedding, &self.cfg.appearance)?;
        }
        if tracklet.hits >= self.cfg.min_hits {
            tracklet.set_state(TrackState::Confirmed);
        }
        self.tracklets.push(tracklet);
        Ok(self.tracklets.last().expect("just pushed"))
    }
}

/// Runs a full sequence: one `step` per (frame, detections) entry.
/// Deterministic for fixed inputs and configuration.
pub fn run_sequence(
    frames: impl IntoIterator<Item = (u32, Vec<Detection>)>,
    cfg: TrackerConfig,
) -> Result<Vec<FrameResult>> {
    let mut tracker = Tracker::new(cfg)?;
    let mut results = Vec::new();
    for (frame, detections) in frames {
        results.push(tracker.step(frame, &detections)?);
    }
    Ok(results)
}

/// Like [`run_sequence`], additionally recording, per frame, the embeddings
/// of every emitted track for representation-quality reporting.
pub fn run_sequence_logged(
    frames: impl IntoIterator<Item = (u32, Vec<Detection>)>,
    cfg: TrackerConfig,
) -> Result<(Vec<FrameResult>, Vec<Vec<(u64, Embedding)>>)> {
    let mut tracker = Tracker::new(cfg)?;
    let mut results = Vec::new();
    let mut log = Vec::new();
    for (frame, detections) in frames {
        let result = tracker.step(frame, &detections)?;
        let mut entries = Vec::new();
        for track in &result.tracks {
            if let Some(det) = detections
                .iter()
                .find(|d| d.bbox == track.bbox && d.confidence == track.confidence)
            {
                if let Some(e) = &det.embedding {
                    entries.push((track.id.0, e.clone()));
                }
            }
        }
        log.push(entries);
        results.push(result);
    }
    Ok((results, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn det(frame: u32, x: f64, y: f64) -> Detection {
        Detection::new(frame, bx(x, y, 10.0, 10.0), 0.9, None).unwrap()
    }

    fn det_emb(frame: u32, x: f64, y: f64, e: &[f64]) -> Detection {
        Detection::new(
            frame,
            bx(x, y, 10.0, 10.0),
            0.9,
            Some(Embedding::new(e.to_vec()).unwrap()),
        )
        .unwrap()
    }

    fn motion_only_cfg() -> TrackerConfig {
        TrackerConfig {
            paradigm: Paradigm::MotionOnly,
            ..TrackerConfig::default()
        }
    }

    #[test]
    fn empty_first_frame() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        let result = tracker.step(1, &[]).unwrap();
        assert!(result.tracks.is_empty());
        assert!(tracker.tracklets().is_empty());
    }

    #[test]
    fn stationary_object_emitted_from_second_frame() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        let mut seen = Vec::new();
        for f in 1..=5 {
            let result = tracker.step(f, &[det(f, 20.0, 20.0)]).unwrap();
            seen.push(result.tracks.len());
            for t in &result.tracks {
                assert_eq!(t.id, TrackId(1));
            }
        }
        assert_eq!(seen, vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn min_hits_one_emits_immediately() {
        let cfg = TrackerConfig {
            min_hits: 1,
            ..motion_only_cfg()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        let result = tracker.step(1, &[det(1, 0.0, 0.0)]).unwrap();
        assert_eq!(result.tracks.len(), 1);
    }

    #[test]
    fn out_of_order_frame_rejected() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        tracker.step(3, &[]).unwrap();
        assert!(matches!(
            tracker.step(3, &[]),
            Err(Error::OutOfOrderFrame { last: 3, got: 3 })
        ));
    }

    #[test]
    fn topic_requires_embeddings() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        assert!(matches!(
            tracker.step(1, &[det(1, 0.0, 0.0)]),
            Err(Error::MissingEmbedding { frame: 1 })
        ));
    }

    #[test]
    fn motion_only_ignores_missing_embeddings() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        assert!(tracker.step(1, &[det(1, 0.0, 0.0)]).is_ok());
    }

    #[test]
    fn low_confidence_detections_dropped() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        let weak = Detection::new(1, bx(0.0, 0.0, 10.0, 10.0), 0.2, None).unwrap();
        tracker.step(1, &[weak]).unwrap();
        assert!(tracker.tracklets().is_empty());
    }

    #[test]
    fn lost_track_reacquired_keeps_id() {
        let cfg = TrackerConfig {
            min_hits: 1,
            max_age: 10,
            ..motion_only_cfg()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        tracker.step(1, &[det(1, 0.0, 0.0)]).unwrap();
        tracker.step(2, &[det(2, 1.0, 0.0)]).unwrap();
        tracker.step(3, &[]).unwrap();
        assert_eq!(tracker.tracklets()[0].state, TrackState::Lost);
        let result = tracker.step(4, &[det(4, 3.0, 0.0)]).unwrap();
        assert_eq!(result.tracks.len(), 1);
        assert_eq!(result.tracks[0].id, TrackId(1));
        assert_eq!(tracker.tracklets()[0].state, TrackState::Confirmed);
    }

    #[test]
    fn stale_track_removed_after_max_age() {
        let cfg = TrackerConfig {
            min_hits: 1,
            max_age: 2,
            ..motion_only_cfg()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        tracker.step(1, &[det(1, 0.0, 0.0)]).unwrap();
        for f in 2..=4 {
            tracker.step(f, &[]).unwrap();
        }
        assert!(tracker.tracklets().is_empty());
    }

    #[test]
    fn ids_never_reused() {
        let cfg = TrackerConfig {
            min_hits: 1,
            max_age: 1,
            ..motion_only_cfg()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        tracker.step(1, &[det(1, 0.0, 0.0)]).unwrap();
        tracker.step(2, &[]).unwrap();
        tracker.step(3, &[]).unwrap();
        // First track is gone; a new detection at the same spot gets id 2.
        let result = tracker.step(4, &[det(4, 0.0, 0.0)]).unwrap();
        assert_eq!(result.tracks.len(), 1);
        assert_eq!(result.tracks[0].id, TrackId(2));
    }

    #[test]
    fn motion_level_updates_with_associations() {
        let cfg = TrackerConfig {
            min_hits: 1,
            ..motion_only_cfg()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        tracker.step(1, &[det(1, 0.0, 0.0)]).unwrap();
        assert_eq!(tracker.tracklets()[0].motion_level, 1.0);
        tracker.step(2, &[det(2, 0.0, 0.0)]).unwrap();
        assert_eq!(tracker.tracklets()[0].motion_level, 0.0);
        tracker.step(3, &[det(3, 5.0, 0.0)]).unwrap();
        let level = tracker.tracklets()[0].motion_level;
        assert!((level - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn dart_reacquired_through_appearance_union() {
        // Object A teleports beyond any IoU overlap; object B stays put.
        // Motion cannot propose A's new box, appearance can.
        let cfg = TrackerConfig {
            min_hits: 1,
            alpha: 0.5,
            det_conf_threshold: 0.1,
            ..TrackerConfig::default()
        };
        let ea = [1.0, 0.0, 0.0, 0.0];
        let eb = [0.0, 1.0, 0.0, 0.0];
        let mut tracker = Tracker::new(cfg).unwrap();
        for f in 1..=3 {
            tracker
                .step(
                    f,
                    &[
                        det_emb(f, 0.0, 0.0, &ea),
                        det_emb(f, 200.0, 200.0, &eb),
                    ],
                )
                .unwrap();
        }
        // A jumps across the arena.
        let result = tracker
            .step(
                4,
                &[
                    det_emb(4, 500.0, 500.0, &ea),
                    det_emb(4, 200.0, 200.0, &eb),
                ],
            )
            .unwrap();
        let ids: Vec<u64> = result.tracks.iter().map(|t| t.id.0).collect();
        assert_eq!(ids, vec![1, 2]);
        let moved = result.tracks.iter().find(|t| t.id == TrackId(1)).unwrap();
        assert_eq!(moved.bbox.x, 500.0);
    }

    #[test]
    fn emitted_counts_bounded_by_detections() {
        let mut tracker = Tracker::new(motion_only_cfg()).unwrap();
        for f in 1..=6 {
            let dets: Vec<Detection> = (0..3).map(|k| det(f, 40.0 * k as f64, 0.0)).collect();
            let result = tracker.step(f, &dets).unwrap();
            assert!(result.tracks.len() <= dets.len());
            let mut ids: Vec<u64> = result.tracks.iter().map(|t| t.id.0).collect();
            ids.dedup();
            assert_eq!(ids.len(), result.tracks.len(), "duplicate id in frame {f}");
        }
    }

    #[test]
    fn run_sequence_deterministic() {
        let frames: Vec<(u32, Vec<Detection>)> = (1..=10)
            .map(|f| {
                (
                    f,
                    vec![det(f, f as f64 * 2.0, 0.0), det(f, 100.0 - f as f64, 50.0)],
                )
            })
            .collect();
        let a = run_sequence(frames.clone(), motion_only_cfg()).unwrap();
        let b = run_sequence(frames, motion_only_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagnostics_tally_consistency() {
        let cfg = TrackerConfig {
            min_hits: 1,
            det_conf_threshold: 0.1,
            ..TrackerConfig::default()
        };
        let mut tracker = Tracker::new(cfg).unwrap();
        // Two objects whose embeddings swap affinity while boxes cross,
        // manufacturing association conflicts.
        let ea = [1.0, 0.0];
        let eb = [0.0, 1.0];
        for f in 1..=8u32 {
            let x = 10.0 * f as f64;
            let (e1, e2) = if f % 2 == 0 { (&ea, &eb) } else { (&eb, &ea) };
            let result = tracker
                .step(
                    f,
                    &[
                        det_emb(f, x, 0.0, e1),
                        det_emb(f, 100.0 - x, 2.0, e2),
                    ],
                )
                .unwrap();
            let d = &result.diagnostics;
            assert_eq!(
                d.appearance_resolutions + d.motion_resolutions,
                d.conflicts,
                "frame {f}"
            );
            assert!(d.conflicted_pairs <= d.candidate_pairs);
        }
    }
}
