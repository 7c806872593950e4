//! Seeded synthetic scenario generator: ground truth, noisy detections and
//! synthetic embeddings with controllable motion complexity.
//!
//! Everything is drawn from the explicitly documented generator in
//! [`crate::rng`], in a fixed order (per object: size, spawn, regime
//! parameters; then per frame: trajectory advances, detector draws in id
//! order, false positives last), so a (config, seed) pair reproduces the
//! same scenario bit for bit on any platform. Box coordinates and
//! confidences are quantized to the six-significant-digit grid the file
//! formats emit, making export/parse round trips exact.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::io::{
    emit_detections, emit_embedding_sidecar, emit_ground_truth, format_sig6, GtRow,
};
use crate::metrics::{motion_complexity, DatasetStats, FrameBox, TrackedBoxes};
use crate::rng::Rng;
use crate::types::{Detection, Embedding};

/// Per-object trajectory style.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionRegime {
    /// Constant velocity aimed through the central region of the arena.
    Linear,
    /// Constant speed along a loop of random waypoints.
    Waypoint,
    /// Alternating zero-velocity dwells and straight high-speed bursts.
    Dart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DartParams {
    /// Probability of remaining in the dwell phase each frame.
    pub dwell_prob: f64,
    /// Burst speed as a fraction of the arena diagonal per frame.
    pub burst_speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    /// Probability of dropping a ground-truth box, in [0, 1).
    pub miss_rate: f64,
    /// Mean false positives per frame.
    pub fp_rate: f64,
    /// Gaussian jitter on detection positions, pixels.
    pub jitter_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    /// Componentwise Gaussian noise around the identity prototype.
    pub noise_sigma: f64,
    /// Blend factor toward the occluder's prototype when boxes overlap.
    pub occlusion_corruption: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub arena_width: f64,
    pub arena_height: f64,
    pub object_count: usize,
    pub duration: u32,
    /// One regime per object.
    pub regimes: Vec<MotionRegime>,
    pub dart: DartParams,
    pub detector: DetectorModel,
    pub embedding: EmbeddingModel,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            arena_width: 640.0,
            arena_height: 480.0,
            object_count: 6,
            duration: 100,
            regimes: mixed_regimes(6),
            dart: DartParams {
                dwell_prob: 0.7,
                burst_speed: 0.15,
            },
            detector: DetectorModel {
                miss_rate: 0.05,
                fp_rate: 0.1,
                jitter_sigma: 1.0,
            },
            embedding: EmbeddingModel {
                dim: 32,
                noise_sigma: 0.2,
                occlusion_corruption: 0.5,
            },
            seed: 1,
        }
    }
}

/// First half linear, second half darting.
pub fn mixed_regimes(object_count: usize) -> Vec<MotionRegime> {
    (0..object_count)
        .map(|i| {
            if i < object_count / 2 {
                MotionRegime::Linear
            } else {
                MotionRegime::Dart
            }
        })
        .collect()
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, range: &str, value: String| -> Result<()> {
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
        check(
            self.arena_width > 0.0,
            "arena_width",
            "> 0",
            self.arena_width.to_string(),
        )?;
        check(
            self.arena_height > 0.0,
            "arena_height",
            "> 0",
            self.arena_height.to_string(),
        )?;
        check(self.duration >= 2, "frames", ">= 2", self.duration.to_string())?;
        check(
            self.regimes.len() == self.object_count,
            "regimes",
            "one per object",
            format!("{} for {} objects", self.regimes.len(), self.object_count),
        )?;
        check(
            (0.0..1.0).contains(&self.detector.miss_rate),
            "miss_rate",
            "[0,1)",
            self.detector.miss_rate.to_string(),
        )?;
        check(
            self.detector.fp_rate >= 0.0 && self.detector.fp_rate.is_finite(),
            "fp_rate",
            ">= 0",
            self.detector.fp_rate.to_string(),
        )?;
        check(
            self.detector.jitter_sigma >= 0.0 && self.detector.jitter_sigma.is_finite(),
            "jitter_sigma",
            ">= 0",
            self.detector.jitter_sigma.to_string(),
        )?;
        check(
            self.embedding.dim >= 2,
            "embedding_dim",
            ">= 2",
            self.embedding.dim.to_string(),
        )?;
        check(
            self.embedding.noise_sigma >= 0.0,
            "embedding_noise_sigma",
            ">= 0",
            self.embedding.noise_sigma.to_string(),
        )?;
        check(
            (0.0..=1.0).contains(&self.embedding.occlusion_corruption),
            "occlusion_corruption",
            "[0,1]",
            self.embedding.occlusion_corruption.to_string(),
        )?;
        check(
            (0.0..=1.0).contains(&self.dart.dwell_prob),
            "dart_dwell_prob",
            "[0,1]",
            self.dart.dwell_prob.to_string(),
        )?;
        check(
            self.dart.burst_speed >= 0.0 && self.dart.burst_speed.is_finite(),
            "dart_burst_speed",
            ">= 0",
            self.dart.burst_speed.to_string(),
        )?;
        Ok(())
    }
}

/// Parses the flat key=value scenario description.
///
/// Keys: `arena_width, arena_height, objects, frames, regime
/// (linear|waypoint|dart|mixed), dart_dwell_prob, dart_burst_speed,
/// miss_rate, fp_rate, jitter_sigma, embedding_dim, embedding_noise_sigma,
/// occlusion_corruption, seed`. Unknown keys are rejected; absent keys take
/// the defaults.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut regime_token = String::from("mixed");
    let bad = |key: &str, range: &str, value: &str| Error::ConfigRange {
        key: key.into(),
        range: range.into(),
        value: value.into(),
    };
    for (line_idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Parse {
            line: line_idx + 1,
            field: "line".into(),
            message: "expected key=value".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let f = |range: &str| -> Result<f64> {
            value.parse().map_err(|_| bad(key, range, value))
        };
        let n = |range: &str| -> Result<u64> {
            value.parse().map_err(|_| bad(key, range, value))
        };
        match key {
            "arena_width" => cfg.arena_width = f("> 0")?,
            "arena_height" => cfg.arena_height = f("> 0")?,
            "objects" => cfg.object_count = n(">= 0")? as usize,
            "frames" => cfg.duration = n(">= 2")? as u32,
            "regime" => regime_token = value.to_string(),
            "dart_dwell_prob" => cfg.dart.dwell_prob = f("[0,1]")?,
            "dart_burst_speed" => cfg.dart.burst_speed = f(">= 0")?,
            "miss_rate" => cfg.detector.miss_rate = f("[0,1)")?,
            "fp_rate" => cfg.detector.fp_rate = f(">= 0")?,
            "jitter_sigma" => cfg.detector.jitter_sigma = f(">= 0")?,
            "embedding_dim" => cfg.embedding.dim = n(">= 2")? as usize,
            "embedding_noise_sigma" => cfg.embedding.noise_sigma = f(">= 0")?,
            "occlusion_corruption" => cfg.embedding.occlusion_corruption = f("[0,1]")?,
            "seed" => cfg.seed = n(">= 0")?,
            _ => return Err(Error::UnknownConfigKey { key: key.into() }),
        }
    }
    cfg.regimes = match regime_token.as_str() {
        "linear" => vec![MotionRegime::Linear; cfg.object_count],
        "waypoint" => vec![MotionRegime::Waypoint; cfg.object_count],
        "dart" => vec![MotionRegime::Dart; cfg.object_count],
        "mixed" => mixed_regimes(cfg.object_count),
        other => return Err(bad("regime", "linear|waypoint|dart|mixed", other)),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn regime_token(regimes: &[MotionRegime]) -> &'static str {
    if regimes == mixed_regimes(regimes.len()).as_slice() {
        if regimes.iter().all(|r| *r == MotionRegime::Linear) {
            return "linear";
        }
        return "mixed";
    }
    if regimes.iter().all(|r| *r == MotionRegime::Linear) {
        "linear"
    } else if regimes.iter().all(|r| *r == MotionRegime::Waypoint) {
        "waypoint"
    } else if regimes.iter().all(|r| *r == MotionRegime::Dart) {
        "dart"
    } else {
        "mixed"
    }
}

/// Emits a scenario description that `parse_scenario_config` reads back.
pub fn emit_scenario_config(cfg: &ScenarioConfig) -> String {
    format!(
        "arena_width = {}\narena_height = {}\nobjects = {}\nframes = {}\nregime = {}\n\
         dart_dwell_prob = {}\ndart_burst_speed = {}\nmiss_rate = {}\nfp_rate = {}\n\
         jitter_sigma = {}\nembedding_dim = {}\nembedding_noise_sigma = {}\n\
         occlusion_corruption = {}\nseed = {}\n",
        cfg.arena_width,
        cfg.arena_height,
        cfg.object_count,
        cfg.duration,
        regime_token(&cfg.regimes),
        cfg.dart.dwell_prob,
        cfg.dart.burst_speed,
        cfg.detector.miss_rate,
        cfg.detector.fp_rate,
        cfg.detector.jitter_sigma,
        cfg.embedding.dim,
        cfg.embedding.noise_sigma,
        cfg.embedding.occlusion_corruption,
        cfg.seed,
    )
}

/// Where one detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetSource {
    Object(u64),
    FalsePositive,
}

/// Detections of one frame with their provenance, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    pub detections: Vec<Detection>,
    pub sources: Vec<DetSource>,
}

/// A generated scenario: ground truth, detections and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ground_truth: TrackedBoxes,
    pub frames: Vec<SimFrame>,
}

fn quantize(v: f64) -> f64 {
    format_sig6(v).parse().unwrap()
}

struct ObjectState {
    w: f64,
    h: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    regime: MotionRegime,
    waypoints: Vec<(f64, f64)>,
    waypoint_idx: usize,
    speed: f64,
    burst_left: u32,
    prototype: Vec<f64>,
}

fn random_direction(rng: &mut Rng) -> (f64, f64) {
    loop {
        let gx = rng.gaussian();
        let gy = rng.gaussian();
        let norm = (gx * gx + gy * gy).sqrt();
        if norm > 1e-6 {
            return (gx / norm, gy / norm);
        }
    }
}

/// Generates a scenario. Deterministic for a fixed (config, seed).
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let diag = (cfg.arena_width * cfg.arena_width + cfg.arena_height * cfg.arena_height).sqrt();
    let min_dim = cfg.arena_width.min(cfg.arena_height);

    let mut objects: Vec<ObjectState> = Vec::with_capacity(cfg.object_count);
    for i in 0..cfg.object_count {
        let regime = cfg.regimes[i];
        let w = quantize(rng.uniform_in(0.05, 0.10) * min_dim);
        let h = quantize(rng.uniform_in(0.05, 0.10) * min_dim);
        let x = rng.uniform_in(0.0, cfg.arena_width - w);
        let y = rng.uniform_in(0.0, cfg.arena_height - h);
        let mut state = ObjectState {
            w,
            h,
            x,
            y,
            vx: 0.0,
            vy: 0.0,
            regime,
            waypoints: Vec::new(),
            waypoint_idx: 0,
            speed: 0.0,
            burst_left: 0,
            prototype: rng.unit_vector(cfg.embedding.dim),
        };
        match regime {
            MotionRegime::Linear => {
                // Aim through the central region so trajectories intersect.
                let tx = cfg.arena_width * rng.uniform_in(0.40, 0.60);
                let ty = cfg.arena_height * rng.uniform_in(0.40, 0.60);
                let speed = rng.uniform_in(0.0015, 0.004) * diag;
                let dx = tx - state.x;
                let dy = ty - state.y;
                let norm = (dx * dx + dy * dy).sqrt().max(1e-9);
                // Cap the speed so the endpoint stays inside the arena.
                let reach = norm + norm.min(diag * 0.3);
                let speed = speed.min(reach / cfg.duration as f64);
                state.vx = speed * dx / norm;
                state.vy = speed * dy / norm;
            }
            MotionRegime::Waypoint => {
                let count = 3 + rng.index(3);
                state.waypoints = (0..count)
                    .map(|_| {
                        (
                            rng.uniform_in(0.0, cfg.arena_width - state.w),
                            rng.uniform_in(0.0, cfg.arena_height - state.h),
                        )
                    })
                    .collect();
                state.speed = rng.uniform_in(0.003, 0.008) * diag;
            }
            MotionRegime::Dart => {
                state.speed = cfg.dart.burst_speed * diag;
            }
        }
        objects.push(state);
    }

    let mut gt_rows: Vec<FrameBox> = Vec::new();
    let mut frames: Vec<SimFrame> = Vec::with_capacity(cfg.duration as usize);
    let mut gt_boxes_frame: Vec<BoundingBox> = Vec::with_capacity(cfg.object_count);

    for frame in 1..=cfg.duration {
        // Advance trajectories (frame 1 uses the spawn positions).
        if frame > 1 {
            for obj in objects.iter_mut() {
                match obj.regime {
                    MotionRegime::Linear => {
                        obj.x += obj.vx;
                        obj.y += obj.vy;
                    }
                    MotionRegime::Waypoint => {
                        let (tx, ty) = obj.waypoints[obj.waypoint_idx];
                        let dx = tx - obj.x;
                        let dy = ty - obj.y;
                        let dist = (dx * dx + dy * dy).sqrt();
                        if dist <= obj.speed {
                            obj.x = tx;
                            obj.y = ty;
                            obj.waypoint_idx = (obj.waypoint_idx + 1) % obj.waypoints.len();
                        } else {
                            obj.x += obj.speed * dx / dist;
                            obj.y += obj.speed * dy / dist;
                        }
                    }
                    MotionRegime::Dart => {
                        if obj.burst_left > 0 {
                            obj.x += obj.vx;
                            obj.y += obj.vy;
                            obj.burst_left -= 1;
                        } else if !rng.chance(cfg.dart.dwell_prob) {
                            let (dx, dy) = random_direction(&mut rng);
                            obj.vx = obj.speed * dx;
                            obj.vy = obj.speed * dy;
                            obj.burst_left = 2 + rng.index(5) as u32;
                            obj.x += obj.vx;
                            obj.y += obj.vy;
                            obj.burst_left -= 1;
                        }
                    }
                }
                obj.x = obj.x.clamp(0.0, cfg.arena_width - obj.w);
                obj.y = obj.y.clamp(0.0, cfg.arena_height - obj.h);
            }
        }

        gt_boxes_frame.clear();
        for (i, obj) in objects.iter().enumerate() {
            let bbox = BoundingBox::new(quantize(obj.x), quantize(obj.y), obj.w, obj.h)?;
            gt_boxes_frame.push(bbox);
            gt_rows.push(FrameBox {
                frame,
                id: i as u64 + 1,
                bbox,
            });
        }

        // Detector pass, id order.
        let mut detections: Vec<Detection> = Vec::new();
        let mut sources: Vec<DetSource> = Vec::new();
        let mut det_object: Vec<usize> = Vec::new();
        for (i, obj) in objects.iter().enumerate() {
            if rng.chance(cfg.detector.miss_rate) {
                continue;
            }
            let bbox = &gt_boxes_frame[i];
            let dx = rng.gaussian_scaled(cfg.detector.jitter_sigma);
            let dy = rng.gaussian_scaled(cfg.detector.jitter_sigma);
            let x = quantize((bbox.x + dx).clamp(0.0, cfg.arena_width - obj.w));
            let y = quantize((bbox.y + dy).clamp(0.0, cfg.arena_height - obj.h));
            let conf = quantize(rng.uniform_in(0.75, 1.0));
            let mut emb: Vec<f64> = obj
                .prototype
                .iter()
                .map(|p| p + rng.gaussian_scaled(cfg.embedding.noise_sigma))
                .collect();
            let norm = emb.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            for v in emb.iter_mut() {
                *v /= norm;
            }
            detections.push(Detection::new(
                frame,
                BoundingBox::new(x, y, obj.w, obj.h)?,
                conf,
                Some(Embedding::new(emb)?),
            )?);
            sources.push(DetSource::Object(i as u64 + 1));
            det_object.push(i);
        }

        // Occlusion: overlapping ground-truth boxes corrupt the smaller
        // object's embedding toward the occluder's prototype.
        if cfg.embedding.occlusion_corruption > 0.0 {
            for i in 0..objects.len() {
                for j in (i + 1)..objects.len() {
                    if iou(&gt_boxes_frame[i], &gt_boxes_frame[j]) <= 0.3 {
                        continue;
                    }
                    let (occluded, occluder) = if gt_boxes_frame[i].area() == gt_boxes_frame[j].area()
                    {
                        (j, i)
                    } else if gt_boxes_frame[i].area() < gt_boxes_frame[j].area() {
                        (i, j)
                    } else {
                        (j, i)
                    };
                    if let Some(pos) = det_object.iter().position(|&o| o == occluded) {
                        let c = cfg.embedding.occlusion_corruption;
                        let proto = &objects[occluder].prototype;
                        let current = detections[pos].embedding.as_ref().unwrap();
                        let mut blended: Vec<f64> = current
                            .values()
                            .iter()
                            .zip(proto)
                            .map(|(e, p)| (1.0 - c) * e + c * p)
                            .collect();
                        let norm =
                            blended.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                        for v in blended.iter_mut() {
                            *v /= norm;
                        }
                        detections[pos].embedding = Some(Embedding::new(blended)?);
                    }
                }
            }
        }

        // False positives: floor(rate) plus a Bernoulli remainder, sized
        // from the ground-truth box-size distribution.
        let mut fp_count = cfg.detector.fp_rate.floor() as usize;
        if rng.chance(cfg.detector.fp_rate.fract()) {
            fp_count += 1;
        }
        for _ in 0..fp_count {
            let (w, h) = if objects.is_empty() {
                (
                    quantize(0.05 * min_dim),
                    quantize(0.05 * min_dim),
                )
            } else {
                let donor = &objects[rng.index(objects.len())];
                (donor.w, donor.h)
            };
            let x = quantize(rng.uniform_in(0.0, cfg.arena_width - w));
            let y = quantize(rng.uniform_in(0.0, cfg.arena_height - h));
            let conf = quantize(rng.uniform_in(0.5, 0.95));
            let emb = rng.unit_vector(cfg.embedding.dim);
            detections.push(Detection::new(
                frame,
                BoundingBox::new(x, y, w, h)?,
                conf,
                Some(Embedding::new(emb)?),
            )?);
            sources.push(DetSource::FalsePositive);
        }

        frames.push(SimFrame {
            detections,
            sources,
        });
    }

    Ok(Scenario {
        config: cfg.clone(),
        ground_truth: TrackedBoxes::new(gt_rows),
        frames,
    })
}

/// Motion-complexity statistics of the scenario's ground truth.
pub fn scenario_stats(scenario: &Scenario) -> DatasetStats {
    motion_complexity(std::slice::from_ref(&scenario.ground_truth))
}

/// Writes `gt.txt`, `det.txt` and `emb.csv` into `dir`.
pub fn export(scenario: &Scenario, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let gt_rows: Vec<GtRow> = scenario
        .ground_truth
        .boxes
        .iter()
        .map(|b| GtRow {
            frame: b.frame,
            id: b.id,
            bbox: b.bbox,
            flag: 1,
            class: 1,
            visibility: 1.0,
        })
        .collect();
    let det_frames: Vec<Vec<Detection>> = scenario
        .frames
        .iter()
        .map(|f| f.detections.clone())
        .collect();
    std::fs::write(dir.join("gt.txt"), emit_ground_truth(&gt_rows))?;
    std::fs::write(dir.join("det.txt"), emit_detections(&det_frames))?;
    std::fs::write(dir.join("emb.csv"), emit_embedding_sidecar(&det_frames))?;
    Ok(())
}
