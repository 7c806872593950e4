//! Constant-velocity Kalman filtering over bounding boxes and the
//! motion-based cost matrix.
//!
//! State layout is the 7-dimensional SORT-family convention
//! `(cx, cy, s, r, vx, vy, vs)` with constant aspect ratio: box center,
//! area, aspect, and their velocities (aspect has none).

use crate::assoc::CostMatrix;
use crate::geometry::{iou, BoundingBox};
use crate::types::{Detection, Tracklet};

const DIM: usize = 7;
const OBS: usize = 4;
const AREA_FLOOR: f64 = 1e-6;

/// Filter noise scales and the optional observation-centric behaviors.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionConfig {
    /// Process noise on the velocity components (default 1e-2).
    pub process_noise_scale: f64,
    /// Observation noise on position/area (default 1e-1).
    pub observation_noise_scale: f64,
    /// Replay virtual updates over the occlusion gap when a lost track is
    /// re-acquired (default on).
    pub use_observation_recovery: bool,
    /// Add an angular-consistency term to the motion cost (default off).
    pub use_direction_consistency: bool,
    pub direction_weight: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            process_noise_scale: 1e-2,
            observation_noise_scale: 1e-1,
            use_observation_recovery: true,
            use_direction_consistency: false,
            direction_weight: 0.5,
        }
    }
}

impl MotionConfig {
    fn measurement_noise(&self) -> [f64; OBS] {
        let r = self.observation_noise_scale * 10.0;
        [r, r, 10.0 * r, 10.0 * r]
    }

    fn process_noise(&self) -> [f64; DIM] {
        let q = self.process_noise_scale;
        [
            100.0 * q,
            100.0 * q,
            100.0 * q,
            100.0 * q,
            q,
            q,
            0.01 * q,
        ]
    }
}

/// Kalman state of one tracklet.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionState {
    pub mean: [f64; DIM],
    pub covariance: [[f64; DIM]; DIM],
    /// Frames since the last measurement update.
    pub age_since_update: u32,
    /// Box of the last measurement update.
    pub last_observation: Option<BoundingBox>,
    /// Filter state frozen at the last update; restored when replaying a gap.
    snapshot: Option<([f64; DIM], [[f64; DIM]; DIM])>,
}

fn box_to_measurement(b: &BoundingBox) -> [f64; OBS] {
    let (cx, cy) = b.center();
    [cx, cy, b.area(), b.w / b.h]
}

fn measurement_to_box(z: &[f64]) -> BoundingBox {
    let s = z[2].max(AREA_FLOOR);
    let r = z[3].max(AREA_FLOOR);
    let w = (s * r).sqrt();
    let h = (s / r).sqrt();
    BoundingBox {
        x: z[0] - w / 2.0,
        y: z[1] - h / 2.0,
        w,
        h,
    }
}

fn lerp_box(a: &BoundingBox, b: &BoundingBox, t: f64) -> BoundingBox {
    BoundingBox {
        x: a.x + (b.x - a.x) * t,
        y: a.y + (b.y - a.y) * t,
        w: a.w + (b.w - a.w) * t,
        h: a.h + (b.h - a.h) * t,
    }
}

/// Initializes the filter on a first observation: zero velocities, diagonal
/// covariance from the configured scales with uninformative velocity terms.
pub fn kf_init(bbox: &BoundingBox, cfg: &MotionConfig) -> MotionState {
    let z = box_to_measurement(bbox);
    let mean = [z[0], z[1], z[2], z[3], 0.0, 0.0, 0.0];
    let r = cfg.observation_noise_scale * 10.0;
    let mut covariance = [[0.0; DIM]; DIM];
    for (d, var) in [10.0 * r, 10.0 * r, 10.0 * r, 10.0 * r, 1e4, 1e4, 1e4]
        .iter()
        .enumerate()
    {
        covariance[d][d] = *var;
    }
    MotionState {
        mean,
        covariance,
        age_since_update: 0,
        last_observation: Some(*bbox),
        snapshot: Some((mean, covariance)),
    }
}

impl MotionState {
    /// Box implied by the current mean.
    pub fn current_box(&self) -> BoundingBox {
        measurement_to_box(&self.mean[..OBS])
    }

    /// Box the state would occupy after one constant-velocity step, without
    /// advancing the filter.
    pub fn predicted_box(&self) -> BoundingBox {
        let mut z = [
            self.mean[0] + self.mean[4],
            self.mean[1] + self.mean[5],
            self.mean[2] + self.mean[6],
            self.mean[3],
        ];
        z[2] = z[2].max(AREA_FLOOR);
        measurement_to_box(&z)
    }

    /// Advances one frame: constant-velocity mean propagation and process
    /// noise inflation. Returns the predicted box.
    pub fn predict(&mut self, cfg: &MotionConfig) -> BoundingBox {
        self.mean[0] += self.mean[4];
        self.mean[1] += self.mean[5];
        self.mean[2] += self.mean[6];
        self.mean[2] = self.mean[2].max(AREA_FLOOR);
        self.mean[3] = self.mean[3].max(AREA_FLOOR);

        // P = F P F' + Q with F = I plus the three velocity couplings.
        let p = &mut self.covariance;
        for (pos, vel) in [(0, 4), (1, 5), (2, 6)] {
            for k in 0..DIM {
                p[pos][k] += p[vel][k];
            }
        }
        for (pos, vel) in [(0, 4), (1, 5), (2, 6)] {
            for k in 0..DIM {
                p[k][pos] += p[k][vel];
            }
        }
        let q = cfg.process_noise();
        for d in 0..DIM {
            p[d][d] += q[d];
        }
        self.age_since_update += 1;
        self.current_box()
    }

    /// Measurement update on (cx, cy, s, r).
    ///
    /// With observation recovery enabled and the track lost for two or more
    /// frames, the filter state is rewound to the last update and virtual
    /// updates are replayed along the straight line between the last
    /// observation and `bbox` before this one.
    pub fn update(&mut self, bbox: &BoundingBox, cfg: &MotionConfig) {
        let gap = self.age_since_update;
        if cfg.use_observation_recovery && gap >= 2 {
            if let (Some(anchor), Some((mean, cov))) = (self.last_observation, self.snapshot) {
                self.mean = mean;
                self.covariance = cov;
                self.age_since_update = 0;
                for k in 1..=gap {
                    self.predict(cfg);
                    let t = k as f64 / gap as f64;
                    self.correct(&lerp_box(&anchor, bbox, t), cfg);
                }
                self.finish_update(bbox);
                return;
            }
        }
        self.correct(bbox, cfg);
        self.finish_update(bbox);
    }

    fn finish_update(&mut self, bbox: &BoundingBox) {
        self.age_since_update = 0;
        self.last_observation = Some(*bbox);
        self.snapshot = Some((self.mean, self.covariance));
    }

    fn correct(&mut self, bbox: &BoundingBox, cfg: &MotionConfig) {
        let z = box_to_measurement(bbox);
        let r = cfg.measurement_noise();
        let p = &self.covariance;

        // S = H P H' + R, with H selecting the first four state components.
        let mut s = [[0.0; OBS]; OBS];
        for i in 0..OBS {
            for j in 0..OBS {
                s[i][j] = p[i][j];
            }
            s[i][i] += r[i];
        }
        let s_inv = invert_spd(&s);

        // K = P H' S^-1 (7x4).
        let mut k = [[0.0; OBS]; DIM];
        for i in 0..DIM {
            for j in 0..OBS {
                let mut acc = 0.0;
                for l in 0..OBS {
                    acc += p[i][l] * s_inv[l][j];
                }
                k[i][j] = acc;
            }
        }

        let innovation = [
            z[0] - self.mean[0],
            z[1] - self.mean[1],
            z[2] - self.mean[2],
            z[3] - self.mean[3],
        ];
        for i in 0..DIM {
            let mut acc = 0.0;
            for j in 0..OBS {
                acc += k[i][j] * innovation[j];
            }
            self.mean[i] += acc;
        }
        self.mean[2] = self.mean[2].max(AREA_FLOOR);
        self.mean[3] = self.mean[3].max(AREA_FLOOR);

        // Joseph-form covariance update, then symmetry enforcement.
        let mut ikh = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            ikh[i][i] = 1.0;
            for j in 0..OBS {
                ikh[i][j] -= k[i][j];
            }
        }
        let mut tmp = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = 0.0;
                for l in 0..DIM {
                    acc += ikh[i][l] * p[l][j];
                }
                tmp[i][j] = acc;
            }
        }
        let mut new_p = [[0.0; DIM]; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = 0.0;
                for l in 0..DIM {
                    acc += tmp[i][l] * ikh[j][l];
                }
                for l in 0..OBS {
                    acc += k[i][l] * r[l] * k[j][l];
                }
                new_p[i][j] = acc;
            }
        }
        for i in 0..DIM {
            for j in 0..i {
                let avg = 0.5 * (new_p[i][j] + new_p[j][i]);
                new_p[i][j] = avg;
                new_p[j][i] = avg;
            }
        }
        self.covariance = new_p;
    }
}

/// Inverse of a 4x4 symmetric positive-definite matrix via Cholesky.
fn invert_spd(a: &[[f64; OBS]; OBS]) -> [[f64; OBS]; OBS] {
    let mut l = [[0.0; OBS]; OBS];
    for i in 0..OBS {
        for j in 0..=i {
            let mut acc = a[i][j];
            for k in 0..j {
                acc -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = acc.max(1e-12).sqrt();
            } else {
                l[i][j] = acc / l[j][j];
            }
        }
    }
    // Solve L L' X = I column by column.
    let mut inv = [[0.0; OBS]; OBS];
    for col in 0..OBS {
        let mut y = [0.0; OBS];
        for i in 0..OBS {
            let mut acc = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                acc -= l[i][k] * y[k];
            }
            y[i] = acc / l[i][i];
        }
        for i in (0..OBS).rev() {
            let mut acc = y[i];
            for k in (i + 1)..OBS {
                acc -= l[k][i] * inv[k][col];
            }
            inv[i][col] = acc / l[i][i];
        }
    }
    inv
}

/// Motion cost between every tracklet's one-step predicted box and every
/// detection: `1 - iou`, optionally plus a weighted angular-inconsistency
/// term between the tracklet's observed heading and the heading implied by
/// the association. Non-overlapping pairs are forbidden.
pub fn motion_cost_matrix(
    tracklets: &[Tracklet],
    detections: &[Detection],
    cfg: &MotionConfig,
) -> CostMatrix {
    let mut cost = CostMatrix::forbidden(tracklets.len(), detections.len());
    for (i, tracklet) in tracklets.iter().enumerate() {
        let predicted = tracklet.motion.predicted_box();
        for (j, det) in detections.iter().enumerate() {
            let overlap = iou(&predicted, &det.bbox);
            if overlap == 0.0 {
                continue;
            }
            let mut c = 1.0 - overlap;
            if cfg.use_direction_consistency {
                c += cfg.direction_weight * direction_inconsistency(tracklet, &det.bbox);
            }
            cost.set(i, j, c);
        }
    }
    cost
}

/// Angle between the tracklet's last observed displacement and the
/// displacement implied by associating `det`, normalized to [0, 1].
fn direction_inconsistency(tracklet: &Tracklet, det: &BoundingBox) -> f64 {
    let Some(prev) = tracklet.prev_box else {
        return 0.0;
    };
    let (px, py) = prev.center();
    let (lx, ly) = tracklet.last_box.center();
    let (dx, dy) = det.center();
    let v1 = (lx - px, ly - py);
    let v2 = (dx - lx, dy - ly);
    let n1 = (v1.0 * v1.0 + v1.1 * v1.1).sqrt();
    let n2 = (v2.0 * v2.0 + v2.1 * v2.1).sqrt();
    if n1 < 1e-9 || n2 < 1e-9 {
        return 0.0;
    }
    let cos = ((v1.0 * v2.0 + v1.1 * v2.1) / (n1 * n2)).clamp(-1.0, 1.0);
    cos.acos() / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{TrackId, TrackState};

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn boxes_close(a: &BoundingBox, b: &BoundingBox, tol: f64) -> bool {
        (a.x - b.x).abs() < tol
            && (a.y - b.y).abs() < tol
            && (a.w - b.w).abs() < tol
            && (a.h - b.h).abs() < tol
    }

    fn tracklet_at(state: MotionState, last: BoundingBox, prev: Option<BoundingBox>) -> Tracklet {
        Tracklet {
            id: TrackId(1),
            state: TrackState::Confirmed,
            motion: state,
            gallery: Default::default(),
            last_box: last,
            prev_box: prev,
            motion_level: 1.0,
            hits: 1,
            misses: 0,
        }
    }

    #[test]
    fn init_sets_position_and_zero_velocity() {
        let cfg = MotionConfig::default();
        let st = kf_init(&bx(0.0, 0.0, 2.0, 2.0), &cfg);
        assert_eq!(&st.mean[..4], &[1.0, 1.0, 4.0, 1.0]);
        assert_eq!(&st.mean[4..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn init_then_predict_returns_same_box() {
        let cfg = MotionConfig::default();
        let b = bx(3.0, 4.0, 5.0, 6.0);
        let mut st = kf_init(&b, &cfg);
        let p = st.predict(&cfg);
        assert!(boxes_close(&p, &b, 1e-9));
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = MotionConfig::default();
        let b = bx(1.0, 2.0, 3.0, 4.0);
        assert_eq!(kf_init(&b, &cfg), kf_init(&b, &cfg));
    }

    #[test]
    fn velocity_learned_from_two_observations() {
        // With near-zero observation noise, two points on a line pin the
        // velocity, so the third prediction lands on the line's next point.
        let cfg = MotionConfig {
            observation_noise_scale: 1e-6,
            ..MotionConfig::default()
        };
        let mut st = kf_init(&bx(0.0, 0.0, 2.0, 2.0), &cfg);
        st.predict(&cfg);
        st.update(&bx(1.0, 0.0, 2.0, 2.0), &cfg);
        let p = st.predict(&cfg);
        let (cx, _) = p.center();
        assert!((cx - 3.0).abs() < 1e-3, "cx = {cx}");
    }

    #[test]
    fn update_with_predicted_box_keeps_mean() {
        let cfg = MotionConfig::default();
        let mut st = kf_init(&bx(10.0, 10.0, 4.0, 8.0), &cfg);
        let p = st.predict(&cfg);
        let before = st.mean;
        st.update(&p, &cfg);
        for d in 0..4 {
            assert!((st.mean[d] - before[d]).abs() < 1e-9, "component {d}");
        }
    }

    #[test]
    fn linear_motion_prediction_converges() {
        let cfg = MotionConfig::default();
        let truth = |k: u32| bx(5.0 * k as f64, 3.0 * k as f64, 10.0, 10.0);
        let mut st = kf_init(&truth(0), &cfg);
        for k in 1..=10 {
            let predicted = st.predict(&cfg);
            if k > 2 {
                assert!(
                    iou(&predicted, &truth(k)) >= 0.9,
                    "frame {k}: iou {}",
                    iou(&predicted, &truth(k))
                );
            }
            st.update(&truth(k), &cfg);
        }
    }

    #[test]
    fn recovery_only_engages_after_two_missed_frames() {
        let base = MotionConfig::default();
        let off = MotionConfig {
            use_observation_recovery: false,
            ..base.clone()
        };
        // One missed frame: identical behavior with recovery on or off.
        let run = |cfg: &MotionConfig| {
            let mut st = kf_init(&bx(0.0, 0.0, 4.0, 4.0), cfg);
            st.predict(cfg);
            st.update(&bx(1.0, 0.0, 4.0, 4.0), cfg);
            st.predict(cfg);
            st.update(&bx(2.0, 0.0, 4.0, 4.0), cfg);
            st
        };
        assert_eq!(run(&base).mean, run(&off).mean);
    }

    #[test]
    fn recovery_improves_reacquisition_after_turn() {
        // Track converges on velocity (5, 0), goes unseen for three frames
        // during which the object turns to velocity (0, 4), and is re-seen on
        // the turned line. Recovery replays the gap and should predict the
        // next true box strictly better.
        let truth_before = |k: u32| bx(5.0 * k as f64, 0.0, 10.0, 10.0);
        let gap_line = |k: u32| bx(25.0, 4.0 * k as f64, 10.0, 10.0);
        let run = |recovery: bool| -> f64 {
            let cfg = MotionConfig {
                use_observation_recovery: recovery,
                ..MotionConfig::default()
            };
            let mut st = kf_init(&truth_before(0), &cfg);
            for k in 1..=5 {
                st.predict(&cfg);
                st.update(&truth_before(k), &cfg);
            }
            for _ in 0..3 {
                st.predict(&cfg);
            }
            st.predict(&cfg);
            st.update(&gap_line(4), &cfg);
            let next = st.predict(&cfg);
            iou(&next, &gap_line(5))
        };
        let with = run(true);
        let without = run(false);
        assert!(with > without, "with={with} without={without}");
    }

    #[test]
    fn covariance_stays_symmetric() {
        let cfg = MotionConfig::default();
        let mut st = kf_init(&bx(0.0, 0.0, 3.0, 3.0), &cfg);
        for k in 0..50 {
            st.predict(&cfg);
            if k % 3 != 0 {
                st.update(&bx(k as f64, k as f64 * 0.5, 3.0 + (k % 5) as f64, 3.0), &cfg);
            }
            for i in 0..DIM {
                for j in 0..DIM {
                    assert!(
                        (st.covariance[i][j] - st.covariance[j][i]).abs() < 1e-9,
                        "asymmetry at ({i},{j}) after step {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn cost_zero_at_predicted_box() {
        let cfg = MotionConfig::default();
        let b = bx(10.0, 10.0, 6.0, 6.0);
        let st = kf_init(&b, &cfg);
        let t = tracklet_at(st, b, None);
        let det = Detection::new(1, b, 0.9, None).unwrap();
        let cost = motion_cost_matrix(&[t], &[det], &cfg);
        assert!(cost.get(0, 0).unwrap() < 1e-9);
    }

    #[test]
    fn cost_forbidden_when_disjoint() {
        let cfg = MotionConfig::default();
        let b = bx(0.0, 0.0, 4.0, 4.0);
        let st = kf_init(&b, &cfg);
        let t = tracklet_at(st, b, None);
        let det = Detection::new(1, bx(100.0, 100.0, 4.0, 4.0), 0.9, None).unwrap();
        let cost = motion_cost_matrix(&[t], &[det], &cfg);
        assert!(cost.is_forbidden(0, 0));
    }

    #[test]
    fn cost_equals_one_minus_iou_without_direction_term() {
        let cfg = MotionConfig::default();
        let b1 = bx(0.0, 0.0, 10.0, 10.0);
        let b2 = bx(40.0, 0.0, 10.0, 10.0);
        let t1 = tracklet_at(kf_init(&b1, &cfg), b1, None);
        let t2 = tracklet_at(kf_init(&b2, &cfg), b2, None);
        let d1 = Detection::new(1, bx(2.0, 0.0, 10.0, 10.0), 0.9, None).unwrap();
        let d2 = Detection::new(1, bx(39.0, 1.0, 10.0, 10.0), 0.9, None).unwrap();
        let tracklets = [t1, t2];
        let dets = [d1, d2];
        let cost = motion_cost_matrix(&tracklets, &dets, &cfg);
        for i in 0..2 {
            let predicted = tracklets[i].motion.predicted_box();
            for j in 0..2 {
                let expected = iou(&predicted, &dets[j].bbox);
                match cost.get(i, j) {
                    Some(c) => assert_eq!(c, 1.0 - expected),
                    None => assert_eq!(expected, 0.0),
                }
            }
        }
    }

    #[test]
    fn direction_term_bounds() {
        let cfg = MotionConfig {
            use_direction_consistency: true,
            direction_weight: 0.7,
            ..MotionConfig::default()
        };
        // Heading right; candidate straight ahead vs. behind.
        let prev = bx(0.0, 0.0, 10.0, 10.0);
        let last = bx(10.0, 0.0, 10.0, 10.0);
        let t = tracklet_at(kf_init(&last, &cfg), last, Some(prev));
        let ahead = Detection::new(1, bx(13.0, 0.0, 10.0, 10.0), 0.9, None).unwrap();
        let behind = Detection::new(1, bx(7.0, 0.0, 10.0, 10.0), 0.9, None).unwrap();
        let cost = motion_cost_matrix(&[t], &[ahead, behind], &cfg);
        let c_ahead = cost.get(0, 0).unwrap();
        let c_behind = cost.get(0, 1).unwrap();
        // Same overlap either way; the angular term separates them by the
        // full weight (angle 0 vs pi).
        assert!((c_behind - c_ahead - 0.7).abs() < 1e-9);
        assert!(c_ahead <= 1.0 + 0.7 && c_behind <= 1.0 + 0.7);
    }

    #[test]
    fn empty_inputs_give_empty_matrix() {
        let cfg = MotionConfig::default();
        let cost = motion_cost_matrix(&[], &[], &cfg);
        assert_eq!(cost.rows(), 0);
        assert_eq!(cost.cols(), 0);
    }
}
