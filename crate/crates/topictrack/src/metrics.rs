//! Tracking evaluation (CLEAR metrics, IDF1) and dataset statistics:
//! motion-intensity complexity (MMSAO/MMSO) and embedding representation
//! quality (InterCS/IntraCS).

use std::collections::BTreeMap;

use crate::appearance::aarm_similarity;
use crate::assoc::{hungarian_solve, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::types::Embedding;

/// One identity-labeled box of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBox {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
}

/// A sequence's identity-labeled boxes (ground truth or tracker output).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackedBoxes {
    pub boxes: Vec<FrameBox>,
}

impl TrackedBoxes {
    pub fn new(boxes: Vec<FrameBox>) -> Self {
        Self { boxes }
    }

    /// Highest frame index present (0 when empty).
    pub fn frame_count(&self) -> u32 {
        self.boxes.iter().map(|b| b.frame).max().unwrap_or(0)
    }

    /// Boxes grouped by frame; errors on duplicate (frame, id).
    fn by_frame(&self) -> Result<BTreeMap<u32, Vec<(u64, BoundingBox)>>> {
        let mut frames: BTreeMap<u32, Vec<(u64, BoundingBox)>> = BTreeMap::new();
        for b in &self.boxes {
            let entry = frames.entry(b.frame).or_default();
            if entry.iter().any(|(id, _)| *id == b.id) {
                return Err(Error::DuplicateId {
                    frame: b.frame,
                    id: b.id,
                });
            }
            entry.push((b.id, b.bbox));
        }
        Ok(frames)
    }

    /// Per-object (frame -> box) series, keyed by id.
    fn by_object(&self) -> BTreeMap<u64, BTreeMap<u32, BoundingBox>> {
        let mut objects: BTreeMap<u64, BTreeMap<u32, BoundingBox>> = BTreeMap::new();
        for b in &self.boxes {
            objects.entry(b.id).or_default().insert(b.frame, b.bbox);
        }
        objects
    }
}

/// Size-normalized motion intensity of an object across consecutive frames:
/// `sqrt((dx/w)^2 + (dy/h)^2)` with the current box's width and height.
pub fn motion_intensity(prev: &BoundingBox, cur: &BoundingBox) -> f64 {
    let dx = (cur.x - prev.x) / cur.w;
    let dy = (cur.y - prev.y) / cur.h;
    (dx * dx + dy * dy).sqrt()
}

/// Motion-complexity statistics of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub mmsao: f64,
    pub mmso: f64,
    pub per_video: Vec<VideoMotionStats>,
}

/// Re-aggregatable per-video components of the motion statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoMotionStats {
    /// Total frames of the video (denominator share for MMSAO).
    pub frames: u64,
    /// Total objects of the video (denominator share for MMSO).
    pub objects: u64,
    /// Sum over frames of the per-frame max-min intensity spread.
    pub frame_spread_sum: f64,
    /// Sum over objects of each object's lifetime intensity range.
    pub object_range_sum: f64,
}

/// Per-frame, per-object motion intensities of one video: frame -> id -> S.
fn intensities(video: &TrackedBoxes) -> BTreeMap<u32, BTreeMap<u64, f64>> {
    let mut out: BTreeMap<u32, BTreeMap<u64, f64>> = BTreeMap::new();
    for (id, series) in video.by_object() {
        let mut prev: Option<(u32, BoundingBox)> = None;
        for (frame, bbox) in series {
            if let Some((pf, pb)) = prev {
                if pf + 1 == frame {
                    out.entry(frame).or_default().insert(id, motion_intensity(&pb, &bbox));
                }
            }
            prev = Some((frame, bbox));
        }
    }
    out
}

/// Motion statistics of a dataset of videos.
///
/// MMSAO averages, over every frame of every video, the spread
/// (max - min) of the per-object intensities defined at that frame; MMSO
/// averages, over every object, the range of its intensity series. Frames
/// with fewer than two defined intensities and objects alive fewer than two
/// consecutive frames contribute zero but stay in the denominators.
pub fn motion_complexity(videos: &[TrackedBoxes]) -> DatasetStats {
    let mut per_video = Vec::with_capacity(videos.len());
    for video in videos {
        let by_frame = intensities(video);
        let mut frame_spread_sum = 0.0;
        for speeds in by_frame.values() {
            if speeds.len() >= 2 {
                let max = speeds.values().fold(f64::MIN, |a, &b| a.max(b));
                let min = speeds.values().fold(f64::MAX, |a, &b| a.min(b));
                frame_spread_sum += max - min;
            }
        }
        let mut object_range_sum = 0.0;
        let objects = video.by_object();
        for id in objects.keys() {
            let series: Vec<f64> = by_frame
                .values()
                .filter_map(|speeds| speeds.get(id).copied())
                .collect();
            if series.len() >= 2 {
                let max = series.iter().fold(f64::MIN, |a, &b| a.max(b));
                let min = series.iter().fold(f64::MAX, |a, &b| a.min(b));
                object_range_sum += max - min;
            }
        }
        per_video.push(VideoMotionStats {
            frames: video.frame_count() as u64,
            objects: objects.len() as u64,
            frame_spread_sum,
            object_range_sum,
        });
    }
    let total_frames: u64 = per_video.iter().map(|v| v.frames).sum();
    let total_objects: u64 = per_video.iter().map(|v| v.objects).sum();
    let mmsao = if total_frames == 0 {
        0.0
    } else {
        per_video.iter().map(|v| v.frame_spread_sum).sum::<f64>() / total_frames as f64
    };
    let mmso = if total_objects == 0 {
        0.0
    } else {
        per_video.iter().map(|v| v.object_range_sum).sum::<f64>() / total_objects as f64
    };
    DatasetStats {
        mmsao,
        mmso,
        per_video,
    }
}

/// Max-min speed among objects: inter-object motion diversity.
pub fn mmsao(videos: &[TrackedBoxes]) -> f64 {
    motion_complexity(videos).mmsao
}

/// Max-min speed of object: per-object motion variability.
pub fn mmso(videos: &[TrackedBoxes]) -> f64 {
    motion_complexity(videos).mmso
}

/// Per-frame embeddings of one video, in (track id, embedding) form.
pub type FrameEmbeddings = Vec<(u64, Embedding)>;

/// Average cross-object embedding similarity per frame, normalized by 1/N^2
/// over the ordered i != j double sum.
pub fn intercs(videos: &[Vec<FrameEmbeddings>]) -> f64 {
    intercs_with(videos, |a, b| a.cosine(b))
}

/// Average within-object embedding similarity across frames, normalized by
/// 1/L^2 over the ordered k != q double sum.
pub fn intracs(videos: &[Vec<FrameEmbeddings>]) -> f64 {
    intracs_with(videos, |a, b| a.cosine(b))
}

fn intercs_with(videos: &[Vec<FrameEmbeddings>], kernel: impl Fn(&Embedding, &Embedding) -> f64) -> f64 {
    let mut total_frames = 0u64;
    let mut acc = 0.0;
    for video in videos {
        total_frames += video.len() as u64;
        for frame in video {
            let n = frame.len();
            if n < 2 {
                continue;
            }
            let mut sum = 0.0;
            for (i, (_, a)) in frame.iter().enumerate() {
                for (j, (_, b)) in frame.iter().enumerate() {
                    if i != j {
                        sum += kernel(a, b);
                    }
                }
            }
            acc += sum / (n * n) as f64;
        }
    }
    if total_frames == 0 {
        0.0
    } else {
        acc / total_frames as f64
    }
}

fn intracs_with(videos: &[Vec<FrameEmbeddings>], kernel: impl Fn(&Embedding, &Embedding) -> f64) -> f64 {
    let mut total_objects = 0u64;
    let mut acc = 0.0;
    for video in videos {
        let mut series: BTreeMap<u64, Vec<&Embedding>> = BTreeMap::new();
        for frame in video {
            for (id, e) in frame {
                series.entry(*id).or_default().push(e);
            }
        }
        total_objects += series.len() as u64;
        for embeddings in series.values() {
            let l = embeddings.len();
            if l < 2 {
                continue;
            }
            let mut sum = 0.0;
            for (k, a) in embeddings.iter().enumerate() {
                for (q, b) in embeddings.iter().enumerate() {
                    if k != q {
                        sum += kernel(a, b);
                    }
                }
            }
            acc += sum / (l * l) as f64;
        }
    }
    if total_objects == 0 {
        0.0
    } else {
        acc / total_objects as f64
    }
}

/// Representation-quality comparison of raw cosine similarity against the
/// reconstructed-embedding similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationStats {
    pub raw_intercs: f64,
    pub raw_intracs: f64,
    pub aarm_intercs: f64,
    pub aarm_intracs: f64,
}

/// Computes InterCS/IntraCS on the recorded embeddings twice: with the plain
/// cosine kernel and with the reconstructed-embedding similarity kernel.
pub fn representation_report(videos: &[Vec<FrameEmbeddings>]) -> Result<RepresentationStats> {
    let any = videos.iter().flatten().any(|frame| !frame.is_empty());
    if !any {
        return Err(Error::EmptyReport);
    }
    let aarm = |a: &Embedding, b: &Embedding| {
        aarm_similarity(std::slice::from_ref(a), b, true).unwrap_or(0.0)
    };
    Ok(RepresentationStats {
        raw_intercs: intercs(videos),
        raw_intracs: intracs(videos),
        aarm_intercs: intercs_with(videos, aarm),
        aarm_intracs: intracs_with(videos, aarm),
    })
}

/// CLEAR evaluation counts plus IDF1.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mota: f64,
    pub idf1: f64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub id_switches: u64,
    pub fragmentations: u64,
    pub gt_boxes: u64,
    pub predicted_boxes: u64,
}

/// CLEAR evaluation: per-frame matching at the IoU threshold with
/// persistence of previous correspondences, counting misses, false
/// positives, identity switches and fragmentations.
///
/// `MOTA = 1 - (FN + FP + IDs) / total ground-truth boxes`.
pub fn clear_eval(
    gt: &TrackedBoxes,
    predicted: &TrackedBoxes,
    iou_threshold: f64,
) -> Result<EvalReport> {
    let gt_frames = gt.by_frame()?;
    let pred_frames = predicted.by_frame()?;
    let total_gt: u64 = gt_frames.values().map(|v| v.len() as u64).sum();
    let total_pred: u64 = pred_frames.values().map(|v| v.len() as u64).sum();

    let mut fp = 0u64;
    let mut fn_ = 0u64;
    let mut switches = 0u64;
    // gt id -> hypothesis id of the most recent frame in which it was matched.
    let mut last_match: BTreeMap<u64, u64> = BTreeMap::new();
    // gt id -> whether it was matched in its previous present frame, for Frag.
    let mut was_tracked: BTreeMap<u64, bool> = BTreeMap::new();
    let mut frag = 0u64;

    let last_frame = gt.frame_count().max(predicted.frame_count());
    let empty = Vec::new();
    for frame in 1..=last_frame {
        let gts = gt_frames.get(&frame).unwrap_or(&empty);
        let preds = pred_frames.get(&frame).unwrap_or(&empty);

        let mut gt_matched = vec![false; gts.len()];
        let mut pred_matched = vec![false; preds.len()];
        let mut matches: Vec<(usize, usize)> = Vec::new();

        // Persist previous correspondences that still overlap.
        for (gi, (gid, gbox)) in gts.iter().enumerate() {
            if let Some(hid) = last_match.get(gid) {
                if let Some(pi) = preds.iter().position(|(pid, _)| pid == hid) {
                    if !pred_matched[pi] && iou(gbox, &preds[pi].1) >= iou_threshold {
                        gt_matched[gi] = true;
                        pred_matched[pi] = true;
                        matches.push((gi, pi));
                    }
                }
            }
        }

        // Optimal matching of the remainder on 1 - IoU.
        let free_gt: Vec<usize> = (0..gts.len()).filter(|&i| !gt_matched[i]).collect();
        let free_pred: Vec<usize> = (0..preds.len()).filter(|&j| !pred_matched[j]).collect();
        if !free_gt.is_empty() && !free_pred.is_empty() {
            let mut cost = CostMatrix::forbidden(free_gt.len(), free_pred.len());
            for (r, &gi) in free_gt.iter().enumerate() {
                for (c, &pi) in free_pred.iter().enumerate() {
                    let overlap = iou(&gts[gi].1, &preds[pi].1);
                    if overlap >= iou_threshold {
                        cost.set(r, c, 1.0 - overlap);
                    }
                }
            }
            for (r, c) in hungarian_solve(&cost).pairs {
                let (gi, pi) = (free_gt[r], free_pred[c]);
                gt_matched[gi] = true;
                pred_matched[pi] = true;
                matches.push((gi, pi));
            }
        }

        for (gi, pi) in matches {
            let gid = gts[gi].0;
            let hid = preds[pi].0;
            if let Some(prev_hid) = last_match.get(&gid) {
                if *prev_hid != hid {
                    switches += 1;
                }
            }
            last_match.insert(gid, hid);
        }

        fn_ += gt_matched.iter().filter(|&&m| !m).count() as u64;
        fp += pred_matched.iter().filter(|&&m| !m).count() as u64;

        // Fragmentation: a gt resumes being tracked after an untracked
        // stretch of its own trajectory.
        for (gi, (gid, _)) in gts.iter().enumerate() {
            let tracked = gt_matched[gi];
            if let Some(&prev_tracked) = was_tracked.get(gid) {
                if tracked && !prev_tracked && last_match.contains_key(gid) {
                    frag += 1;
                }
            }
            was_tracked.insert(*gid, tracked);
        }
    }

    let mota = if total_gt == 0 {
        if fp == 0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - (fn_ + fp + switches) as f64 / total_gt as f64
    };
    let idf1 = idf1_eval(gt, predicted, iou_threshold)?;
    Ok(EvalReport {
        mota,
        idf1,
        false_positives: fp,
        false_negatives: fn_,
        id_switches: switches,
        fragmentations: frag,
        gt_boxes: total_gt,
        predicted_boxes: total_pred,
    })
}

/// IDF1: identity-level F1 under the optimal global correspondence between
/// ground-truth and predicted ids, solved as a linear assignment on the
/// per-pair frame-overlap counts.
pub fn idf1_eval(gt: &TrackedBoxes, predicted: &TrackedBoxes, iou_threshold: f64) -> Result<f64> {
    let gt_frames = gt.by_frame()?;
    let pred_frames = predicted.by_frame()?;
    let total_gt: u64 = gt_frames.values().map(|v| v.len() as u64).sum();
    let total_pred: u64 = pred_frames.values().map(|v| v.len() as u64).sum();
    if total_gt + total_pred == 0 {
        return Ok(1.0);
    }

    let gt_ids: Vec<u64> = gt.by_object().keys().copied().collect();
    let pred_ids: Vec<u64> = predicted.by_object().keys().copied().collect();
    let gt_index: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pred_index: BTreeMap<u64, usize> =
        pred_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    // overlap[g][h] = frames where gt g and hypothesis h coexist with
    // sufficient IoU.
    let mut overlap = vec![vec![0u64; pred_ids.len()]; gt_ids.len()];
    for (frame, gts) in &gt_frames {
        if let Some(preds) = pred_frames.get(frame) {
            for (gid, gbox) in gts {
                for (pid, pbox) in preds {
                    if iou(gbox, pbox) >= iou_threshold {
                        overlap[gt_index[gid]][pred_index[pid]] += 1;
                    }
                }
            }
        }
    }

    // Maximize total overlap: minimize (max_overlap - overlap) over pairs
    // with nonzero overlap.
    let max_overlap = overlap
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0);
    if max_overlap == 0 {
        return Ok(0.0);
    }
    let mut cost = CostMatrix::forbidden(gt_ids.len(), pred_ids.len());
    for (g, row) in overlap.iter().enumerate() {
        for (h, &count) in row.iter().enumerate() {
            if count > 0 {
                cost.set(g, h, (max_overlap - count) as f64);
            }
        }
    }
    let idtp: u64 = hungarian_solve(&cost)
        .pairs
        .iter()
        .map(|&(g, h)| overlap[g][h])
        .sum();
    Ok(2.0 * idtp as f64 / (total_gt + total_pred) as f64)
}
