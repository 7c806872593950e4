//! Bit-exact parsing and emission of MOT-format files, the embedding
//! sidecar, and the flat key=value run configuration.
//!
//! Detections: `frame,id(-1),x,y,w,h,conf,-1,-1,-1`.
//! Ground truth: `frame,id,x,y,w,h,flag,class,visibility`.
//! Results: detection shape with real ids.
//! Sidecar: `frame,det_index,dim,v1,...,v_dim` with `det_index` the 0-based
//! position of the detection within its frame's rows.
//!
//! Parsers accept LF and CRLF and reject malformed lines with their line
//! number; emitters write LF and 6-significant-digit reals (full precision
//! for embedding components).

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::metrics::{FrameBox, TrackedBoxes};
use crate::tracker::{FrameResult, TrackerConfig};
use crate::types::{Detection, Embedding};

/// Formats a real with six significant digits, the fixed precision of every
/// emitted MOT file.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let d = x.abs().log10().floor() as i32;
    if d >= 6 {
        let p = 10f64.powi(d - 5);
        format!("{:.0}", (x / p).round() * p)
    } else {
        format!("{:.*}", (5 - d).max(0) as usize, x)
    }
}

/// One ground-truth row.
#[derive(Debug, Clone, PartialEq)]
pub struct GtRow {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
    pub flag: i64,
    pub class: i64,
    pub visibility: f64,
}

/// One tracker-output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// A sequence's detections (with optional embeddings) and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub name: String,
    pub frame_count: u32,
    /// Index 0 holds frame 1.
    pub frames: Vec<Vec<Detection>>,
    pub ground_truth: Option<Vec<GtRow>>,
}

impl SequenceBundle {
    pub fn from_detections(name: impl Into<String>, detections: Vec<Detection>) -> Self {
        let frame_count = detections.iter().map(|d| d.frame).max().unwrap_or(0);
        let mut frames = vec![Vec::new(); frame_count as usize];
        for det in detections {
            frames[(det.frame - 1) as usize].push(det);
        }
        Self {
            name: name.into(),
            frame_count,
            frames,
            ground_truth: None,
        }
    }

    /// Frames 1..=frame_count, empty frames included.
    pub fn detection_stream(&self) -> impl Iterator<Item = (u32, Vec<Detection>)> + '_ {
        self.frames
            .iter()
            .enumerate()
            .map(|(idx, dets)| (idx as u32 + 1, dets.clone()))
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| !line.trim().is_empty())
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn expect_fields<'a>(
    line_no: usize,
    line: &'a str,
    expected: usize,
    kind: &str,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(parse_err(
            line_no,
            "line",
            format!(
                "{kind} rows have {expected} fields, got {}",
                fields.len()
            ),
        ));
    }
    Ok(fields)
}

fn field_f64(line_no: usize, fields: &[&str], idx: usize, name: &str) -> Result<f64> {
    let raw = fields[idx];
    let value: f64 = raw
        .parse()
        .map_err(|_| parse_err(line_no, name, format!("not a number: '{raw}'")))?;
    if !value.is_finite() {
        return Err(parse_err(line_no, name, format!("not finite: '{raw}'")));
    }
    Ok(value)
}

fn field_i64(line_no: usize, fields: &[&str], idx: usize, name: &str) -> Result<i64> {
    let raw = fields[idx];
    raw.parse()
        .map_err(|_| parse_err(line_no, name, format!("not an integer: '{raw}'")))
}

fn field_frame(line_no: usize, fields: &[&str], idx: usize) -> Result<u32> {
    let value = field_i64(line_no, fields, idx, "frame")?;
    if value < 1 {
        return Err(parse_err(
            line_no,
            "frame",
            format!("frame index must be >= 1, got {value}"),
        ));
    }
    Ok(value as u32)
}

fn field_bbox(line_no: usize, fields: &[&str], start: usize) -> Result<BoundingBox> {
    let x = field_f64(line_no, fields, start, "x")?;
    let y = field_f64(line_no, fields, start + 1, "y")?;
    let w = field_f64(line_no, fields, start + 2, "w")?;
    let h = field_f64(line_no, fields, start + 3, "h")?;
    if w <= 0.0 {
        return Err(parse_err(line_no, "w", format!("width must be positive, got {w}")));
    }
    if h <= 0.0 {
        return Err(parse_err(line_no, "h", format!("height must be positive, got {h}")));
    }
    BoundingBox::new(x, y, w, h).map_err(|e| parse_err(line_no, "box", e.to_string()))
}

/// Parses a detections file (ids ignored, embeddings absent).
pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (line_no, line) in lines(text) {
        let fields = expect_fields(line_no, line, 10, "detection")?;
        let frame = field_frame(line_no, &fields, 0)?;
        field_i64(line_no, &fields, 1, "id")?;
        let bbox = field_bbox(line_no, &fields, 2)?;
        let conf = field_f64(line_no, &fields, 6, "conf")?;
        if !(0.0..=1.0).contains(&conf) {
            return Err(parse_err(
                line_no,
                "conf",
                format!("confidence must be in [0,1], got {conf}"),
            ));
        }
        for (idx, name) in [(7, "x3d"), (8, "y3d"), (9, "z3d")] {
            field_f64(line_no, &fields, idx, name)?;
        }
        out.push(
            Detection::new(frame, bbox, conf, None)
                .map_err(|e| parse_err(line_no, "row", e.to_string()))?,
        );
    }
    Ok(out)
}

/// Parses a ground-truth file.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GtRow>> {
    let mut out = Vec::new();
    for (line_no, line) in lines(text) {
        let fields = expect_fields(line_no, line, 9, "ground-truth")?;
        let frame = field_frame(line_no, &fields, 0)?;
        let id = field_i64(line_no, &fields, 1, "id")?;
        if id < 1 {
            return Err(parse_err(line_no, "id", format!("id must be >= 1, got {id}")));
        }
        let bbox = field_bbox(line_no, &fields, 2)?;
        let flag = field_i64(line_no, &fields, 6, "flag")?;
        let class = field_i64(line_no, &fields, 7, "class")?;
        let visibility = field_f64(line_no, &fields, 8, "visibility")?;
        out.push(GtRow {
            frame,
            id: id as u64,
            bbox,
            flag,
            class,
            visibility,
        });
    }
    Ok(out)
}

/// Parses a results file.
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut out = Vec::new();
    for (line_no, line) in lines(text) {
        let fields = expect_fields(line_no, line, 10, "result")?;
        let frame = field_frame(line_no, &fields, 0)?;
        let id = field_i64(line_no, &fields, 1, "id")?;
        if id < 1 {
            return Err(parse_err(line_no, "id", format!("id must be >= 1, got {id}")));
        }
        let bbox = field_bbox(line_no, &fields, 2)?;
        let conf = field_f64(line_no, &fields, 6, "conf")?;
        if !(0.0..=1.0).contains(&conf) {
            return Err(parse_err(
                line_no,
                "conf",
                format!("confidence must be in [0,1], got {conf}"),
            ));
        }
        for (idx, name) in [(7, "x3d"), (8, "y3d"), (9, "z3d")] {
            field_f64(line_no, &fields, idx, name)?;
        }
        out.push(ResultRow {
            frame,
            id: id as u64,
            bbox,
            confidence: conf,
        });
    }
    Ok(out)
}

/// One embedding sidecar row.
#[derive(Debug, Clone, PartialEq)]
pub struct SidecarRow {
    pub frame: u32,
    pub det_index: usize,
    pub values: Vec<f64>,
}

/// Parses the embedding sidecar, enforcing a constant dimension and unique
/// (frame, det_index) keys.
pub fn parse_embedding_sidecar(text: &str) -> Result<Vec<SidecarRow>> {
    let mut out: Vec<SidecarRow> = Vec::new();
    let mut seen: BTreeSet<(u32, usize)> = BTreeSet::new();
    let mut dim: Option<usize> = None;
    for (line_no, line) in lines(text) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 4 {
            return Err(parse_err(line_no, "line", "sidecar rows need at least 4 fields"));
        }
        let frame = field_frame(line_no, &fields, 0)?;
        let det_index = field_i64(line_no, &fields, 1, "det_index")?;
        if det_index < 0 {
            return Err(parse_err(
                line_no,
                "det_index",
                format!("det_index must be >= 0, got {det_index}"),
            ));
        }
        let det_index = det_index as usize;
        let declared = field_i64(line_no, &fields, 2, "dim")?;
        let actual = fields.len() - 3;
        if declared < 1 || declared as usize != actual {
            return Err(Error::DimMismatch {
                expected: declared.max(0) as usize,
                got: actual,
            });
        }
        if let Some(d) = dim {
            if d != actual {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: actual,
                });
            }
        } else {
            dim = Some(actual);
        }
        if !seen.insert((frame, det_index)) {
            return Err(Error::DuplicateSidecarRow { frame, det_index });
        }
        let mut values = Vec::with_capacity(actual);
        for k in 0..actual {
            values.push(field_f64(line_no, &fields, 3 + k, "component")?);
        }
        out.push(SidecarRow {
            frame,
            det_index,
            values,
        });
    }
    Ok(out)
}

/// Attaches sidecar embeddings to detections by (frame, det_index).
pub fn attach_embeddings(frames: &mut [Vec<Detection>], rows: &[SidecarRow]) -> Result<()> {
    for row in rows {
        let frame_dets = frames
            .get_mut((row.frame - 1) as usize)
            .ok_or(Error::DanglingSidecarRef {
                frame: row.frame,
                det_index: row.det_index,
            })?;
        let det = frame_dets
            .get_mut(row.det_index)
            .ok_or(Error::DanglingSidecarRef {
                frame: row.frame,
                det_index: row.det_index,
            })?;
        det.embedding = Some(Embedding::new(row.values.clone())?);
    }
    Ok(())
}

/// Loads detections plus an optional sidecar into a bundle.
pub fn load_sequence(
    name: impl Into<String>,
    det_path: &Path,
    emb_path: Option<&Path>,
) -> Result<SequenceBundle> {
    let detections = parse_detections(&std::fs::read_to_string(det_path)?)?;
    let mut bundle = SequenceBundle::from_detections(name, detections);
    if let Some(path) = emb_path {
        let rows = parse_embedding_sidecar(&std::fs::read_to_string(path)?)?;
        attach_embeddings(&mut bundle.frames, &rows)?;
    }
    Ok(bundle)
}

/// Emits detections: frames ascending, rows in insertion order.
pub fn emit_detections(frames: &[Vec<Detection>]) -> String {
    let mut out = String::new();
    for dets in frames {
        for det in dets {
            out.push_str(&format!(
                "{},-1,{},{},{},{},{},-1,-1,-1\n",
                det.frame,
                format_sig6(det.bbox.x),
                format_sig6(det.bbox.y),
                format_sig6(det.bbox.w),
                format_sig6(det.bbox.h),
                format_sig6(det.confidence),
            ));
        }
    }
    out
}

/// Emits ground truth sorted by (frame, id).
pub fn emit_ground_truth(rows: &[GtRow]) -> String {
    let mut sorted: Vec<&GtRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.frame,
            r.id,
            format_sig6(r.bbox.x),
            format_sig6(r.bbox.y),
            format_sig6(r.bbox.w),
            format_sig6(r.bbox.h),
            r.flag,
            r.class,
            format_sig6(r.visibility),
        ));
    }
    out
}

fn emit_result_line(out: &mut String, frame: u32, id: u64, bbox: &BoundingBox, conf: f64) {
    out.push_str(&format!(
        "{},{},{},{},{},{},{},-1,-1,-1\n",
        frame,
        id,
        format_sig6(bbox.x),
        format_sig6(bbox.y),
        format_sig6(bbox.w),
        format_sig6(bbox.h),
        format_sig6(conf),
    ));
}

/// Emits tracker output: frames ascending, ids ascending within each frame,
/// six significant digits, one newline-terminated line per box. An empty run
/// produces an empty file.
pub fn emit_results(results: &[FrameResult]) -> String {
    let mut out = String::new();
    for frame_result in results {
        let mut tracks: Vec<_> = frame_result.tracks.iter().collect();
        tracks.sort_by_key(|t| t.id);
        for t in tracks {
            emit_result_line(&mut out, frame_result.frame, t.id.0, &t.bbox, t.confidence);
        }
    }
    out
}

/// Emits raw result rows sorted by (frame, id).
pub fn emit_result_rows(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::new();
    for r in sorted {
        emit_result_line(&mut out, r.frame, r.id, &r.bbox, r.confidence);
    }
    out
}

/// Emits the sidecar for every detection that carries an embedding, at full
/// float precision.
pub fn emit_embedding_sidecar(frames: &[Vec<Detection>]) -> String {
    let mut out = String::new();
    for dets in frames {
        for (det_index, det) in dets.iter().enumerate() {
            if let Some(e) = &det.embedding {
                out.push_str(&format!("{},{},{}", det.frame, det_index, e.dim()));
                for v in e.values() {
                    out.push_str(&format!(",{v}"));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Converts ground-truth rows to evaluation input.
pub fn gt_to_tracked_boxes(rows: &[GtRow]) -> TrackedBoxes {
    TrackedBoxes::new(
        rows.iter()
            .map(|r| FrameBox {
                frame: r.frame,
                id: r.id,
                bbox: r.bbox,
            })
            .collect(),
    )
}

/// Converts result rows to evaluation input.
pub fn results_to_tracked_boxes(rows: &[ResultRow]) -> TrackedBoxes {
    TrackedBoxes::new(
        rows.iter()
            .map(|r| FrameBox {
                frame: r.frame,
                id: r.id,
                bbox: r.bbox,
            })
            .collect(),
    )
}

/// Tracker configuration plus the run seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub seed: u64,
}

fn range_err(key: &str, range: &str, value: &str) -> Error {
    Error::ConfigRange {
        key: key.into(),
        range: range.into(),
        value: value.into(),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(range_err(key, "true|false", value)),
    }
}

fn parse_f64_in(key: &str, value: &str, lo: f64, hi: f64) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| range_err(key, &format!("[{lo},{hi}]"), value))?;
    if v.is_nan() || v < lo || v > hi {
        return Err(range_err(key, &format!("[{lo},{hi}]"), value));
    }
    Ok(v)
}

fn parse_count(key: &str, value: &str, min: u64) -> Result<u64> {
    let v: u64 = value.parse().map_err(|_| range_err(key, &format!(">= {min}"), value))?;
    if v < min {
        return Err(range_err(key, &format!(">= {min}"), value));
    }
    Ok(v)
}

/// Loads the flat key=value run configuration. Unknown keys are rejected;
/// absent keys take their defaults; every value is range-checked.
///
/// Keys: `alpha, paradigm, det_conf_threshold, min_hits, max_age,
/// gallery_capacity, appearance_gate, serial_filter_gate,
/// use_observation_recovery, use_direction_consistency, direction_weight,
/// seed, normalize_reconstructed`.
pub fn load_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (line_no, line) in lines(text) {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            parse_err(line_no, "line", "expected key=value")
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "alpha" => cfg.tracker.alpha = parse_f64_in(key, value, 0.0, 1.0)?,
            "paradigm" => {
                cfg.tracker.paradigm = crate::assoc::Paradigm::parse(value).ok_or_else(|| {
                    range_err(
                        key,
                        "topic|motion_only|appearance_only|serial_motion_primary|serial_appearance_primary",
                        value,
                    )
                })?
            }
            "det_conf_threshold" => {
                cfg.tracker.det_conf_threshold = parse_f64_in(key, value, 0.0, 1.0)?
            }
            "min_hits" => cfg.tracker.min_hits = parse_count(key, value, 1)? as u32,
            "max_age" => cfg.tracker.max_age = parse_count(key, value, 1)? as u32,
            "gallery_capacity" => {
                cfg.tracker.appearance.gallery_capacity = parse_count(key, value, 1)? as usize
            }
            "appearance_gate" => {
                cfg.tracker.appearance.appearance_gate = parse_f64_in(key, value, 0.0, 1.0)?
            }
            "serial_filter_gate" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| range_err(key, ">= 0", value))?;
                if v.is_nan() || v < 0.0 {
                    return Err(range_err(key, ">= 0", value));
                }
                cfg.tracker.serial_filter_gate = v;
            }
            "use_observation_recovery" => {
                cfg.tracker.motion.use_observation_recovery = parse_bool(key, value)?
            }
            "use_direction_consistency" => {
                cfg.tracker.motion.use_direction_consistency = parse_bool(key, value)?
            }
            "direction_weight" => {
                cfg.tracker.motion.direction_weight = parse_f64_in(key, value, 0.0, f64::MAX)?
            }
            "seed" => cfg.seed = parse_count(key, value, 0)?,
            "normalize_reconstructed" => {
                cfg.tracker.appearance.normalize_reconstructed = parse_bool(key, value)?
            }
            _ => return Err(Error::UnknownConfigKey { key: key.into() }),
        }
    }
    cfg.tracker.validate()?;
    Ok(cfg)
}

/// Emits a configuration document that `load_config` reads back identically.
pub fn emit_config(cfg: &RunConfig) -> String {
    format!(
        "alpha = {}\n\
         paradigm = {}\n\
         det_conf_threshold = {}\n\
         min_hits = {}\n\
         max_age = {}\n\
         gallery_capacity = {}\n\
         appearance_gate = {}\n\
         serial_filter_gate = {}\n\
         use_observation_recovery = {}\n\
         use_direction_consistency = {}\n\
         direction_weight = {}\n\
         seed = {}\n\
         normalize_reconstructed = {}\n",
        cfg.tracker.alpha,
        cfg.tracker.paradigm.name(),
        cfg.tracker.det_conf_threshold,
        cfg.tracker.min_hits,
        cfg.tracker.max_age,
        cfg.tracker.appearance.gallery_capacity,
        cfg.tracker.appearance.appearance_gate,
        cfg.tracker.serial_filter_gate,
        cfg.tracker.motion.use_observation_recovery,
        cfg.tracker.motion.use_direction_consistency,
        cfg.tracker.motion.direction_weight,
        cfg.seed,
        cfg.tracker.appearance.normalize_reconstructed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn parse_detection_example() {
        let dets = parse_detections("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].frame, 1);
        assert_eq!(dets[0].bbox, BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
        assert_eq!(dets[0].confidence, 0.9);
    }

    #[test]
    fn zero_width_rejected_with_line_number() {
        let err = parse_detections("1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,10,20,0,40,0.9,-1,-1,-1\n")
            .unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "w");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trailing_fields_rejected() {
        assert!(parse_detections("1,-1,10,20,30,40,0.9,-1,-1,-1,-1\n").is_err());
    }

    #[test]
    fn negative_frame_rejected() {
        assert!(parse_detections("-3,-1,10,20,30,40,0.9,-1,-1,-1\n").is_err());
        assert!(parse_detections("0,-1,10,20,30,40,0.9,-1,-1,-1\n").is_err());
    }

    #[test]
    fn crlf_accepted() {
        let dets = parse_detections("1,-1,10,20,30,40,0.9,-1,-1,-1\r\n2,-1,1,2,3,4,0.5,-1,-1,-1\r\n")
            .unwrap();
        assert_eq!(dets.len(), 2);
    }

    #[test]
    fn gt_round_trip() {
        let rows = vec![
            GtRow {
                frame: 1,
                id: 3,
                bbox: BoundingBox::new(1.5, 2.25, 10.0, 12.0).unwrap(),
                flag: 1,
                class: 1,
                visibility: 1.0,
            },
            GtRow {
                frame: 2,
                id: 1,
                bbox: BoundingBox::new(4.0, 4.0, 8.0, 8.0).unwrap(),
                flag: 0,
                class: 2,
                visibility: 0.5,
            },
        ];
        let parsed = parse_ground_truth(&emit_ground_truth(&rows)).unwrap();
        let mut expected = rows;
        expected.sort_by_key(|r| (r.frame, r.id));
        assert_eq!(parsed, expected);
    }

    #[test]
    fn sidecar_example_and_errors() {
        let rows = parse_embedding_sidecar("1,0,2,1.0,0.0\n").unwrap();
        assert_eq!(rows[0].frame, 1);
        assert_eq!(rows[0].det_index, 0);
        assert_eq!(rows[0].values, vec![1.0, 0.0]);

        // Declared dim disagreeing with the component count.
        assert!(matches!(
            parse_embedding_sidecar("1,0,3,1.0,0.0\n"),
            Err(Error::DimMismatch { .. })
        ));
        // Two rows with different dimensions.
        assert!(matches!(
            parse_embedding_sidecar("1,0,2,1.0,0.0\n1,1,3,1.0,0.0,0.0\n"),
            Err(Error::DimMismatch { expected: 2, got: 3 })
        ));
        // Duplicate key.
        assert!(matches!(
            parse_embedding_sidecar("1,0,2,1.0,0.0\n1,0,2,0.0,1.0\n"),
            Err(Error::DuplicateSidecarRow { frame: 1, det_index: 0 })
        ));
    }

    #[test]
    fn sidecar_dangling_reference() {
        let dets = parse_detections("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        let mut bundle = SequenceBundle::from_detections("s", dets);
        let rows = parse_embedding_sidecar("1,1,2,1.0,0.0\n").unwrap();
        assert!(matches!(
            attach_embeddings(&mut bundle.frames, &rows),
            Err(Error::DanglingSidecarRef { frame: 1, det_index: 1 })
        ));
    }

    #[test]
    fn sidecar_round_trip_full_precision() {
        let mut rng = Rng::new(77);
        let mut frames: Vec<Vec<Detection>> = vec![Vec::new(); 3];
        for frame in 1..=3u32 {
            for _ in 0..2 {
                let e = Embedding::new(rng.unit_vector(4)).unwrap();
                frames[(frame - 1) as usize].push(
                    Detection::new(
                        frame,
                        BoundingBox::new(1.0, 1.0, 5.0, 5.0).unwrap(),
                        0.9,
                        Some(e),
                    )
                    .unwrap(),
                );
            }
        }
        let rows = parse_embedding_sidecar(&emit_embedding_sidecar(&frames)).unwrap();
        let mut reloaded = frames.clone();
        for dets in reloaded.iter_mut() {
            for det in dets.iter_mut() {
                det.embedding = None;
            }
        }
        attach_embeddings(&mut reloaded, &rows).unwrap();
        assert_eq!(frames, reloaded);
    }

    #[test]
    fn results_single_line_and_empty() {
        let rows = vec![ResultRow {
            frame: 1,
            id: 1,
            bbox: BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap(),
            confidence: 0.9,
        }];
        let text = emit_result_rows(&rows);
        assert_eq!(text, "1,1,10.0000,20.0000,30.0000,40.0000,0.900000,-1,-1,-1\n");
        assert_eq!(emit_result_rows(&[]), "");
        assert_eq!(parse_results(&text).unwrap(), rows);
    }

    #[test]
    fn format_sig6_cases() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(123.456789), "123.457");
        assert_eq!(format_sig6(0.00123456), "0.00123456");
        assert_eq!(format_sig6(-5.5), "-5.50000");
        assert_eq!(format_sig6(1234567.0), "1234570");
    }

    #[test]
    fn config_defaults_on_empty() {
        let cfg = load_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.tracker.alpha, 0.5);
    }

    #[test]
    fn config_alpha_range_error() {
        let err = load_config("alpha = 1.5\n").unwrap_err();
        match err {
            Error::ConfigRange { key, range, .. } => {
                assert_eq!(key, "alpha");
                assert_eq!(range, "[0,1]");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn config_unknown_key_rejected() {
        assert!(matches!(
            load_config("alhpa = 0.5\n"),
            Err(Error::UnknownConfigKey { .. })
        ));
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.tracker.alpha = 0.3;
        cfg.tracker.paradigm = crate::assoc::Paradigm::SerialMotionPrimary;
        cfg.tracker.min_hits = 4;
        cfg.tracker.motion.use_direction_consistency = true;
        cfg.seed = 99;
        let reloaded = load_config(&emit_config(&cfg)).unwrap();
        assert_eq!(reloaded, cfg);
    }

    #[test]
    fn config_comments_and_spacing() {
        let cfg = load_config("# tracker settings\n  alpha=0.25\n\nmax_age = 7\n").unwrap();
        assert_eq!(cfg.tracker.alpha, 0.25);
        assert_eq!(cfg.tracker.max_age, 7);
    }

    #[test]
    fn detection_round_trip_on_grid() {
        // Values representable at six significant digits survive the trip.
        let mut rng = Rng::new(55);
        let mut frames: Vec<Vec<Detection>> = vec![Vec::new(); 4];
        for frame in 1..=4u32 {
            for _ in 0..rng.index(4) {
                let q = |v: f64| format_sig6(v).parse::<f64>().unwrap();
                let det = Detection::new(
                    frame,
                    BoundingBox::new(
                        q(rng.uniform_in(0.0, 500.0)),
                        q(rng.uniform_in(0.0, 500.0)),
                        q(rng.uniform_in(1.0, 80.0)),
                        q(rng.uniform_in(1.0, 80.0)),
                    )
                    .unwrap(),
                    q(rng.uniform_in(0.0, 1.0)),
                    None,
                )
                .unwrap();
                frames[(frame - 1) as usize].push(det);
            }
        }
        let reparsed = parse_detections(&emit_detections(&frames)).unwrap();
        let flat: Vec<Detection> = frames.into_iter().flatten().collect();
        assert_eq!(reparsed, flat);
    }
}
