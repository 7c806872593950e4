//! Batch command implementations behind the `topictrack` binary.
//!
//! Every command prints machine-parsable `key=value` report lines with
//! floats at a fixed six decimal places; failures map to an exit-code
//! taxonomy (1 usage, 2 data, 3 internal) with a single-line
//! `error[<class>]: <message>` prefix on stderr.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::assoc::Paradigm;
use crate::error::Error;
use crate::io::{
    emit_results, gt_to_tracked_boxes, load_config, load_sequence, parse_ground_truth,
    results_to_tracked_boxes, RunConfig,
};
use crate::metrics::{clear_eval, motion_complexity, EvalReport, FrameBox, TrackedBoxes};
use crate::simgen::{emit_scenario_config, export, generate, parse_scenario_config};
use crate::tracker::{run_sequence, FrameDiagnostics, FrameResult, TrackerConfig};

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration (exit 1).
    Usage(String),
    /// Unreadable or malformed data (exit 2).
    Data(String),
    /// Internal failure (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Single-line machine-parsable error message.
    pub fn error_line(&self) -> String {
        match self {
            CliError::Usage(m) => format!("error[usage]: {m}"),
            CliError::Data(m) => format!("error[data]: {m}"),
            CliError::Internal(m) => format!("error[internal]: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::ConfigRange { .. }
            | Error::UnknownConfigKey { .. }
            | Error::MissingEmbedding { .. }
            | Error::InvalidScenario { .. } => CliError::Usage(e.to_string()),
            Error::Parse { .. }
            | Error::Io(_)
            | Error::DuplicateId { .. }
            | Error::DanglingSidecarRef { .. }
            | Error::DuplicateSidecarRow { .. }
            | Error::DimMismatch { .. }
            | Error::InvalidBox { .. }
            | Error::InvalidEmbedding { .. }
            | Error::ZeroNormEmbedding
            | Error::OutOfOrderFrame { .. } => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn write_line(out: &mut dyn Write, line: String) -> CliResult {
    writeln!(out, "{line}").map_err(|e| CliError::Internal(e.to_string()))
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    Ok(load_config(&read(path)?)?)
}

#[derive(Debug, Clone)]
pub struct TrackArgs {
    pub dets: PathBuf,
    pub emb: Option<PathBuf>,
    pub config: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default)]
struct DiagTotals {
    conflicts: usize,
    appearance: usize,
    motion: usize,
    candidates: usize,
    conflicted: usize,
}

impl DiagTotals {
    fn add(&mut self, d: &FrameDiagnostics) {
        self.conflicts += d.conflicts;
        self.appearance += d.appearance_resolutions;
        self.motion += d.motion_resolutions;
        self.candidates += d.candidate_pairs;
        self.conflicted += d.conflicted_pairs;
    }

    fn rate(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.conflicted as f64 / self.candidates as f64
        }
    }
}

fn run_tracker(
    dets: &Path,
    emb: Option<&Path>,
    cfg: TrackerConfig,
    name: &str,
) -> Result<(Vec<FrameResult>, DiagTotals), CliError> {
    let bundle = load_sequence(name, dets, emb)?;
    let results = run_sequence(bundle.detection_stream(), cfg)?;
    let mut totals = DiagTotals::default();
    for r in &results {
        totals.add(&r.diagnostics);
    }
    Ok((results, totals))
}

fn emitted_tracked_boxes(results: &[FrameResult]) -> TrackedBoxes {
    TrackedBoxes::new(
        results
            .iter()
            .flat_map(|r| {
                r.tracks.iter().map(|t| FrameBox {
                    frame: r.frame,
                    id: t.id.0,
                    bbox: t.bbox,
                })
            })
            .collect(),
    )
}

/// Runs the tracker over a detection file and writes a MOT results file.
pub fn cmd_track(args: &TrackArgs, out: &mut dyn Write) -> CliResult {
    let run = load_run_config(&args.config)?;
    let name = args
        .dets
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    let (results, totals) = run_tracker(&args.dets, args.emb.as_deref(), run.tracker, &name)?;
    std::fs::write(&args.out, emit_results(&results))
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let boxes: usize = results.iter().map(|r| r.tracks.len()).sum();
    let ids: BTreeSet<u64> = results
        .iter()
        .flat_map(|r| r.tracks.iter().map(|t| t.id.0))
        .collect();
    write_line(
        out,
        format!(
            "sequence={name} frames={} boxes={boxes} tracks={} conflicts={} \
             appearance_resolutions={} motion_resolutions={} conflict_rate={}",
            results.len(),
            ids.len(),
            totals.conflicts,
            totals.appearance,
            totals.motion,
            f6(totals.rate()),
        ),
    )
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub gt: PathBuf,
    pub res: PathBuf,
    pub iou: f64,
}

fn eval_lines(report: &EvalReport) -> Vec<String> {
    vec![
        format!("MOTA={}", f6(report.mota)),
        format!("IDF1={}", f6(report.idf1)),
        format!("FP={}", report.false_positives),
        format!("FN={}", report.false_negatives),
        format!("IDs={}", report.id_switches),
        format!("Frag={}", report.fragmentations),
    ]
}

/// Evaluates a results file against ground truth.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult {
    if !(0.0..=1.0).contains(&args.iou) {
        return Err(CliError::Usage(format!(
            "--iou must be in [0,1], got {}",
            args.iou
        )));
    }
    let gt = gt_to_tracked_boxes(&parse_ground_truth(&read(&args.gt)?)?);
    let res = results_to_tracked_boxes(&crate::io::parse_results(&read(&args.res)?)?);
    let report = clear_eval(&gt, &res, args.iou)?;
    for line in eval_lines(&report) {
        write_line(out, line)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub gt: Vec<PathBuf>,
}

/// Prints MMSAO/MMSO per ground-truth file and pooled over all of them.
pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> CliResult {
    if args.gt.is_empty() {
        return Err(CliError::Usage("at least one --gt file is required".into()));
    }
    let mut videos = Vec::new();
    for path in &args.gt {
        let rows = parse_ground_truth(&read(path)?)?;
        videos.push((path, gt_to_tracked_boxes(&rows)));
    }
    for (path, video) in &videos {
        let stats = motion_complexity(std::slice::from_ref(video));
        write_line(
            out,
            format!(
                "video={} mmsao={} mmso={}",
                path.display(),
                f6(stats.mmsao),
                f6(stats.mmso)
            ),
        )?;
    }
    let all: Vec<TrackedBoxes> = videos.into_iter().map(|(_, v)| v).collect();
    let stats = motion_complexity(&all);
    write_line(
        out,
        format!(
            "video=<aggregate> mmsao={} mmso={}",
            f6(stats.mmsao),
            f6(stats.mmso)
        ),
    )
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario_config: PathBuf,
    pub out: PathBuf,
}

/// Generates a synthetic scenario and writes gt.txt, det.txt and emb.csv.
/// The normalized (config, seed) provenance goes to standard output.
pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let cfg = parse_scenario_config(&read(&args.scenario_config)?)?;
    let scenario = generate(&cfg)?;
    export(&scenario, &args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    for line in emit_scenario_config(&cfg).lines() {
        write_line(out, line.to_string())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub dets: PathBuf,
    pub emb: PathBuf,
    pub gt: PathBuf,
    pub config: PathBuf,
    /// Paradigms to run; all five when empty.
    pub paradigms: Vec<Paradigm>,
    pub alpha_sweep: bool,
}

/// Runs the requested paradigms (and optionally an alpha sweep) on one
/// sequence and prints one metrics row per run.
pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult {
    let run = load_run_config(&args.config)?;
    let gt = gt_to_tracked_boxes(&parse_ground_truth(&read(&args.gt)?)?);
    let paradigms: Vec<Paradigm> = if args.paradigms.is_empty() {
        vec![
            Paradigm::Topic,
            Paradigm::MotionOnly,
            Paradigm::AppearanceOnly,
            Paradigm::SerialMotionPrimary,
            Paradigm::SerialAppearancePrimary,
        ]
    } else {
        args.paradigms.clone()
    };

    let mut row = |label: String, cfg: TrackerConfig| -> CliResult {
        let (results, totals) = run_tracker(&args.dets, Some(&args.emb), cfg, "compare")?;
        let report = clear_eval(&gt, &emitted_tracked_boxes(&results), 0.5)?;
        write_line(
            out,
            format!(
                "{label} mota={} idf1={} fp={} fn={} ids={} conflicts={} \
                 appearance_resolutions={} motion_resolutions={} conflict_rate={}",
                f6(report.mota),
                f6(report.idf1),
                report.false_positives,
                report.false_negatives,
                report.id_switches,
                totals.conflicts,
                totals.appearance,
                totals.motion,
                f6(totals.rate()),
            ),
        )
    };

    for paradigm in paradigms {
        let cfg = TrackerConfig {
            paradigm,
            ..run.tracker.clone()
        };
        row(format!("paradigm={}", paradigm.name()), cfg)?;
    }

    if args.alpha_sweep {
        for step in 0..=10 {
            let alpha = step as f64 / 10.0;
            let cfg = TrackerConfig {
                paradigm: Paradigm::Topic,
                alpha,
                ..run.tracker.clone()
            };
            row(format!("alpha={alpha:.1}"), cfg)?;
        }
    }
    Ok(())
}
