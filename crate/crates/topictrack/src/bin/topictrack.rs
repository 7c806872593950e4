use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topictrack::assoc::Paradigm;
use topictrack::cli::{
    cmd_compare, cmd_eval, cmd_simulate, cmd_stats, cmd_track, CliError, CompareArgs, EvalArgs,
    SimulateArgs, StatsArgs, TrackArgs,
};

/// Multi-object tracking toolbox: parallel-association tracker, baselines,
/// MOT evaluation, dataset statistics and a synthetic scenario generator.
#[derive(Parser)]
#[command(name = "topictrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tracker over a detection file and write a MOT results file.
    Track {
        /// MOT detections file.
        #[arg(long)]
        dets: PathBuf,
        /// Embedding sidecar (required by appearance-using paradigms).
        #[arg(long)]
        emb: Option<PathBuf>,
        /// Run configuration (key=value document).
        #[arg(long)]
        config: PathBuf,
        /// Output results file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a results file against ground truth (CLEAR + IDF1).
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        res: PathBuf,
        /// Matching IoU threshold.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
    },
    /// Motion-complexity statistics (MMSAO/MMSO) of ground-truth files.
    Stats {
        /// Ground-truth files; statistics print per file and pooled.
        #[arg(long, num_args = 1.., required = true)]
        gt: Vec<PathBuf>,
    },
    /// Generate a synthetic scenario: gt.txt, det.txt and emb.csv.
    Simulate {
        #[arg(long = "scenario-config")]
        scenario_config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several association paradigms on one sequence and compare metrics.
    Compare {
        #[arg(long)]
        dets: PathBuf,
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated paradigm list (default: all five).
        #[arg(long)]
        paradigms: Option<String>,
        /// Additionally sweep alpha over 0.0..=1.0 in steps of 0.1.
        #[arg(long)]
        alpha_sweep: bool,
    },
}

fn parse_paradigms(list: &str) -> Result<Vec<Paradigm>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|token| {
            Paradigm::parse(token).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown paradigm '{token}' (expected topic, motion_only, appearance_only, \
                     serial_motion_primary or serial_appearance_primary)"
                ))
            })
        })
        .collect()
}

fn run(command: Command) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Track {
            dets,
            emb,
            config,
            out: out_path,
        } => cmd_track(
            &TrackArgs {
                dets,
                emb,
                config,
                out: out_path,
            },
            &mut out,
        ),
        Command::Eval { gt, res, iou } => cmd_eval(&EvalArgs { gt, res, iou }, &mut out),
        Command::Stats { gt } => cmd_stats(&StatsArgs { gt }, &mut out),
        Command::Simulate {
            scenario_config,
            out: out_dir,
        } => cmd_simulate(
            &SimulateArgs {
                scenario_config,
                out: out_dir,
            },
            &mut out,
        ),
        Command::Compare {
            dets,
            emb,
            gt,
            config,
            paradigms,
            alpha_sweep,
        } => {
            let paradigms = match paradigms {
                Some(list) => parse_paradigms(&list)?,
                None => Vec::new(),
            };
            cmd_compare(
                &CompareArgs {
                    dets,
                    emb,
                    gt,
                    config,
                    paradigms,
                    alpha_sweep,
                },
                &mut out,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error[usage]: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.error_line());
            ExitCode::from(e.exit_code())
        }
    }
}
