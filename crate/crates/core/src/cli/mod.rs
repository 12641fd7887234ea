//! The `dcftrack` command line: `track`, `benchmark`, `synth` and `compare`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O or
//! ingestion error, 4 internal error.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::benchmark::run_benchmark;
use crate::evaluation::dataset::{write_otb_sequence, Sequence};
use crate::evaluation::metrics::compute_metrics;
use crate::evaluation::report::{
    compare_results, read_results_csv, summarize, write_jsonl, write_results_csv, write_success_csv,
    write_summary_csv,
};
use crate::evaluation::synthetic::SyntheticSpec;
use crate::trackers::{init, FrameDiagnostics, TrackerKind};

pub use config::{load_config_file, load_sequence, resolve, FlagValues, RunConfig, CONFIG_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Per-frame boxes written by `track`, one `frame,x,y,w,h` line per frame.
pub const BOXES_FILE: &str = "boxes.txt";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const SPEC_FILE: &str = "spec.txt";

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Ingestion { .. } | Error::Io { .. } => EXIT_IO,
        Error::InvalidState(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "dcftrack", version, about = "Correlation filter tracking and benchmarking")]
pub struct Cli {
    /// Config file; defaults to $DCFTRACK_CONFIG when set.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one sequence and write per-frame boxes and diagnostics.
    Track(RunArgs),
    /// Run trackers over sequences and write result tables.
    Benchmark(RunArgs),
    /// Render a synthetic sequence to an OTB-style directory.
    Synth(SynthArgs),
    /// Print metric differences between two results.csv files.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Tracker kind; `benchmark` takes a comma list or `all`.
    #[arg(long, short)]
    pub tracker: Option<String>,
    /// OTB directory, synthetic spec file or `builtin:<name>` (repeatable).
    #[arg(long = "seq", short, value_name = "SOURCE")]
    pub seq: Vec<String>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// plain, reset, tre or sre.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for synthetic sequences.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leave timing fields empty so output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    /// Tracker parameter override, `key=value` or `kind.key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    fn flags(&self) -> FlagValues {
        FlagValues {
            trackers: self.tracker.clone(),
            sequences: self.seq.clone(),
            out: self.out.clone(),
            protocol: self.protocol.clone(),
            threads: self.threads,
            seed: self.seed,
            no_timing: self.no_timing,
            set: self.set.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic spec file or `builtin:<name>`.
    #[arg(long = "seq", short, value_name = "SOURCE")]
    pub seq: String,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub before: PathBuf,
    pub after: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("dcftrack: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = match &cli.command {
        Command::Track(_) | Command::Benchmark(_) => load_config_file(cli.config.as_deref())?,
        _ => None,
    };
    match &cli.command {
        Command::Track(a) => {
            let rc = resolve(file.as_ref(), &a.flags(), &[TrackerKind::Dsst])?;
            track_command(&rc)
        }
        Command::Benchmark(a) => {
            let rc = resolve(file.as_ref(), &a.flags(), &TrackerKind::ALL)?;
            benchmark_command(&rc)
        }
        Command::Synth(a) => synth_command(&a.seq, &a.out, a.seed),
        Command::Compare(a) => {
            let text = compare_command(&a.before, &a.after)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn make_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::state(e.to_string()))
}

#[derive(Serialize)]
struct DiagnosticsLine<'a> {
    frame: usize,
    #[serde(flatten)]
    diagnostics: &'a FrameDiagnostics,
}

fn single_sequence(rc: &RunConfig) -> Result<Sequence> {
    match rc.sequences.as_slice() {
        [one] => load_sequence(one, rc.seed),
        [] => Err(Error::arg("no sequence given (use --seq)")),
        _ => Err(Error::arg("track takes exactly one sequence")),
    }
}

/// Writes `boxes.txt` (1-based frame number and box in the ground-truth
/// convention), `diagnostics.jsonl` and `metrics.json` to the output directory.
pub fn track_command(rc: &RunConfig) -> Result<()> {
    let (kind, cfg) = match rc.trackers.as_slice() {
        [one] => one,
        _ => return Err(Error::arg("track takes exactly one tracker")),
    };
    let seq = single_sequence(rc)?;
    make_dir(&rc.out)?;

    let start = std::time::Instant::now();
    let mut handle = init(*kind, &seq.frames[0], seq.ground_truth[0], cfg)?;
    let mut boxes = vec![seq.ground_truth[0]];
    let mut diags = Vec::with_capacity(seq.len());
    for frame in &seq.frames[1..] {
        let (b, mut d) = handle.track(frame)?;
        if !rc.timing {
            d.timings = Default::default();
        }
        boxes.push(b);
        diags.push(d);
    }
    let seconds = start.elapsed().as_secs_f64();

    let path = rc.out.join(BOXES_FILE);
    let mut w = create(&path)?;
    for (i, b) in boxes.iter().enumerate() {
        writeln!(w, "{},{:.6},{:.6},{:.6},{:.6}", i + 1, b.x + 1.0, b.y + 1.0, b.width, b.height)
            .map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = rc.out.join(DIAGNOSTICS_FILE);
    let mut w = create(&path)?;
    for (i, d) in diags.iter().enumerate() {
        let line = to_json(&DiagnosticsLine {
            frame: i + 2,
            diagnostics: d,
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let mut metrics = compute_metrics(&boxes, &seq.ground_truth)?;
    if rc.timing && seconds > 0.0 {
        metrics.fps = Some(boxes.len() as f64 / seconds);
    }
    let path = rc.out.join(METRICS_FILE);
    std::fs::write(&path, to_json(&metrics)? + "\n").map_err(|e| Error::io(&path, e))?;
    eprintln!(
        "{} on {}: OP {:.3} DP {:.3} AUC {:.3}",
        kind, seq.name, metrics.op, metrics.dp, metrics.auc
    );
    Ok(())
}

/// Writes `results.csv`, `summary.csv`, `success.csv` and `results.jsonl`.
pub fn benchmark_command(rc: &RunConfig) -> Result<()> {
    if rc.sequences.is_empty() {
        return Err(Error::arg("no sequence given (use --seq)"));
    }
    let sequences = rc
        .sequences
        .iter()
        .map(|s| load_sequence(s, rc.seed))
        .collect::<Result<Vec<_>>>()?;
    let results = run_benchmark(&rc.trackers, &sequences, rc.protocol, rc.threads)?;
    make_dir(&rc.out)?;
    let summary = summarize(&results);
    write_results_csv(&results, &rc.out.join("results.csv"), rc.timing)?;
    write_summary_csv(&summary, &rc.out.join("summary.csv"), rc.timing)?;
    write_success_csv(&summary, &rc.out.join("success.csv"))?;
    write_jsonl(&results, &rc.out.join("results.jsonl"), rc.timing)?;
    for s in &summary {
        eprintln!(
            "{:<16} OP {:.3} DP {:.3} AUC {:.3}",
            s.tracker, s.mean_op, s.mean_dp, s.mean_auc
        );
    }
    Ok(())
}

/// Renders the sequence into `out` and saves the spec that produced it.
pub fn synth_command(source: &str, out: &Path, seed: Option<u64>) -> Result<()> {
    let spec = match source.strip_prefix(config::BUILTIN_PREFIX) {
        Some(name) => SyntheticSpec::builtin(name, seed.unwrap_or(1)).ok_or_else(|| {
            Error::arg(format!(
                "unknown built-in sequence '{name}'; available: {}",
                SyntheticSpec::BUILTINS.join(", ")
            ))
        })?,
        None => {
            let path = Path::new(source);
            if !path.is_file() {
                return Err(Error::ingest(path, "no such spec file"));
            }
            let mut spec = SyntheticSpec::load(path)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec
        }
    };
    let seq = crate::evaluation::synthetic::render_synthetic(&spec)?;
    write_otb_sequence(&seq, out)?;
    let path = out.join(SPEC_FILE);
    std::fs::write(&path, spec.to_text()).map_err(|e| Error::io(&path, e))
}

/// Table of `sequence,tracker,metric,before,after,delta`.
pub fn compare_command(before: &Path, after: &Path) -> Result<String> {
    let a = read_results_csv(before)?;
    let b = read_results_csv(after)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let mut out = String::from("sequence,tracker,metric,before,after,delta\n");
    for d in compare_results(&a, &b) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.sequence,
            d.tracker,
            d.metric,
            opt(d.before),
            opt(d.after),
            opt(d.delta())
        ));
    }
    Ok(out)
}
