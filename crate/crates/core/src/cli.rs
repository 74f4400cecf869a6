//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, 2 malformed input or arguments, 3 bad frame
//! dimensions, 4 model/feature count mismatch, 5 `compare` above threshold.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detector::{detect, detections_csv, load_model};
use crate::error::{HogError, Result};
use crate::features::{FeatureFile, FeatureView};
use crate::golden::{block_difference, compare, golden_hog};
use crate::ingest::{decode_image, GrayFrame};
use crate::pipeline::{run_frame, Pipeline, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_MODEL: i32 = 4;
pub const EXIT_THRESHOLD: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "hogpipe", version, about = "Streaming fixed-point HOG feature extractor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a feature file from an image.
    Extract(ExtractArgs),
    /// Run the fixed pipeline and the double-precision model and report their difference.
    Compare(CompareArgs),
    /// Measure throughput on pseudo-random frames.
    Bench(BenchArgs),
    /// Run a sliding-window linear detector over an image.
    Detect(DetectArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Binary PGM (P5) or PPM (P6) image.
    #[arg(long)]
    pub input: PathBuf,
    /// Interpret a P5 input as an RGGB Bayer mosaic.
    #[arg(long)]
    pub bayer: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Cell,
    Block,
}

impl From<ViewArg> for FeatureView {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Cell => FeatureView::CellRaw,
            ViewArg::Block => FeatureView::BlockNorm,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub view: ViewArg,
    /// Use the fixed-point pipeline (default).
    #[arg(long, conflicts_with = "golden")]
    pub fixed: bool,
    /// Use the double-precision reference model.
    #[arg(long)]
    pub golden: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest acceptable mean block-wise relative L1 error.
    #[arg(long, default_value_t = 0.03)]
    pub threshold: f64,
    /// Also write the element-wise block difference as a feature file.
    #[arg(long)]
    pub diff_output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model file: `hog-svm v1 N`, N weights, `bias b`, `threshold t`.
    #[arg(long)]
    pub weights: PathBuf,
    /// Window step in cells.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &HogError) -> i32 {
    match err {
        HogError::Io(_) => EXIT_IO,
        HogError::Dimension(_) | HogError::ShapeMismatch(_) | HogError::OutOfBounds(_) => EXIT_DIMENSION,
        HogError::CountMismatch { .. } => EXIT_MODEL,
        HogError::Format(_)
        | HogError::Layout(_)
        | HogError::FormatMismatch(_)
        | HogError::Order(_)
        | HogError::TapNotEnabled(_)
        | HogError::Config(_) => EXIT_FORMAT,
    }
}

fn load_gray(input: &InputArgs) -> Result<GrayFrame> {
    let raw = decode_image(&input.input)?;
    let raw = if input.bayer { raw.into_bayer()? } else { raw };
    raw.to_gray()
}

/// Output of a successful command: what goes to standard output, and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: EXIT_OK }
    }
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<Outcome> {
    let frame = load_gray(&args.input)?;
    let view = FeatureView::from(args.view);
    let cfg = PipelineConfig::new(frame.width(), frame.height())?;
    let (file, report) = if args.golden {
        let gold = golden_hog(&frame, cfg.epsilon)?;
        let report = format!(
            "model=golden\ncells_out={}\nblocks_out={}\n",
            gold.cells.len(),
            gold.blocks.len()
        );
        (FeatureFile::from_golden(&gold, view)?, report)
    } else {
        let (hog, stats) = run_frame(&frame, &cfg)?;
        (FeatureFile::from_hog(&hog, view)?, format!("model=fixed\n{}", stats.to_text()))
    };
    file.write(&args.output)?;
    Ok(Outcome::ok(format!("{report}values={}\n", file.payload.len())))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome> {
    let frame = load_gray(&args.input)?;
    let cfg = PipelineConfig::new(frame.width(), frame.height())?;
    let (hog, _) = run_frame(&frame, &cfg)?;
    let gold = golden_hog(&frame, cfg.epsilon)?;
    let report = compare(&hog, &gold, cfg.epsilon)?;
    if let Some(path) = &args.diff_output {
        let diff = block_difference(&hog, &gold)?;
        FeatureFile::new(hog.cells_wide as u32, hog.cells_high as u32, FeatureView::BlockNorm, diff)?.write(path)?;
    }
    let pass = report.mean_rel_err <= args.threshold;
    let mut out = report.to_text();
    let _ = writeln!(out, "threshold={}", args.threshold);
    let _ = writeln!(out, "pass={pass}");
    Ok(Outcome { stdout: out, code: if pass { EXIT_OK } else { EXIT_THRESHOLD } })
}

/// Uniform noise frame; the worst case for the datapath since every pixel votes.
pub fn noise_frame(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Result<GrayFrame> {
    let mut luma = vec![0u8; width * height];
    rng.fill_bytes(&mut luma);
    GrayFrame::new(width, height, luma)
}

/// Median of per-frame wall-clock times; robust to scheduler hiccups.
pub fn median_secs(times: &mut [f64]) -> f64 {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2.0
    }
}

/// Rates are reported for the median frame time; the mean over all frames
/// is printed alongside.
pub fn cmd_bench(args: &BenchArgs) -> Result<Outcome> {
    if args.frames == 0 {
        return Err(HogError::Config("bench needs at least one frame".into()));
    }
    let cfg = PipelineConfig::new(args.width, args.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let frames = (0..args.frames)
        .map(|_| noise_frame(args.width, args.height, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut pipeline = Pipeline::new(cfg)?;
    let (mut pixels, mut steps) = (0u64, 0u64);
    let mut frame_secs = Vec::with_capacity(frames.len());
    for f in &frames {
        let start = Instant::now();
        let run = pipeline.run(f)?;
        frame_secs.push(start.elapsed().as_secs_f64());
        pixels += run.stats.pixels_in;
        steps += run.stats.steps;
    }
    let total_secs = frame_secs.iter().sum::<f64>().max(1e-9);
    let median = median_secs(&mut frame_secs).max(1e-9);
    let frame_pixels = (args.width * args.height) as f64;
    let mut out = String::new();
    let _ = writeln!(out, "width={}", args.width);
    let _ = writeln!(out, "height={}", args.height);
    let _ = writeln!(out, "frames={}", args.frames);
    let _ = writeln!(out, "pixels_per_step={:.6}", pixels as f64 / steps as f64);
    let _ = writeln!(out, "mp_per_s={:.3}", frame_pixels / median / 1e6);
    let _ = writeln!(out, "fps={:.2}", 1.0 / median);
    let _ = writeln!(out, "mean_mp_per_s={:.3}", pixels as f64 / total_secs / 1e6);
    Ok(Outcome::ok(out))
}

pub fn cmd_detect(args: &DetectArgs) -> Result<Outcome> {
    let model = load_model(&args.weights)?;
    let frame = load_gray(&args.input)?;
    let cfg = PipelineConfig::new(frame.width(), frame.height())?;
    let (hog, _) = run_frame(&frame, &cfg)?;
    let csv = detections_csv(&detect(&hog, &model, args.stride)?);
    match &args.out {
        Some(path) => {
            fs::write(path, &csv)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(csv)),
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Detect(a) => cmd_detect(a),
    }
}

/// Parse, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FORMAT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            outcome.code
        }
        Err(e) => {
            eprintln!("hogpipe: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        let io = HogError::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "x"));
        assert_eq!(exit_code(&io), 1);
        assert_eq!(exit_code(&HogError::Format("x".into())), 2);
        assert_eq!(exit_code(&HogError::Dimension("x".into())), 3);
        assert_eq!(exit_code(&HogError::CountMismatch { expected: 1, found: 0 }), 4);
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["hogpipe", "extract", "--input", "a.pgm", "--output", "o", "--view", "block", "--golden"])
            .unwrap();
        match cli.command {
            Command::Extract(a) => {
                assert_eq!(a.view, ViewArg::Block);
                assert!(a.golden && !a.fixed);
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["hogpipe", "extract", "--input", "a", "--output", "o", "--view", "cell", "--fixed", "--golden"]).is_err());
        let cli = Cli::try_parse_from(["hogpipe", "compare", "--input", "a.pgm"]).unwrap();
        match cli.command {
            Command::Compare(a) => assert_eq!(a.threshold, 0.03),
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn bench_rejects_bad_dimensions() {
        let args = BenchArgs { width: 20, height: 16, frames: 1, seed: 0 };
        assert_eq!(exit_code(&cmd_bench(&args).err().unwrap()), EXIT_DIMENSION);
    }

    #[test]
    fn bench_is_deterministic() {
        let args = BenchArgs { width: 16, height: 16, frames: 2, seed: 3 };
        let pps = |o: Outcome| o.stdout.lines().find(|l| l.starts_with("pixels_per_step")).unwrap().to_string();
        assert_eq!(pps(cmd_bench(&args).unwrap()), pps(cmd_bench(&args).unwrap()));
    }
}
