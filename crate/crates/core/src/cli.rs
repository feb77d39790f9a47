//! `spectral` command-line front end.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{read_image_auto, read_mask, write_image, write_mask, ImageFormat};
use crate::loft::IntensityHistogram;
use crate::metrics::MetricsReport;
use crate::morphology::Shape;
use crate::params::{Mode, ParamOverrides, PipelineParams, RunConfig};
use crate::phantom::{write_json, write_phantom_set, PhantomSpec};
use crate::pipeline::{run, RunOutcome};
use crate::preprocess::preprocess_pipeline;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NO_LOFT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "spectral", version, about = "Spectrum-loft segmentation of 16-bit breast MR slices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment tissue or lesions and write mask, threshold and histogram.
    Segment(SegmentArgs),
    /// Run only the preprocessing chain.
    Preprocess(PreprocessArgs),
    /// Compare a predicted mask with ground truth.
    Metrics(MetricsArgs),
    /// Generate a synthetic phantom set from a JSON spec.
    Phantom(PhantomArgs),
    /// Serve the HTTP API and the web console.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PrepFlags {
    #[arg(long, value_name = "N")]
    pub binarize_threshold: Option<u16>,
    #[arg(long, value_name = "R")]
    pub se_radius: Option<usize>,
    #[arg(long, value_name = "SHAPE", value_parser = parse_shape)]
    pub se_shape: Option<Shape>,
    #[arg(long, value_name = "L")]
    pub lambda: Option<f64>,
    #[arg(long, value_name = "N")]
    pub iterations: Option<usize>,
    /// Fixed diffusion edge threshold (automatic when omitted).
    #[arg(long, value_name = "K")]
    pub k: Option<f64>,
    #[arg(long, value_name = "SIGMA")]
    pub gain_sigma: Option<f64>,
    #[arg(long, value_name = "SIGMA")]
    pub final_sigma: Option<f64>,
}

fn parse_shape(s: &str) -> std::result::Result<Shape, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long = "in", value_name = "IMAGE")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Start from a previous run's params.json; other flags override it.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub lo: Option<u16>,
    #[arg(long)]
    pub hi: Option<u16>,
    #[arg(long, value_name = "BINS")]
    pub smooth_window: Option<usize>,
    #[arg(long, value_name = "PIXELS")]
    pub min_area: Option<usize>,
    #[arg(long, value_name = "MASK")]
    pub truth: Option<PathBuf>,
    /// Input already preprocessed; body = non-zero pixels.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub pre_done: Option<bool>,
    #[command(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in", value_name = "IMAGE")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long, value_name = "MASK")]
    pub pred: PathBuf,
    #[arg(long, value_name = "MASK")]
    pub truth: PathBuf,
    #[arg(long, value_name = "FILE", default_value = "metrics.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the seed in the spec file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SPECTRAL_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Directory with the built web console, served at `/`.
    #[arg(long, env = "SPECTRAL_STATIC_DIR", default_value = "webui/dist")]
    pub static_dir: PathBuf,
    /// Number of uploaded images kept in memory.
    #[arg(long, default_value_t = crate::service::DEFAULT_CAPACITY)]
    pub capacity: usize,
}

impl PrepFlags {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            binarize_threshold: self.binarize_threshold,
            se_radius: self.se_radius,
            se_shape: self.se_shape,
            lambda: self.lambda,
            iterations: self.iterations,
            k: self.k,
            gain_sigma: self.gain_sigma,
            final_sigma: self.final_sigma,
            ..Default::default()
        }
    }
}

impl SegmentArgs {
    /// Effective run configuration: params file, then flags.
    pub fn config(&self) -> Result<RunConfig> {
        let base = self.params.as_deref().map(RunConfig::read).transpose()?;
        let mode = match (&base, self.mode) {
            (Some(b), Some(m)) if b.params.mode != m => {
                return Err(Error::InvalidParams(format!(
                    "--mode {m} conflicts with mode {} in the params file",
                    b.params.mode
                )))
            }
            (_, Some(m)) => m,
            (Some(b), None) => b.params.mode,
            (None, None) => Mode::Tissue,
        };
        let params = base.as_ref().map(|b| b.params).unwrap_or_else(|| PipelineParams::defaults(mode));
        let overrides = ParamOverrides {
            lo: self.lo,
            hi: self.hi,
            smooth_window: self.smooth_window,
            min_area: self.min_area,
            pre_done: self.pre_done,
            ..self.prep.overrides()
        };
        let params = params.with_overrides(&overrides)?;
        let input = self
            .input
            .clone()
            .or_else(|| base.as_ref().map(|b| b.input.clone()))
            .ok_or_else(|| Error::InvalidParams("--in is required".into()))?;
        let truth = self.truth.clone().or_else(|| base.and_then(|b| b.truth));
        Ok(RunConfig { input, truth, params })
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_histogram(dir: &Path, hist: &IntensityHistogram) -> Result<()> {
    write_text(&dir.join("histogram.csv"), &hist.to_csv())
}

/// Writes every artifact of a successful run into `dir`.
pub fn write_run_artifacts(dir: &Path, cfg: &RunConfig, outcome: &RunOutcome) -> Result<Option<MetricsReport>> {
    create_dir(dir)?;
    write_mask(&outcome.mask, dir.join("mask.pgm"), ImageFormat::Pgm16)?;
    write_json(&dir.join("threshold.json"), &outcome.threshold_report())?;
    write_histogram(dir, &outcome.histogram)?;
    if let Some(report) = &outcome.lesions {
        write_json(&dir.join("lesions.json"), report)?;
    }
    let cfg = RunConfig { params: outcome.params, ..cfg.clone() };
    write_json(&dir.join("params.json"), &cfg)?;
    let metrics = match &cfg.truth {
        Some(truth) => {
            let report = MetricsReport::compare(&outcome.mask, &read_mask(truth)?)?;
            write_json(&dir.join("metrics.json"), &report)?;
            Some(report)
        }
        None => None,
    };
    Ok(metrics)
}

fn cmd_segment(args: &SegmentArgs) -> Result<u8> {
    let cfg = args.config()?;
    let image = read_image_auto(&cfg.input)?;
    match run(&image, &cfg.params) {
        Ok(outcome) => {
            let metrics = write_run_artifacts(&args.out, &cfg, &outcome)?;
            println!("threshold: {}", outcome.threshold.threshold);
            if let Some(report) = &outcome.lesions {
                println!("components: {}", report.components.len());
            }
            if let Some(m) = metrics {
                println!("dsc: {}", m.dsc);
                println!("ji: {}", m.ji);
            }
            println!("segment_ms: {:.3}", outcome.timing.segment_ms);
            println!("total_ms: {:.3}", outcome.timing.total_ms);
            Ok(EXIT_OK)
        }
        Err(Error::NoLoft { lo, hi, histogram }) => {
            create_dir(&args.out)?;
            if let Some(hist) = histogram {
                write_histogram(&args.out, &hist)?;
            }
            let cfg = RunConfig { params: cfg.params.resolved(image.width()), ..cfg };
            write_json(&args.out.join("params.json"), &cfg)?;
            eprintln!("error: no loft found in [{lo},{hi}]");
            Ok(EXIT_NO_LOFT)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessReport {
    pub k: Option<f64>,
    pub speckle_before: Option<f64>,
    pub speckle_after: Option<f64>,
    pub body_pixels: usize,
}

fn cmd_preprocess(args: &PreprocessArgs) -> Result<u8> {
    let image = read_image_auto(&args.input)?;
    let params = PipelineParams::defaults(Mode::Tissue).with_overrides(&args.prep.overrides())?;
    let pre = preprocess_pipeline(&image, &params.preprocess(image.width())?)?;
    create_dir(&args.out)?;
    write_image(&pre.image, args.out.join("preprocessed.pgm"), ImageFormat::Pgm16)?;
    write_mask(&pre.body, args.out.join("body.pgm"), ImageFormat::Pgm16)?;
    let report = PreprocessReport {
        k: pre.k,
        speckle_before: pre.speckle_before,
        speckle_after: pre.speckle_after,
        body_pixels: pre.body.count(),
    };
    write_json(&args.out.join("preprocess.json"), &report)?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(EXIT_OK)
}

fn cmd_metrics(args: &MetricsArgs) -> Result<u8> {
    let report = MetricsReport::compare(&read_mask(&args.pred)?, &read_mask(&args.truth)?)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(&args.out, &report)?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(EXIT_OK)
}

fn cmd_phantom(args: &PhantomArgs) -> Result<u8> {
    let mut spec = PhantomSpec::read(&args.spec)?;
    if args.seed.is_some() {
        spec.seed = args.seed;
    }
    let manifest = write_phantom_set(&spec, &args.out)?;
    println!("wrote phantom set to {} (seed {})", args.out.display(), manifest.seed);
    Ok(EXIT_OK)
}

fn cmd_serve(args: &ServeArgs) -> Result<u8> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("<tokio runtime>", e))?;
    runtime.block_on(crate::service::serve(args.listen, Some(args.static_dir.clone()), args.capacity))?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Segment(a) => cmd_segment(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Phantom(a) => cmd_phantom(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// Parses `args` and runs the command, mapping failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
