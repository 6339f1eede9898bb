//! Command-line front end. [`dispatch`] parses arguments, runs one
//! subcommand and returns the process exit code.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::calibration_qc::{self as qc, CalibrationGeometry, Distortions, GrayRaster, ScanLayout};
use crate::economics::{self, CostParams, Scenario};
use crate::photogrammetry::{
    self as pg, ByteConvention, FlyingAltitude, FocalLength, Length, LinePairResolution, ScaleRatio,
};
use crate::preservation::{self, IssueCorrelation, IssueRates, PrintCondition, SamplerOptions};
use crate::reproduce;
use crate::scan_cell::{
    self, CellConfig, HumanParams, RoboticParams, ThroughputMode, ThroughputReport,
};
use crate::sortie_id::{self, ParseOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration input; exit 2.
    Config(String),
    /// A module rejected the request or analysis failed; exit 1.
    Domain(String),
    /// Output could not be written; exit 1.
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Domain(m) | CliError::Io(m) => m,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "aerialscan", version, about = "Aerial photograph digitization toolkit")]
pub struct Cli {
    /// Print progress notes to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one robot cell.
    Simulate(SimulateArgs),
    /// Closed-form throughput for a human-operated or robotic setup.
    Throughput(ThroughputArgs),
    /// Productivity of robotic over manual scanning.
    Ratio(RatioArgs),
    /// Observed production against the theoretical maximum.
    Observed(ObservedArgs),
    /// Cost model queries.
    #[command(subcommand)]
    Cost(CostCommand),
    /// Calibration targets and scan post-processing.
    #[command(subcommand)]
    Qc(QcCommand),
    /// Parse a sortie identifier.
    ParseId(ParseIdArgs),
    /// Preservation triage.
    #[command(subcommand)]
    Preserve(PreserveCommand),
    /// Scale, resolution and storage arithmetic.
    #[command(subcommand)]
    Photogrammetry(PhotogrammetryCommand),
    /// Recompute the published figures and print a pass/fail table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Cell configuration (JSON); defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Simulated horizon in hours.
    #[arg(long)]
    pub hours: f64,
    /// Write the event trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Human,
    Robotic,
}

#[derive(Debug, Args)]
pub struct ThroughputArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Mode parameters (JSON); defaults apply to missing fields.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Override the number of scanners.
    #[arg(long)]
    pub scanners: Option<u32>,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    /// Robotic throughput report (JSON); theoretical default when absent.
    #[arg(long)]
    pub robotic: Option<PathBuf>,
    /// Manual throughput report (JSON); theoretical default when absent.
    #[arg(long)]
    pub manual: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct ObservedArgs {
    #[arg(long)]
    pub daily: f64,
    #[arg(long)]
    pub weekly: f64,
    /// Scanners in the fleet.
    #[arg(long, default_value_t = 14)]
    pub scanners: u32,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Cost parameters of pipeline A: a JSON file, or @robotic / @manual.
    #[arg(long)]
    pub a: String,
    /// Cost parameters of pipeline B.
    #[arg(long)]
    pub b: String,
}

#[derive(Debug, Subcommand)]
pub enum CostCommand {
    /// Per-scan cost of both pipelines over a geometric grid, as CSV.
    Curve {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 1_000)]
        from: u64,
        #[arg(long, default_value_t = 10_000_000)]
        to: u64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Scans after which A is no more expensive in total than B.
    Breakeven {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Scans after which A costs at most half of B per scan.
    Halving {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Weeks of production needed for a volume.
    Weeks {
        #[arg(long)]
        scans: u64,
        #[arg(long)]
        capacity: u64,
    },
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub scale_error: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub blur: f64,
    /// Required when --noise is non-zero.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum QcCommand {
    /// Render a calibration strip, or a whole scan with --scan.
    Render {
        #[arg(long)]
        ppi: u32,
        #[arg(long)]
        out: PathBuf,
        /// Geometry (JSON); the standard strip when absent.
        #[arg(long)]
        geometry: Option<PathBuf>,
        /// Render a scan area with a print instead of the bare strip.
        #[arg(long)]
        scan: bool,
        /// Scan layout (JSON), used with --scan.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[command(flatten)]
        distortions: DistortionArgs,
    },
    /// Analyze one graymap (JSON report) or a directory of them (CSV).
    Analyze {
        input: PathBuf,
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        border_mm: f64,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Crop a scan to the print plus a dark border.
    Crop {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        border_mm: f64,
    },
}

#[derive(Debug, Args)]
pub struct ParseIdArgs {
    pub text: String,
    /// Accept a locally created U.S. Army Air Force label.
    #[arg(long)]
    pub usaaf: bool,
}

#[derive(Debug, Subcommand)]
pub enum PreserveCommand {
    /// Remediation plan for one condition (JSON in, JSON out).
    Plan {
        #[arg(long)]
        condition: PathBuf,
        #[command(flatten)]
        output: OutputArg,
    },
    /// Sample box conditions; CSV of boxes plus a JSON summary.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Issue rates (JSON); the survey percentages when absent.
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Sampler options (JSON).
        #[arg(long)]
        options: Option<PathBuf>,
        /// Exchangeable correlation between issues, overriding the options file.
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        /// CSV of sampled boxes.
        #[arg(long)]
        boxes: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum PhotogrammetryCommand {
    /// Print scale and ground resolved distance.
    Ground {
        #[arg(long)]
        lp_per_mm: f64,
        /// Scale denominator, e.g. 42579 for 1:42,579.
        #[arg(long, conflicts_with_all = ["focal_mm", "altitude_m"])]
        scale: Option<f64>,
        #[arg(long, requires = "altitude_m")]
        focal_mm: Option<f64>,
        #[arg(long, requires = "focal_mm")]
        altitude_m: Option<f64>,
    },
    /// Optimal scanning pixel band, and the verdict for a scan resolution.
    Pixels {
        #[arg(long)]
        lp_per_mm: f64,
        #[arg(long)]
        ppi: Option<f64>,
    },
    /// Storage needed for an archive.
    Storage {
        #[arg(long)]
        images: u64,
        #[arg(long)]
        bytes_per_image: u64,
        /// Report binary terabytes (2^40 bytes).
        #[arg(long)]
        binary: bool,
    },
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub seed: u64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Output goes to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_json_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_bytes(p, text.as_bytes()),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Pretty JSON with fields in declaration order and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn emit_json<T: Serialize + ?Sized>(out: &mut dyn Write, path: Option<&Path>, value: &T) -> Result<()> {
    emit(out, path, &to_json(value))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(domain)?;
    }
    let bytes = w.into_inner().map_err(|e| domain(e.error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn note(err: &mut dyn Write, verbose: u8, msg: impl std::fmt::Display) {
    if verbose > 0 {
        let _ = writeln!(err, "{msg}");
    }
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let v = cli.verbose;
    match cli.command {
        Command::Simulate(a) => simulate(a, v, out, err),
        Command::Throughput(a) => throughput(a, out),
        Command::Ratio(a) => ratio(a, out),
        Command::Observed(a) => observed(a, out),
        Command::Cost(c) => cost(c, out),
        Command::Qc(c) => qc_command(c, v, out, err),
        Command::ParseId(a) => {
            let options = ParseOptions {
                us_army_air_force: a.usaaf,
            };
            let id = sortie_id::parse_with(&a.text, options).map_err(domain)?;
            emit_json(out, None, &id)?;
            Ok(EXIT_OK)
        }
        Command::Preserve(c) => preserve(c, out),
        Command::Photogrammetry(c) => photogrammetry(c, out),
        Command::Reproduce(a) => {
            let checks = reproduce::run_all(a.seed);
            let table = format_checks(&checks);
            emit(out, None, &table)?;
            Ok(if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_DOMAIN
            })
        }
    }
}

pub fn format_checks(checks: &[reproduce::Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{status} {:>2} {:<26} {}\n", c.id, c.name, c.detail));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    s.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    s
}

fn simulate(a: SimulateArgs, v: u8, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config: CellConfig = read_json_or_default(a.config.as_deref())?;
    if !(a.hours.is_finite() && a.hours >= 0.0) {
        return Err(CliError::Config(format!("--hours must be non-negative, got {}", a.hours)));
    }
    let (trace, report) = scan_cell::simulate(&config, a.seed, a.hours).map_err(config_err)?;
    note(err, v, format!("{} events, {} scans", trace.len(), report.scans_completed));
    if let Some(path) = &a.trace {
        write_bytes(path, trace.to_csv_string().as_bytes())?;
    }
    emit_json(out, a.report.as_deref(), &report)?;
    Ok(EXIT_OK)
}

fn config_err(e: scan_cell::ConfigError) -> CliError {
    config(e)
}

fn throughput(a: ThroughputArgs, out: &mut dyn Write) -> Result<i32> {
    let mut mode = match a.mode {
        ModeArg::Human => ThroughputMode::HumanOperated(read_json_or_default::<HumanParams>(a.params.as_deref())?),
        ModeArg::Robotic => ThroughputMode::Robotic(read_json_or_default::<RoboticParams>(a.params.as_deref())?),
    };
    if let Some(n) = a.scanners {
        match &mut mode {
            ThroughputMode::HumanOperated(p) => p.scanners = n,
            ThroughputMode::Robotic(p) => p.scanners = n,
        }
    }
    let report = scan_cell::theoretical_throughput(&mode).map_err(config)?;
    emit_json(out, a.output.out.as_deref(), &report)?;
    Ok(EXIT_OK)
}

fn ratio(a: RatioArgs, out: &mut dyn Write) -> Result<i32> {
    let load = |path: Option<&Path>, mode: ThroughputMode| -> Result<ThroughputReport> {
        match path {
            Some(p) => read_json(p),
            None => scan_cell::theoretical_throughput(&mode).map_err(domain),
        }
    };
    let robotic = load(a.robotic.as_deref(), ThroughputMode::Robotic(RoboticParams::default()))?;
    let manual = load(a.manual.as_deref(), ThroughputMode::HumanOperated(HumanParams::default()))?;
    let r = scan_cell::productivity_ratio(&robotic, &manual).map_err(domain)?;
    emit_json(out, a.output.out.as_deref(), &r)?;
    Ok(EXIT_OK)
}

fn observed(a: ObservedArgs, out: &mut dyn Write) -> Result<i32> {
    let fleet = RoboticParams {
        scanners: a.scanners,
        ..Default::default()
    };
    let u = scan_cell::observed_vs_theoretical(a.daily, a.weekly, &fleet).map_err(domain)?;
    emit_json(out, a.output.out.as_deref(), &u)?;
    Ok(EXIT_OK)
}

fn cost_params(spec: &str) -> Result<CostParams> {
    let params = match spec {
        "@robotic" => economics::benchmark(Scenario::RoboticBenchmark),
        "@manual" => economics::benchmark(Scenario::ManualBenchmark),
        path => read_json(Path::new(path))?,
    };
    params.validate().map_err(config)?;
    Ok(params)
}

fn cost(c: CostCommand, out: &mut dyn Write) -> Result<i32> {
    match c {
        CostCommand::Curve {
            pair,
            from,
            to,
            points,
            output,
        } => {
            let (a, b) = (cost_params(&pair.a)?, cost_params(&pair.b)?);
            if from == 0 || from > to || points == 0 {
                return Err(CliError::Config("need 1 <= --from <= --to and --points >= 1".into()));
            }
            let grid = economics::geometric_grid(from, to, points);
            let curve = economics::cost_curve(&a, &b, &grid).map_err(domain)?;
            emit(out, output.out.as_deref(), &to_csv(&curve)?)?;
        }
        CostCommand::Breakeven { pair } => {
            let n = economics::break_even(&cost_params(&pair.a)?, &cost_params(&pair.b)?).map_err(domain)?;
            emit(out, None, &format!("{n}\n"))?;
        }
        CostCommand::Halving { pair } => {
            let n = economics::cost_halving_point(&cost_params(&pair.a)?, &cost_params(&pair.b)?)
                .map_err(domain)?;
            emit(out, None, &format!("{n}\n"))?;
        }
        CostCommand::Weeks { scans, capacity } => {
            let w = economics::weeks_to_volume(scans, capacity).map_err(domain)?;
            emit_json(out, None, &w)?;
        }
    }
    Ok(EXIT_OK)
}

fn distortions(d: &DistortionArgs) -> Result<Distortions> {
    if d.noise != 0.0 && d.seed.is_none() {
        return Err(CliError::Config("--noise needs an explicit --seed".into()));
    }
    Ok(Distortions {
        scale_error_fraction: d.scale_error,
        noise_sigma: d.noise,
        blur_radius_px: d.blur,
        seed: d.seed.unwrap_or(0),
    })
}

fn qc_command(c: QcCommand, v: u8, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match c {
        QcCommand::Render {
            ppi,
            out: path,
            geometry,
            scan,
            layout,
            distortions: d,
        } => {
            let geom: CalibrationGeometry = read_json_or_default(geometry.as_deref())?;
            let d = distortions(&d)?;
            let raster = if scan {
                let layout: ScanLayout = read_json_or_default(layout.as_deref())?;
                qc::render_scan(&layout, &geom, ppi, &d)
            } else {
                qc::render_target(&geom, ppi, &d)
            }
            .map_err(config)?;
            note(err, v, format!("{}x{} px at {} ppi", raster.width, raster.height, raster.ppi));
            raster.write_pgm(&path).map_err(|e| CliError::Io(e.to_string()))?;
        }
        QcCommand::Analyze {
            input,
            geometry,
            border_mm,
            output,
        } => {
            let geom: CalibrationGeometry = read_json_or_default(geometry.as_deref())?;
            geom.validate().map_err(config)?;
            if input.is_dir() {
                let rows = qc::analyze_dir(&input, &geom, border_mm).map_err(domain)?;
                note(err, v, format!("{} rasters", rows.len()));
                emit(out, output.out.as_deref(), &to_csv(&rows)?)?;
            } else {
                let raster = read_raster(&input)?;
                let report = qc::analyze(&raster, &geom, border_mm).map_err(domain)?;
                emit_json(out, output.out.as_deref(), &report)?;
            }
        }
        QcCommand::Crop {
            input,
            out: path,
            border_mm,
        } => {
            let raster = read_raster(&input)?;
            let b = qc::crop_box(&raster, border_mm).map_err(domain)?;
            let cropped = raster.crop(b).map_err(domain)?;
            cropped.write_pgm(&path).map_err(|e| CliError::Io(e.to_string()))?;
            emit_json(out, None, &b)?;
        }
    }
    Ok(EXIT_OK)
}

fn read_raster(path: &Path) -> Result<GrayRaster> {
    GrayRaster::read_pgm(path).map_err(config)
}

#[derive(Serialize)]
struct SampleSummary {
    boxes: usize,
    seed: u64,
    configured: IssueRates,
    sampled: IssueRates,
    independent_any_intervention: f64,
    observed_any_intervention: f64,
    note: &'static str,
}

const CO_OCCURRENCE_NOTE: &str = "issues co-occur in the same boxes; the product of independent \
     rates is a reference point, not a prediction of the observed share";

fn preserve(c: PreserveCommand, out: &mut dyn Write) -> Result<i32> {
    match c {
        PreserveCommand::Plan { condition, output } => {
            let condition: PrintCondition = read_json(&condition)?;
            let plan = preservation::plan_remediation(&condition);
            emit_json(out, output.out.as_deref(), &plan)?;
        }
        PreserveCommand::Sample {
            n,
            seed,
            rates,
            options,
            rho,
            boxes,
            output,
        } => {
            let rates: IssueRates = match rates {
                Some(p) => read_json(&p)?,
                None => IssueRates::default(),
            };
            let mut opts: SamplerOptions = read_json_or_default(options.as_deref())?;
            if let Some(rho) = rho {
                opts.correlation = Some(IssueCorrelation::exchangeable(rho));
            }
            let sampled_boxes = preservation::sample_boxes(n, seed, &rates, opts).map_err(config)?;
            let sampled = preservation::aggregate_rates(&sampled_boxes).map_err(domain)?;
            if let Some(path) = boxes {
                write_bytes(&path, to_csv(&sampled_boxes)?.as_bytes())?;
            }
            let summary = SampleSummary {
                boxes: n,
                seed,
                independent_any_intervention: rates.independent_any_intervention(),
                observed_any_intervention: rates.any_intervention,
                configured: rates,
                sampled,
                note: CO_OCCURRENCE_NOTE,
            };
            emit_json(out, output.out.as_deref(), &summary)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GroundReport {
    scale: String,
    scale_denominator: f64,
    smallest_feature_um: f64,
    ground_resolved_m: f64,
}

#[derive(Serialize)]
struct PixelReport {
    optimal_min_um: f64,
    optimal_max_um: f64,
    ppi: Option<f64>,
    pixel_pitch_um: Option<f64>,
    verdict: Option<pg::SamplingVerdict>,
}

#[derive(Serialize)]
struct StorageReport {
    bytes: u128,
    terabytes: f64,
    convention: ByteConvention,
}

fn photogrammetry(c: PhotogrammetryCommand, out: &mut dyn Write) -> Result<i32> {
    match c {
        PhotogrammetryCommand::Ground {
            lp_per_mm,
            scale,
            focal_mm,
            altitude_m,
        } => {
            let r = LinePairResolution::new(lp_per_mm).map_err(domain)?;
            let s = match (scale, focal_mm, altitude_m) {
                (Some(d), _, _) => ScaleRatio::new(d).map_err(domain)?,
                (None, Some(f), Some(h)) => pg::scale_from_focal_and_altitude(
                    FocalLength::new(Length::from_mm(f)).map_err(domain)?,
                    FlyingAltitude::new(Length::from_m(h)).map_err(domain)?,
                ),
                _ => return Err(CliError::Config("give --scale or both --focal-mm and --altitude-m".into())),
            };
            let report = GroundReport {
                scale: s.to_string(),
                scale_denominator: s.denominator(),
                smallest_feature_um: pg::smallest_resolvable_feature(r).um(),
                ground_resolved_m: pg::ground_resolved_distance(r, s).m(),
            };
            emit_json(out, None, &report)?;
        }
        PhotogrammetryCommand::Pixels { lp_per_mm, ppi } => {
            let r = LinePairResolution::new(lp_per_mm).map_err(domain)?;
            let band = pg::optimal_pixel_range(r);
            let (pitch, verdict) = match ppi {
                Some(p) => (
                    Some(pg::pixel_pitch_from_ppi(p).map_err(domain)?.um()),
                    Some(pg::sampling_adequacy(p, r).map_err(domain)?),
                ),
                None => (None, None),
            };
            let report = PixelReport {
                optimal_min_um: band.min.um(),
                optimal_max_um: band.max.um(),
                ppi,
                pixel_pitch_um: pitch,
                verdict,
            };
            emit_json(out, None, &report)?;
        }
        PhotogrammetryCommand::Storage {
            images,
            bytes_per_image,
            binary,
        } => {
            let convention = if binary {
                ByteConvention::Binary
            } else {
                ByteConvention::Decimal
            };
            let e = pg::storage_estimate(images, bytes_per_image, convention);
            let report = StorageReport {
                bytes: e.bytes,
                terabytes: e.terabytes(),
                convention,
            };
            emit_json(out, None, &report)?;
        }
    }
    Ok(EXIT_OK)
}

/// Entry point for the binary.
pub fn main_with_std() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = dispatch(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
