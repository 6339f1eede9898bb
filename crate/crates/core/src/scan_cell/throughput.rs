use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{FteShare, Staffing};
use super::sim::ScannerPhase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThroughputError {
    #[error("scan_cell throughput: {0} rate must be positive")]
    NonPositiveRate(&'static str),
    #[error("scan_cell throughput: {field} must be positive, got {value}")]
    Invalid { field: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportSource {
    Simulation,
    HumanOperated,
    Robotic,
}

/// Rates for one cell or fleet. Simulated reports fill the utilization and
/// stall fields; closed-form reports leave them empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub source: ReportSource,
    pub scanners: u32,
    pub horizon_hours: f64,
    pub scans_completed: u64,
    pub per_scanner_completions: Vec<u64>,
    pub scans_per_hour: f64,
    pub scans_per_scanner_hour: f64,
    pub scans_per_scanner_week: f64,
    pub scans_per_worker_week: f64,
    pub scans_per_day: f64,
    pub scans_per_week: f64,
    pub robot_utilization: Option<f64>,
    pub scanner_utilization: Vec<f64>,
    pub stall_seconds: f64,
    pub lift_failures: u64,
    pub final_phases: Vec<ScannerPhase>,
}

/// A worker alternates between two scanners, handling one print while the
/// other scans. Throughput per scanner is `3600 / (scan + residual)`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanParams {
    pub scan_seconds: f64,
    /// Handling time not hidden behind the other scanner's scan.
    pub residual_seconds: f64,
    pub max_per_scanner_hour: f64,
    pub scanners: u32,
    pub hours_per_week: f64,
    pub days_per_week: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self {
            scan_seconds: 45.0,
            residual_seconds: 27.0,
            max_per_scanner_hour: 50.0,
            scanners: 2,
            hours_per_week: 35.0,
            days_per_week: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoboticParams {
    pub per_scanner_hour: f64,
    pub scanners: u32,
    pub hours_per_day: f64,
    pub days_per_week: f64,
    pub staffing: Staffing,
}

impl Default for RoboticParams {
    fn default() -> Self {
        Self {
            per_scanner_hour: 27.0,
            scanners: 2,
            hours_per_day: 24.0,
            days_per_week: 7.0,
            staffing: Staffing::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThroughputMode {
    HumanOperated(HumanParams),
    Robotic(RoboticParams),
}

fn positive(field: &'static str, value: f64) -> Result<(), ThroughputError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ThroughputError::Invalid { field, value })
    }
}

fn closed_form(
    source: ReportSource,
    scanners: u32,
    per_scanner_hour: f64,
    hours_per_day: f64,
    hours_per_week: f64,
    scanners_per_worker: f64,
    worker_fte: FteShare,
) -> ThroughputReport {
    let per_hour = per_scanner_hour * scanners as f64;
    let per_scanner_week = per_scanner_hour * hours_per_week;
    ThroughputReport {
        source,
        scanners,
        horizon_hours: hours_per_week,
        scans_completed: (per_hour * hours_per_week).round() as u64,
        per_scanner_completions: vec![per_scanner_week.round() as u64; scanners as usize],
        scans_per_hour: per_hour,
        scans_per_scanner_hour: per_scanner_hour,
        scans_per_scanner_week: per_scanner_week,
        scans_per_worker_week: worker_fte.per_full_time(per_scanner_week * scanners_per_worker),
        scans_per_day: per_hour * hours_per_day,
        scans_per_week: per_hour * hours_per_week,
        robot_utilization: None,
        scanner_utilization: Vec::new(),
        stall_seconds: 0.0,
        lift_failures: 0,
        final_phases: Vec::new(),
    }
}

/// Theoretical rates without simulation.
pub fn theoretical_throughput(mode: &ThroughputMode) -> Result<ThroughputReport, ThroughputError> {
    match *mode {
        ThroughputMode::HumanOperated(p) => {
            positive("scan_seconds", p.scan_seconds)?;
            positive("max_per_scanner_hour", p.max_per_scanner_hour)?;
            positive("hours_per_week", p.hours_per_week)?;
            positive("days_per_week", p.days_per_week)?;
            positive("scanners", p.scanners as f64)?;
            if !(p.residual_seconds.is_finite() && p.residual_seconds >= 0.0) {
                return Err(ThroughputError::Invalid {
                    field: "residual_seconds",
                    value: p.residual_seconds,
                });
            }
            let per_scanner_hour =
                (3600.0 / (p.scan_seconds + p.residual_seconds)).min(p.max_per_scanner_hour);
            // One full-time worker operates all the scanners in the pair.
            Ok(closed_form(
                ReportSource::HumanOperated,
                p.scanners,
                per_scanner_hour,
                p.hours_per_week / p.days_per_week,
                p.hours_per_week,
                p.scanners as f64,
                FteShare::FULL_TIME,
            ))
        }
        ThroughputMode::Robotic(p) => {
            positive("per_scanner_hour", p.per_scanner_hour)?;
            positive("hours_per_day", p.hours_per_day)?;
            positive("days_per_week", p.days_per_week)?;
            positive("scanners", p.scanners as f64)?;
            positive("scanners_per_worker", p.staffing.scanners_per_worker as f64)?;
            positive("worker_fte", p.staffing.worker_fte.numerator as f64)?;
            positive("worker_fte", p.staffing.worker_fte.denominator as f64)?;
            Ok(closed_form(
                ReportSource::Robotic,
                p.scanners,
                p.per_scanner_hour,
                p.hours_per_day,
                p.hours_per_day * p.days_per_week,
                p.staffing.scanners_per_worker as f64,
                p.staffing.worker_fte,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductivityRatio {
    pub per_scanner: f64,
    pub per_worker: f64,
}

pub fn productivity_ratio(
    robotic: &ThroughputReport,
    manual: &ThroughputReport,
) -> Result<ProductivityRatio, ThroughputError> {
    for (name, report) in [("robotic", robotic), ("manual", manual)] {
        if !(report.scans_per_scanner_week > 0.0 && report.scans_per_worker_week > 0.0) {
            return Err(ThroughputError::NonPositiveRate(name));
        }
    }
    Ok(ProductivityRatio {
        per_scanner: robotic.scans_per_scanner_week / manual.scans_per_scanner_week,
        per_worker: robotic.scans_per_worker_week / manual.scans_per_worker_week,
    })
}

/// One day of production figures; `aggregated` marks days whose count
/// includes scans carried over from earlier days (e.g. Mondays).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyCount {
    pub scans: f64,
    #[serde(default)]
    pub aggregated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub daily_fraction: f64,
    pub weekly_fraction: f64,
    pub daily_at_or_above_theoretical: bool,
    pub notes: Vec<String>,
}

pub const AGGREGATION_NOTE: &str =
    "daily count at or above the theoretical maximum; counts reported on Mondays may include \
     weekend scans and are excluded where flagged";

pub fn fraction_of_theoretical(observed: f64, theoretical: f64) -> Result<f64, ThroughputError> {
    positive("observed", observed)?;
    positive("theoretical", theoretical)?;
    Ok(observed / theoretical)
}

/// Highest daily count among days not flagged as aggregated.
pub fn max_daily_excluding_aggregated(days: &[DailyCount]) -> Option<f64> {
    days.iter()
        .filter(|d| !d.aggregated)
        .map(|d| d.scans)
        .fold(None, |best, s| Some(best.map_or(s, |b: f64| b.max(s))))
}

pub fn observed_vs_theoretical(
    observed_daily: f64,
    observed_weekly: f64,
    fleet: &RoboticParams,
) -> Result<Utilization, ThroughputError> {
    let theory = theoretical_throughput(&ThroughputMode::Robotic(*fleet))?;
    let daily_fraction = fraction_of_theoretical(observed_daily, theory.scans_per_day)?;
    let weekly_fraction = fraction_of_theoretical(observed_weekly, theory.scans_per_week)?;
    let at_or_above = observed_daily >= theory.scans_per_day;
    let notes = if at_or_above {
        vec![AGGREGATION_NOTE.to_string()]
    } else {
        Vec::new()
    };
    Ok(Utilization {
        daily_fraction,
        weekly_fraction,
        daily_at_or_above_theoretical: at_or_above,
        notes,
    })
}
