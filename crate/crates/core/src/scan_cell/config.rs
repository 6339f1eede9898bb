use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_WEEK: f64 = 7.0 * 24.0 * SECONDS_PER_HOUR;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("scan_cell config: {field} {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("scan_cell config: mixed print sizes in one stack ({0:?} vs {1:?}); stack prints of one size only")]
    MixedPrintSizes([f64; 2], [f64; 2]),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Robot time spent servicing one scanner: unload the scanned print, move
/// the separating plate and load the next print.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HandlingTime {
    Fixed { mean_seconds: f64 },
    /// Uniform on `[mean - half_width, mean + half_width]`.
    Uniform { mean_seconds: f64, half_width_seconds: f64 },
    /// Log-normal with the given mean and log-scale sigma.
    Lognormal { mean_seconds: f64, sigma: f64 },
}

impl HandlingTime {
    pub fn mean_seconds(&self) -> f64 {
        match *self {
            HandlingTime::Fixed { mean_seconds }
            | HandlingTime::Uniform { mean_seconds, .. }
            | HandlingTime::Lognormal { mean_seconds, .. } => mean_seconds,
        }
    }
}

impl Default for HandlingTime {
    /// 66.7 s makes the robot-bound steady state 3600 / 66.7 ≈ 54 scans/hour.
    fn default() -> Self {
        HandlingTime::Fixed { mean_seconds: 66.7 }
    }
}

/// How one handling cycle divides between its three legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandlingSplit {
    pub unload: f64,
    pub plate: f64,
    pub load: f64,
}

impl Default for HandlingSplit {
    fn default() -> Self {
        Self {
            unload: 0.3,
            plate: 0.3,
            load: 0.4,
        }
    }
}

/// A worker-present interval, in seconds from Monday 00:00.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttendanceWindow {
    pub start_seconds: f64,
    pub end_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attendance {
    pub windows: Vec<AttendanceWindow>,
}

impl Attendance {
    /// Monday to Friday, 09:00 to 16:00 (35 hours).
    pub fn office_hours() -> Self {
        let windows = (0..5)
            .map(|day| {
                let base = day as f64 * 24.0 * SECONDS_PER_HOUR;
                AttendanceWindow {
                    start_seconds: base + 9.0 * SECONDS_PER_HOUR,
                    end_seconds: base + 16.0 * SECONDS_PER_HOUR,
                }
            })
            .collect();
        Self { windows }
    }

    pub fn always() -> Self {
        Self {
            windows: vec![AttendanceWindow {
                start_seconds: 0.0,
                end_seconds: SECONDS_PER_WEEK,
            }],
        }
    }

    pub fn never() -> Self {
        Self { windows: Vec::new() }
    }

    /// Earliest instant at or after `t` (seconds since start) when a
    /// worker is present; `None` if the schedule is empty.
    pub fn next_presence(&self, t: f64) -> Option<f64> {
        if self.windows.is_empty() {
            return None;
        }
        let week_start = (t / SECONDS_PER_WEEK).floor() * SECONDS_PER_WEEK;
        let offset = t - week_start;
        if self
            .windows
            .iter()
            .any(|w| w.start_seconds <= offset && offset < w.end_seconds)
        {
            return Some(t);
        }
        let later_this_week = self
            .windows
            .iter()
            .map(|w| w.start_seconds)
            .filter(|&s| s > offset)
            .min_by(f64::total_cmp);
        match later_this_week {
            Some(s) => Some(week_start + s),
            None => {
                let first = self
                    .windows
                    .iter()
                    .map(|w| w.start_seconds)
                    .min_by(f64::total_cmp)?;
                Some(week_start + SECONDS_PER_WEEK + first)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for w in &self.windows {
            let ok = w.start_seconds.is_finite()
                && w.end_seconds.is_finite()
                && 0.0 <= w.start_seconds
                && w.start_seconds < w.end_seconds
                && w.end_seconds <= SECONDS_PER_WEEK;
            if !ok {
                return Err(invalid(
                    "attendance",
                    format!(
                        "window [{}, {}) must satisfy 0 <= start < end <= one week",
                        w.start_seconds, w.end_seconds
                    ),
                ));
            }
        }
        Ok(())
    }
}

impl Default for Attendance {
    fn default() -> Self {
        Self::office_hours()
    }
}

/// Share of one full-time position, as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FteShare {
    pub numerator: u32,
    pub denominator: u32,
}

impl FteShare {
    pub const FULL_TIME: FteShare = FteShare {
        numerator: 1,
        denominator: 1,
    };

    /// `rate / share`, evaluated as `rate * denominator / numerator`.
    pub fn per_full_time(self, rate: f64) -> f64 {
        rate * self.denominator as f64 / self.numerator as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Staffing {
    pub scanners_per_worker: u32,
    pub worker_fte: FteShare,
}

impl Default for Staffing {
    /// One worker on 2/7 of a post looks after four robots and eight scanners.
    fn default() -> Self {
        Self {
            scanners_per_worker: 8,
            worker_fte: FteShare {
                numerator: 2,
                denominator: 7,
            },
        }
    }
}

/// Parameters of one robot and the scanners it tends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    pub scanners_per_robot: usize,
    pub scan_seconds: f64,
    pub handling_time: HandlingTime,
    pub handling_split: HandlingSplit,
    /// Prints per input hopper; `None` never runs dry.
    pub hopper_capacity: Option<u32>,
    /// Total lift attempts before the robot stops and reports an error.
    pub lift_retry_limit: u32,
    pub lift_failure_prob: f64,
    /// Extra time each failed lift attempt costs.
    pub retry_seconds: f64,
    pub attendance: Attendance,
    /// Time for a present worker to clear a stalled cell.
    pub recovery_seconds: f64,
    /// Time for a present worker to refill an empty hopper; `None` never refills.
    pub reload_seconds: Option<f64>,
    /// Handling time is divided by `ramp_multiplier^week`.
    pub ramp_multiplier: f64,
    /// Sizes (inches) of the prints stacked in the hoppers.
    pub print_sizes_in: Vec<[f64; 2]>,
    pub staffing: Staffing,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            scanners_per_robot: 2,
            scan_seconds: 45.0,
            handling_time: HandlingTime::default(),
            handling_split: HandlingSplit::default(),
            hopper_capacity: Some(300),
            lift_retry_limit: 3,
            lift_failure_prob: 0.0,
            retry_seconds: 4.0,
            attendance: Attendance::default(),
            recovery_seconds: 300.0,
            reload_seconds: Some(600.0),
            ramp_multiplier: 1.0,
            print_sizes_in: Vec::new(),
            staffing: Staffing::default(),
        }
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn check_non_negative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

impl CellConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scanners_per_robot == 0 {
            return Err(invalid("scanners_per_robot", "must be at least 1"));
        }
        check_positive("scan_seconds", self.scan_seconds)?;
        match self.handling_time {
            HandlingTime::Fixed { mean_seconds } => {
                check_positive("handling_time.mean_seconds", mean_seconds)?
            }
            HandlingTime::Uniform {
                mean_seconds,
                half_width_seconds,
            } => {
                check_positive("handling_time.mean_seconds", mean_seconds)?;
                check_non_negative("handling_time.half_width_seconds", half_width_seconds)?;
                if half_width_seconds >= mean_seconds {
                    return Err(invalid(
                        "handling_time.half_width_seconds",
                        "must be below the mean",
                    ));
                }
            }
            HandlingTime::Lognormal {
                mean_seconds,
                sigma,
            } => {
                check_positive("handling_time.mean_seconds", mean_seconds)?;
                check_non_negative("handling_time.sigma", sigma)?;
            }
        }
        let split = self.handling_split;
        for (field, v) in [
            ("handling_split.unload", split.unload),
            ("handling_split.plate", split.plate),
            ("handling_split.load", split.load),
        ] {
            check_non_negative(field, v)?;
        }
        if ((split.unload + split.plate + split.load) - 1.0).abs() > 1e-9 {
            return Err(invalid("handling_split", "fractions must sum to 1"));
        }
        if self.hopper_capacity == Some(0) {
            return Err(invalid("hopper_capacity", "must be at least 1"));
        }
        if self.lift_retry_limit == 0 {
            return Err(invalid("lift_retry_limit", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lift_failure_prob) {
            return Err(invalid(
                "lift_failure_prob",
                format!("must be in [0, 1], got {}", self.lift_failure_prob),
            ));
        }
        check_non_negative("retry_seconds", self.retry_seconds)?;
        check_non_negative("recovery_seconds", self.recovery_seconds)?;
        if let Some(r) = self.reload_seconds {
            check_non_negative("reload_seconds", r)?;
        }
        check_positive("ramp_multiplier", self.ramp_multiplier)?;
        self.attendance.validate()?;
        if let Some(first) = self.print_sizes_in.first() {
            if let Some(other) = self.print_sizes_in.iter().find(|s| *s != first) {
                return Err(ConfigError::MixedPrintSizes(*first, *other));
            }
        }
        if self.staffing.scanners_per_worker == 0
            || self.staffing.worker_fte.numerator == 0
            || self.staffing.worker_fte.denominator == 0
        {
            return Err(invalid("staffing", "counts and FTE share must be positive"));
        }
        Ok(())
    }
}
