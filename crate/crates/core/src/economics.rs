//! Fixed/variable cost model for a digitization pipeline.
//!
//! Money is fixed-point [`Gbp`] (millionths of a pound) so that sub-penny
//! per-scan costs stay exact across millions of scans.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomicsError {
    #[error("economics: scan count must be at least 1")]
    ZeroScans,
    #[error("economics: weekly capacity must be positive")]
    ZeroCapacity,
    #[error("economics: {0}")]
    NoCrossing(String),
    #[error("economics: invalid cost parameters: {0}")]
    Invalid(String),
}

const MICROS_PER_GBP: i64 = 1_000_000;

/// An amount of money in micro-pounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gbp(i64);

impl Gbp {
    pub const ZERO: Gbp = Gbp(0);

    pub const fn from_micros(micros: i64) -> Self {
        Self(micros)
    }
    pub const fn from_pounds(pounds: i64) -> Self {
        Self(pounds * MICROS_PER_GBP)
    }
    /// Rounds to the nearest micro-pound.
    pub fn from_f64(pounds: f64) -> Self {
        Self((pounds * MICROS_PER_GBP as f64).round() as i64)
    }
    pub const fn micros(self) -> i64 {
        self.0
    }
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_GBP as f64
    }
}

impl std::ops::Add for Gbp {
    type Output = Gbp;
    fn add(self, rhs: Gbp) -> Gbp {
        Gbp(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Gbp {
    fn sum<I: Iterator<Item = Gbp>>(iter: I) -> Gbp {
        iter.fold(Gbp::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Gbp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} GBP", self.to_f64())
    }
}

impl Serialize for Gbp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Gbp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("amount must be finite"));
        }
        Ok(Gbp::from_f64(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedItem {
    pub label: String,
    pub unit_cost: Gbp,
    pub quantity: u32,
}

impl FixedItem {
    pub fn new(label: &str, unit_cost: Gbp, quantity: u32) -> Self {
        Self {
            label: label.to_string(),
            unit_cost,
            quantity,
        }
    }
    pub fn total(&self) -> Gbp {
        Gbp(self.unit_cost.0 * self.quantity as i64)
    }
}

/// Cost structure of one pipeline variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub name: String,
    #[serde(default)]
    pub fixed_items: Vec<FixedItem>,
    /// Overrides the itemized sum when present.
    #[serde(default)]
    pub fixed_total: Option<Gbp>,
    pub per_scan_variable: Gbp,
    #[serde(default)]
    pub weekly_capacity: Option<u64>,
}

impl CostParams {
    pub fn simple(name: &str, fixed: Gbp, per_scan: Gbp) -> Self {
        Self {
            name: name.to_string(),
            fixed_items: Vec::new(),
            fixed_total: Some(fixed),
            per_scan_variable: per_scan,
            weekly_capacity: None,
        }
    }

    pub fn itemized_total(&self) -> Gbp {
        self.fixed_items.iter().map(FixedItem::total).sum()
    }

    pub fn fixed(&self) -> Gbp {
        self.fixed_total.unwrap_or_else(|| self.itemized_total())
    }

    pub fn validate(&self) -> Result<(), EconomicsError> {
        if self.per_scan_variable < Gbp::ZERO {
            return Err(EconomicsError::Invalid(format!(
                "{}: per_scan_variable is negative",
                self.name
            )));
        }
        if let Some(item) = self.fixed_items.iter().find(|i| i.unit_cost < Gbp::ZERO) {
            return Err(EconomicsError::Invalid(format!(
                "{}: item {:?} has negative unit cost",
                self.name, item.label
            )));
        }
        if self.fixed() < Gbp::ZERO {
            return Err(EconomicsError::Invalid(format!("{}: fixed total is negative", self.name)));
        }
        Ok(())
    }

    /// Total spend after `n` scans, in micro-pounds.
    pub fn total_cost_micros(&self, n: u64) -> i128 {
        self.fixed().0 as i128 + self.per_scan_variable.0 as i128 * n as i128
    }

    pub fn total_cost(&self, n: u64) -> f64 {
        self.total_cost_micros(n) as f64 / MICROS_PER_GBP as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Four tables, four arms, eight automated scanners plus one manual scanner.
    RoboticBenchmark,
    /// One worker on two scanners.
    ManualBenchmark,
}

/// Headline fixed cost quoted for the robotic benchmark. It is 350 GBP above
/// the sum of the listed items; both figures are kept.
pub const ROBOTIC_HEADLINE_FIXED: Gbp = Gbp::from_pounds(512_150);
pub const ROBOTIC_PER_SCAN: Gbp = Gbp::from_micros(7_500);
pub const MANUAL_PER_SCAN: Gbp = Gbp::from_micros(220_000);

pub fn fixed_items(scenario: Scenario) -> Vec<FixedItem> {
    match scenario {
        Scenario::RoboticBenchmark => vec![
            FixedItem::new("engineered table", Gbp::from_pounds(80_000), 4),
            FixedItem::new("robotic arm", Gbp::from_pounds(36_000), 4),
            FixedItem::new("scanner", Gbp::from_pounds(5_000), 8),
            FixedItem::new("scanner-lid lifting automation", Gbp::from_pounds(350), 8),
            FixedItem::new("manual scanner", Gbp::from_pounds(5_000), 1),
        ],
        Scenario::ManualBenchmark => vec![FixedItem::new("scanner", Gbp::from_pounds(5_000), 2)],
    }
}

/// Sum of the scenario's listed capital items.
pub fn itemized_fixed_cost(scenario: Scenario) -> Gbp {
    fixed_items(scenario).iter().map(FixedItem::total).sum()
}

/// Headline fixed cost used for the benchmark comparison.
pub fn headline_fixed_cost(scenario: Scenario) -> Gbp {
    match scenario {
        Scenario::RoboticBenchmark => ROBOTIC_HEADLINE_FIXED,
        Scenario::ManualBenchmark => itemized_fixed_cost(scenario),
    }
}

/// Benchmark parameters with the headline fixed cost and the quoted per-scan
/// costs. Weekly capacity: 8 scanners × 4536, or one worker's 3500.
pub fn benchmark(scenario: Scenario) -> CostParams {
    let (name, per_scan, capacity) = match scenario {
        Scenario::RoboticBenchmark => ("robotic", ROBOTIC_PER_SCAN, 8 * 4536),
        Scenario::ManualBenchmark => ("manual", MANUAL_PER_SCAN, 3500),
    };
    CostParams {
        name: name.to_string(),
        fixed_items: fixed_items(scenario),
        fixed_total: Some(headline_fixed_cost(scenario)),
        per_scan_variable: per_scan,
        weekly_capacity: Some(capacity),
    }
}

pub fn cost_per_scan(p: &CostParams, n: u64) -> Result<f64, EconomicsError> {
    if n == 0 {
        return Err(EconomicsError::ZeroScans);
    }
    Ok(p.total_cost_micros(n) as f64 / n as f64 / MICROS_PER_GBP as f64)
}

fn ceil_div(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    if num <= 0 {
        -((-num) / den)
    } else {
        (num + den - 1) / den
    }
}

/// Smallest `n ≥ 1` with `ka·total(a, n) ≤ kb·total(b, n)`.
fn first_crossing(
    a: &CostParams,
    b: &CostParams,
    ka: i128,
    kb: i128,
) -> Result<Option<u64>, EconomicsError> {
    a.validate()?;
    b.validate()?;
    let (fa, va) = (ka * a.fixed().0 as i128, ka * a.per_scan_variable.0 as i128);
    let (fb, vb) = (kb * b.fixed().0 as i128, kb * b.per_scan_variable.0 as i128);
    if fa + va <= fb + vb {
        return Ok(Some(1));
    }
    if va >= vb {
        return Ok(None);
    }
    let n = ceil_div(fa - fb, vb - va).max(1);
    Ok(Some(u64::try_from(n).map_err(|_| {
        EconomicsError::NoCrossing("crossing beyond u64 scan count".into())
    })?))
}

/// Scans after which pipeline `a` is no more expensive in total than `b`.
pub fn break_even(a: &CostParams, b: &CostParams) -> Result<u64, EconomicsError> {
    first_crossing(a, b, 1, 1)?.ok_or_else(|| {
        EconomicsError::NoCrossing(format!(
            "{} never breaks even with {}: it costs more up front and no less per scan",
            a.name, b.name
        ))
    })
}

/// Scans after which `a` costs at most half of `b` per scan.
pub fn cost_halving_point(a: &CostParams, b: &CostParams) -> Result<u64, EconomicsError> {
    first_crossing(a, b, 2, 1)?.ok_or_else(|| {
        EconomicsError::NoCrossing(format!(
            "{} never reaches half the per-scan cost of {}: its variable cost is at least half of {}'s",
            a.name, b.name, b.name
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeeksEstimate {
    pub scans: u64,
    pub weekly_capacity: u64,
    pub fractional_weeks: f64,
    pub whole_weeks: u64,
}

pub fn weeks_to_volume(n: u64, weekly_capacity: u64) -> Result<WeeksEstimate, EconomicsError> {
    if weekly_capacity == 0 {
        return Err(EconomicsError::ZeroCapacity);
    }
    Ok(WeeksEstimate {
        scans: n,
        weekly_capacity,
        fractional_weeks: n as f64 / weekly_capacity as f64,
        whole_weeks: n.div_ceil(weekly_capacity),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub cost_per_scan_a: f64,
    pub cost_per_scan_b: f64,
}

/// Geometrically spaced scan counts from `from` to `to` inclusive.
pub fn geometric_grid(from: u64, to: u64, points: usize) -> Vec<u64> {
    if points <= 1 || from >= to {
        return vec![from.max(1)];
    }
    let (lo, hi) = ((from.max(1)) as f64, to as f64);
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    let mut grid: Vec<u64> = (0..points)
        .map(|i| (lo * ratio.powi(i as i32)).round() as u64)
        .collect();
    *grid.last_mut().expect("non-empty") = to;
    grid.dedup();
    grid
}

pub fn cost_curve(
    a: &CostParams,
    b: &CostParams,
    grid: &[u64],
) -> Result<Vec<CurvePoint>, EconomicsError> {
    grid.iter()
        .map(|&n| {
            Ok(CurvePoint {
                n,
                cost_per_scan_a: cost_per_scan(a, n)?,
                cost_per_scan_b: cost_per_scan(b, n)?,
            })
        })
        .collect()
}
