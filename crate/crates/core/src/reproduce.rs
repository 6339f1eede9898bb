//! Self-check: recomputes the headline figures of the digitization study and
//! compares them with the published values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calibration_qc::{self as qc, CalibrationGeometry, Distortions, ScanLayout, Verdict};
use crate::economics::{self, Scenario};
use crate::photogrammetry::{self as pg, ByteConvention, LinePairResolution, ScaleRatio};
use crate::preservation::{self, IssueRates, PrintCondition, SamplerOptions};
use crate::scan_cell::{
    self, Attendance, CellConfig, HandlingTime, HumanParams, RoboticParams, ThroughputMode,
};
use crate::sortie_id::{self, CountryCode, SortieId};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(id: u8, name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        id,
        name,
        passed,
        detail,
    }
}

fn throughput_identities() -> Check {
    let human = scan_cell::theoretical_throughput(&ThroughputMode::HumanOperated(HumanParams::default()));
    let robot = scan_cell::theoretical_throughput(&ThroughputMode::Robotic(RoboticParams::default()));
    let fleet = scan_cell::theoretical_throughput(&ThroughputMode::Robotic(RoboticParams {
        scanners: 14,
        ..Default::default()
    }));
    let (Ok(h), Ok(r), Ok(f)) = (human, robot, fleet) else {
        return check(1, "throughput identities", false, "closed form failed".into());
    };
    let pairs = [
        (h.scans_per_scanner_hour, 50.0),
        (h.scans_per_hour, 100.0),
        (h.scans_per_scanner_week, 1750.0),
        (h.scans_per_worker_week, 3500.0),
        (r.scans_per_scanner_hour, 27.0),
        (r.scans_per_hour, 54.0),
        (r.scans_per_scanner_week, 4536.0),
        (r.scans_per_worker_week, 127_008.0),
        (f.scans_per_day, 9072.0),
        (f.scans_per_week, 63_504.0),
    ];
    let ok = pairs.iter().all(|(a, b)| a == b);
    check(
        1,
        "throughput identities",
        ok,
        format!(
            "human {}/{} per h, {}/{} per wk; robotic {}/{} per h, {}/{} per wk; fleet {}/day {}/wk",
            h.scans_per_scanner_hour,
            h.scans_per_hour,
            h.scans_per_scanner_week,
            h.scans_per_worker_week,
            r.scans_per_scanner_hour,
            r.scans_per_hour,
            r.scans_per_scanner_week,
            r.scans_per_worker_week,
            f.scans_per_day,
            f.scans_per_week
        ),
    )
}

fn productivity() -> Check {
    let h = scan_cell::theoretical_throughput(&ThroughputMode::HumanOperated(HumanParams::default()));
    let r = scan_cell::theoretical_throughput(&ThroughputMode::Robotic(RoboticParams::default()));
    match (h, r) {
        (Ok(h), Ok(r)) => match scan_cell::productivity_ratio(&r, &h) {
            Ok(p) => check(
                2,
                "productivity ratios",
                (p.per_scanner - 2.6).abs() <= 0.05 && p.per_worker > 30.0,
                format!("per scanner {:.3} (2.6-fold), per worker {:.2} (>30-fold)", p.per_scanner, p.per_worker),
            ),
            Err(e) => check(2, "productivity ratios", false, e.to_string()),
        },
        _ => check(2, "productivity ratios", false, "closed form failed".into()),
    }
}

fn simulation_calibration() -> Check {
    let unlimited = CellConfig {
        hopper_capacity: None,
        ..Default::default()
    };
    let dry = CellConfig {
        reload_seconds: None,
        ..Default::default()
    };
    match (scan_cell::simulate(&unlimited, 1, 100.0), scan_cell::simulate(&dry, 1, 24.0)) {
        (Ok((_, long)), Ok((_, limited))) => check(
            3,
            "simulation calibration",
            (long.scans_per_hour / 54.0 - 1.0).abs() <= 0.02 && limited.scans_completed == 600,
            format!(
                "{:.2} scans/hour over 100 h; {} scans from 2 x 300 prints",
                long.scans_per_hour, limited.scans_completed
            ),
        ),
        _ => check(3, "simulation calibration", false, "simulation failed".into()),
    }
}

/// A valid cell configuration drawn at random, for invariant sweeps.
pub fn random_cell_config(rng: &mut impl Rng) -> CellConfig {
    let mean = rng.random_range(20.0..150.0);
    let handling_time = match rng.random_range(0..3) {
        0 => HandlingTime::Fixed { mean_seconds: mean },
        1 => HandlingTime::Uniform {
            mean_seconds: mean,
            half_width_seconds: rng.random_range(0.0..mean * 0.9),
        },
        _ => HandlingTime::Lognormal {
            mean_seconds: mean,
            sigma: rng.random_range(0.0..0.8),
        },
    };
    let attendance = match rng.random_range(0..3) {
        0 => Attendance::office_hours(),
        1 => Attendance::always(),
        _ => Attendance::never(),
    };
    CellConfig {
        scanners_per_robot: rng.random_range(1..=4),
        scan_seconds: rng.random_range(10.0..120.0),
        handling_time,
        hopper_capacity: if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(1..=60))
        },
        lift_retry_limit: rng.random_range(1..=4),
        lift_failure_prob: if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..0.4)
        },
        retry_seconds: rng.random_range(0.0..10.0),
        attendance,
        recovery_seconds: rng.random_range(0.0..900.0),
        reload_seconds: if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(0.0..1200.0))
        },
        ramp_multiplier: rng.random_range(1.0..1.2),
        ..Default::default()
    }
}

fn simulation_invariants(seed: u64, runs: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..runs {
        let config = random_cell_config(&mut rng);
        let sim_seed = rng.random();
        let hours = rng.random_range(0.0..30.0);
        let Ok((trace, _)) = scan_cell::simulate(&config, sim_seed, hours) else {
            failures.push(format!("run {i}: rejected config"));
            continue;
        };
        if let Err(e) = trace.check_all(&config) {
            failures.push(format!("run {i}: {e}"));
        }
        if i % 10 == 0 {
            let again = scan_cell::simulate(&config, sim_seed, hours).map(|(t, _)| t);
            if again.as_ref() != Ok(&trace) {
                failures.push(format!("run {i}: not deterministic"));
            }
        }
    }
    check(
        4,
        "simulation invariants",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{runs} random configurations: conservation, exclusion, ordering, causality, determinism")
        } else {
            failures.join("; ")
        },
    )
}

fn observed() -> Check {
    let fleet = RoboticParams {
        scanners: 14,
        ..Default::default()
    };
    match (
        scan_cell::observed_vs_theoretical(9090.0, 36_084.0, &fleet),
        scan_cell::fraction_of_theoretical(27.0, 50.0),
    ) {
        (Ok(u), Ok(human)) => check(
            5,
            "observed vs theoretical",
            (u.weekly_fraction - 0.57).abs() <= 0.01
                && u.daily_at_or_above_theoretical
                && !u.notes.is_empty()
                && human == 0.54,
            format!(
                "weekly {:.3}, daily {:.3} (at or above: {}), human {:.2}",
                u.weekly_fraction, u.daily_fraction, u.daily_at_or_above_theoretical, human
            ),
        ),
        _ => check(5, "observed vs theoretical", false, "invalid inputs".into()),
    }
}

/// Smallest n where `lhs(n) <= rhs(n)`, by bisection on total costs.
fn bisect(lhs: impl Fn(u64) -> i128, rhs: impl Fn(u64) -> i128) -> u64 {
    let (mut lo, mut hi) = (1u64, 1u64 << 40);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if lhs(mid) <= rhs(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn costs() -> Check {
    let a = economics::benchmark(Scenario::RoboticBenchmark);
    let b = economics::benchmark(Scenario::ManualBenchmark);
    let (Ok(be), Ok(half)) = (economics::break_even(&a, &b), economics::cost_halving_point(&a, &b)) else {
        return check(6, "economics", false, "no crossing".into());
    };
    let weeks = economics::weeks_to_volume(be, 36_288).map(|w| w.fractional_weeks).unwrap_or(f64::NAN);
    let be_oracle = bisect(|n| a.total_cost_micros(n), |n| b.total_cost_micros(n));
    let half_oracle = bisect(|n| 2 * a.total_cost_micros(n), |n| b.total_cost_micros(n));
    let ok = (be as f64 / 2.4e6 - 1.0).abs() <= 0.02
        && (half as f64 / 5.0e6 - 1.0).abs() <= 0.02
        && (weeks.round() - 65.0).abs() <= 1.0
        && be == be_oracle
        && half == half_oracle;
    check(
        6,
        "economics",
        ok,
        format!("break-even {be} (bisection {be_oracle}), halving {half} (bisection {half_oracle}), {weeks:.2} weeks"),
    )
}

fn photogrammetry() -> Check {
    let grd = |lp: f64| {
        let r = LinePairResolution::new(lp).ok()?;
        let s = ScaleRatio::new(42_579.0).ok()?;
        Some(pg::ground_resolved_distance(r, s).m())
    };
    let range = |lp: f64| {
        let r = pg::optimal_pixel_range(LinePairResolution::new(lp).ok()?);
        Some((r.min.um(), r.max.um()))
    };
    let (Some(g10), Some(g27), Some(r27), Some(r10), Ok(pitch)) =
        (grd(10.0), grd(27.0), range(27.0), range(10.0), pg::pixel_pitch_from_ppi(1200.0))
    else {
        return check(7, "photogrammetry", false, "invalid inputs".into());
    };
    let tb = pg::storage_estimate(1_700_000, 250_000_000, ByteConvention::Decimal);
    let ok = pg::round_sig(g10, 2) == 2.1
        && (g27 * 10.0).round() / 10.0 == 0.8
        // Published bands are whole micrometres, truncated.
        && (r27.0.floor(), r27.1.floor()) == (13.0, 18.0)
        && (r10.0.floor(), (r10.1 + 1e-9).floor()) == (35.0, 50.0)
        && (pitch.um() * 10.0).round() / 10.0 == 21.2
        && tb.bytes == 425_000_000_000_000;
    check(
        7,
        "photogrammetry",
        ok,
        format!(
            "GRD {g10:.3} m / {g27:.3} m; pixels {:.1}-{:.1} um and {:.1}-{:.1} um; 1200 ppi {:.2} um; {} TB",
            r27.0,
            r27.1,
            r10.0,
            r10.1,
            pitch.um(),
            tb.terabytes()
        ),
    )
}

/// A valid identifier of any parseable family, drawn at random.
pub fn random_sortie_id(rng: &mut impl Rng) -> SortieId {
    let upper = |rng: &mut dyn rand::RngCore, n: usize| -> String {
        (0..n).map(|_| rng.random_range(b'A'..=b'Z') as char).collect()
    };
    let country = |rng: &mut dyn rand::RngCore| CountryCode::new(&upper(rng, 2)).expect("two letters");
    match rng.random_range(0..3) {
        0 => SortieId::DosContract {
            contract_number: rng.random_range(1..=999),
            country_code: country(rng),
            film_number: rng.random_range(1..=9999),
        },
        1 => {
            // Numeric squadron with a service name of three or more letters,
            // or an alphanumeric unit with any service.
            let len = rng.random_range(3..=5);
            SortieId::MilitaryUnit {
                unit: rng.random_range(1..=999u32).to_string(),
                service: upper(rng, len),
                mission_number: rng.random_range(1..=9999),
            }
        }
        _ => {
            let len = rng.random_range(2..=5);
            SortieId::CommercialSurvey {
                company: upper(rng, len),
                country_code: country(rng),
                year_two_digit: rng.random_range(0..=99),
                film_number: rng.random_range(1..=9999),
            }
        }
    }
}

fn parser(seed: u64) -> Check {
    let exemplars = ["4/BC/0056", "58/RAF/0456", "HSL/GH/64/0034"];
    let mut failures = Vec::new();
    for text in exemplars {
        match sortie_id::parse(text) {
            Ok(id) if sortie_id::canonical_format(&id) == text => {}
            other => failures.push(format!("{text}: {other:?}")),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let id = random_sortie_id(&mut rng);
        let text = sortie_id::canonical_format(&id);
        if sortie_id::parse(&text).as_ref() != Ok(&id) {
            failures.push(format!("round trip failed for {text}"));
        }
    }
    check(
        8,
        "identifier parser",
        failures.is_empty(),
        if failures.is_empty() {
            "3 exemplars and 1000 generated ids round-trip".into()
        } else {
            failures.join("; ")
        },
    )
}

fn triage(seed: u64) -> Check {
    let conditions = PrintCondition::all_combinations();
    let plans_ok = conditions
        .iter()
        .all(|c| preservation::plan_remediation(c).check_invariants(c).is_ok());
    let rates = IssueRates::default();
    let sampled = preservation::sample_boxes(100_000, seed, &rates, SamplerOptions::default())
        .and_then(|b| preservation::aggregate_rates(&b));
    let Ok(sampled) = sampled else {
        return check(9, "preservation", false, "sampling failed".into());
    };
    let worst = rates
        .per_issue()
        .iter()
        .zip(sampled.per_issue())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let independent = rates.independent_any_intervention();
    check(
        9,
        "preservation",
        plans_ok && worst <= 0.002 && (independent - 0.37).abs() < 0.005,
        format!(
            "{} condition combinations planned; worst rate error {:.2} pp; independent any-intervention {:.3} vs observed {:.2} (issues co-occur, so the product rule is only a reference)",
            conditions.len(),
            worst * 100.0,
            independent,
            rates.any_intervention
        ),
    )
}

fn calibration(seed: u64) -> Check {
    let geom = CalibrationGeometry::default();
    let result = (|| -> Result<String, qc::QcError> {
        let clean = qc::render_target(&geom, 1200, &Distortions::default())?;
        let scale = qc::measure_scale_px(&clean, &geom)?;
        let (first, last) = geom.wedge_centroids(1200.0);
        let tones = qc::wedge_tones(&clean, first, last)?;
        let exact = tones
            .iter()
            .enumerate()
            .all(|(k, &t)| t == qc::wedge_level(k, qc::WEDGE_SEGMENTS));
        let um = qc::smallest_resolvable_um(&clean, &geom)?;
        let two_px = 2.0 * clean.pixel_pitch_um();
        let step = 2f64.powf(1.0 / 6.0);
        let skewed = qc::render_target(
            &geom,
            1200,
            &Distortions {
                scale_error_fraction: 0.002,
                seed,
                ..Default::default()
            },
        )?;
        let skewed_scale = qc::measure_scale_px(&skewed, &geom)?;
        let layout = ScanLayout::default();
        let scan = qc::render_scan(&layout, &geom, 1200, &Distortions::default())?;
        let print = layout.print_box(1200);
        let crop = qc::crop_box(&scan, 5.0)?;
        let pad = qc::border_px(5.0, 1200);
        let crop_ok = pad == 236
            && crop.x + pad == print.x
            && crop.y + pad == print.y
            && crop.width == print.width + 2 * pad
            && crop.height == print.height + 2 * pad;
        let ok = (scale.length_px - 7200.0).abs() <= 1.0
            && scale.verdict == Verdict::Pass
            && exact
            && um <= two_px * step
            && um >= two_px / step
            && skewed_scale.verdict == Verdict::Fail
            && crop_ok;
        let detail = format!(
            "scale {} px, wedge exact {exact}, resolves {um:.1} um (2 px = {two_px:.1} um), +0.2% reads {} px ({:?}), crop {}x{} px",
            scale.length_px, skewed_scale.length_px, skewed_scale.verdict, crop.width, crop.height
        );
        Ok(if ok { detail } else { format!("FAILED: {detail}") })
    })();
    match result {
        Ok(d) => check(10, "calibration round trip", !d.starts_with("FAILED"), d),
        Err(e) => check(10, "calibration round trip", false, e.to_string()),
    }
}

/// Runs every check; `seed` drives the randomized ones.
pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        throughput_identities(),
        productivity(),
        simulation_calibration(),
        simulation_invariants(seed, 1000),
        observed(),
        costs(),
        photogrammetry(),
        parser(seed),
        triage(seed),
        calibration(seed),
    ]
}
