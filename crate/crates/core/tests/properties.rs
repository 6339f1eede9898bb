use aerialscan::calibration_qc::{self as qc, CalibrationGeometry, Distortions};
use aerialscan::economics::{self, CostParams, Gbp};
use aerialscan::photogrammetry::{self as pg, LinePairResolution, ScaleRatio};
use aerialscan::preservation::{self, DamageExtent, IssueRates, MouldState, PrintCondition, SamplerOptions};
use aerialscan::scan_cell::{self, Attendance, CellConfig, HandlingTime};
use aerialscan::sortie_id::{self, CountryCode, SortieId};
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn country() -> impl Strategy<Value = CountryCode> {
    "[A-Z]{2}".prop_map(|c| CountryCode::new(&c).unwrap())
}

fn sortie() -> impl Strategy<Value = SortieId> {
    prop_oneof![
        (1u32..100_000, country(), 1u32..100_000).prop_map(|(contract_number, country_code, film_number)| {
            SortieId::DosContract {
                contract_number,
                country_code,
                film_number,
            }
        }),
        (1u32..10_000, "[A-Z]{3,6}", 1u32..100_000).prop_map(|(unit, service, mission_number)| {
            SortieId::MilitaryUnit {
                unit: unit.to_string(),
                service,
                mission_number,
            }
        }),
        ("[A-Z]{2,6}", country(), 0u8..100, 1u32..100_000).prop_map(
            |(company, country_code, year_two_digit, film_number)| SortieId::CommercialSurvey {
                company,
                country_code,
                year_two_digit,
                film_number,
            }
        ),
    ]
}

fn handling() -> impl Strategy<Value = HandlingTime> {
    (10.0f64..150.0, 0.0f64..0.9, 0u8..3).prop_map(|(mean, spread, kind)| match kind {
        0 => HandlingTime::Fixed { mean_seconds: mean },
        1 => HandlingTime::Uniform {
            mean_seconds: mean,
            half_width_seconds: mean * spread,
        },
        _ => HandlingTime::Lognormal {
            mean_seconds: mean,
            sigma: spread,
        },
    })
}

prop_compose! {
    fn cell()(
        scanners in 1usize..5,
        scan in 5.0f64..120.0,
        handling_time in handling(),
        capacity in proptest::option::of(1u32..50),
        retries in 1u32..5,
        failure in prop_oneof![Just(0.0), 0.0f64..0.5],
        attendance in 0u8..3,
        reload in proptest::option::of(0.0f64..1200.0),
        ramp in 1.0f64..1.2,
    ) -> CellConfig {
        CellConfig {
            scanners_per_robot: scanners,
            scan_seconds: scan,
            handling_time,
            hopper_capacity: capacity,
            lift_retry_limit: retries,
            lift_failure_prob: failure,
            attendance: match attendance {
                0 => Attendance::office_hours(),
                1 => Attendance::always(),
                _ => Attendance::never(),
            },
            reload_seconds: reload,
            ramp_multiplier: ramp,
            ..Default::default()
        }
    }
}

fn condition() -> impl Strategy<Value = PrintCondition> {
    (0u8..3, any::<[bool; 4]>(), 0u8..3).prop_map(|(m, flags, d)| PrintCondition {
        mould: [MouldState::None, MouldState::Dormant, MouldState::Active][m as usize],
        blocking: flags[0],
        silver_dust: flags[1],
        annotations_or_adhesives: flags[2],
        curling_or_creases: flags[3],
        rips_or_peeling: [DamageExtent::None, DamageExtent::Minor, DamageExtent::Extensive][d as usize],
    })
}

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn sortie_ids_round_trip(id in sortie()) {
        let text = sortie_id::canonical_format(&id);
        prop_assert_eq!(sortie_id::parse(&text).unwrap(), id.clone());
        let json = serde_json::to_string(&id).unwrap();
        prop_assert_eq!(serde_json::from_str::<SortieId>(&json).unwrap(), id);
    }

    #[test]
    fn surrounding_whitespace_is_ignored(id in sortie(), pad in "[ \t]{0,3}") {
        let text = format!("{pad}{}{pad}", sortie_id::canonical_format(&id));
        prop_assert_eq!(sortie_id::parse(&text).unwrap(), id);
    }

    #[test]
    fn ground_distance_grows_with_scale_and_shrinks_with_resolution(
        lp in 1.0f64..200.0,
        scale in 100.0f64..200_000.0,
        factor in 1.01f64..10.0,
    ) {
        let r = LinePairResolution::new(lp).unwrap();
        let finer = LinePairResolution::new(lp * factor).unwrap();
        let s = ScaleRatio::new(scale).unwrap();
        let smaller = ScaleRatio::new(scale * factor).unwrap();
        let base = pg::ground_resolved_distance(r, s).m();
        prop_assert!(pg::ground_resolved_distance(r, smaller).m() > base);
        prop_assert!(pg::ground_resolved_distance(finer, s).m() < base);
        let band = pg::optimal_pixel_range(r);
        prop_assert!(band.min.um() < band.max.um());
    }

    #[test]
    fn cost_per_scan_never_rises(fixed in 0i64..10_000_000, per_scan in 0i64..1_000_000, n in 1u64..1_000_000_000) {
        let p = CostParams::simple("p", Gbp::from_micros(fixed * 1_000_000), Gbp::from_micros(per_scan));
        let now = economics::cost_per_scan(&p, n).unwrap();
        let later = economics::cost_per_scan(&p, n + 1).unwrap();
        prop_assert!(later <= now);
        prop_assert!(p.total_cost_micros(n + 1) >= p.total_cost_micros(n));
    }

    #[test]
    fn break_even_is_the_first_crossing(
        fa in 0i64..1_000_000_000_000,
        va in 0i64..500_000,
        fb in 0i64..1_000_000_000_000,
        extra in 1i64..500_000,
    ) {
        let a = CostParams::simple("a", Gbp::from_micros(fa), Gbp::from_micros(va));
        let b = CostParams::simple("b", Gbp::from_micros(fb), Gbp::from_micros(va + extra));
        let n = economics::break_even(&a, &b).unwrap();
        prop_assert!(a.total_cost_micros(n) <= b.total_cost_micros(n));
        if n > 1 {
            prop_assert!(a.total_cost_micros(n - 1) > b.total_cost_micros(n - 1));
        }
        let half = economics::cost_halving_point(&a, &b);
        if let Ok(h) = half {
            prop_assert!(2 * a.total_cost_micros(h) <= b.total_cost_micros(h));
            if h > 1 {
                prop_assert!(2 * a.total_cost_micros(h - 1) > b.total_cost_micros(h - 1));
            }
        } else {
            prop_assert!(2 * va >= va + extra);
        }
    }

    #[test]
    fn no_crossing_when_dearer_on_both_counts(f in 1i64..1_000_000, v in 0i64..1_000_000, df in 1i64..1_000, dv in 0i64..1_000) {
        let a = CostParams::simple("a", Gbp::from_micros(f + df), Gbp::from_micros(v + dv));
        let b = CostParams::simple("b", Gbp::from_micros(f), Gbp::from_micros(v));
        prop_assert!(economics::break_even(&a, &b).is_err());
    }

    #[test]
    fn every_plan_follows_the_flowchart(c in condition()) {
        let plan = preservation::plan_remediation(&c);
        prop_assert!(plan.check_invariants(&c).is_ok());
        // Adding an issue never removes a step.
        let worse = PrintCondition { curling_or_creases: true, ..c };
        let more = preservation::plan_remediation(&worse);
        prop_assert!(plan.steps.iter().all(|s| more.steps.contains(s)));
    }

    #[test]
    fn sampled_boxes_are_seed_determined(seed in any::<u64>(), p in 0.0f64..1.0) {
        let rates = IssueRates::uniform(p);
        let a = preservation::sample_boxes(200, seed, &rates, SamplerOptions::default()).unwrap();
        let b = preservation::sample_boxes(200, seed, &rates, SamplerOptions::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let agg = preservation::aggregate_rates(&a).unwrap();
        prop_assert!(agg.per_issue().iter().all(|r| (0.0..=1.0).contains(r)));
        prop_assert!(agg.any_intervention >= agg.per_issue().iter().cloned().fold(0.0, f64::max));
    }
}

proptest! {
    #![proptest_config(cases(96))]

    #[test]
    fn simulated_traces_keep_their_invariants(config in cell(), seed in any::<u64>(), hours in 0.0f64..12.0) {
        let (trace, report) = scan_cell::simulate(&config, seed, hours).unwrap();
        prop_assert!(trace.check_all(&config).is_ok(), "{:?}", trace.check_all(&config));
        prop_assert_eq!(report.scans_completed, trace.count(scan_cell::Transition::ScanCompleted) as u64);
        let (again, _) = scan_cell::simulate(&config, seed, hours).unwrap();
        prop_assert_eq!(trace.to_csv_string(), again.to_csv_string());
    }

    #[test]
    fn longer_runs_never_scan_less(config in cell(), seed in any::<u64>(), hours in 0.0f64..6.0, more in 0.0f64..6.0) {
        let (_, short) = scan_cell::simulate(&config, seed, hours).unwrap();
        let (_, long) = scan_cell::simulate(&config, seed, hours + more).unwrap();
        prop_assert!(long.scans_completed >= short.scans_completed);
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn higher_ppi_resolves_finer_detail(ppi in 150u32..400, factor in 1.5f64..2.5) {
        let geom = CalibrationGeometry::default();
        let fine_ppi = (ppi as f64 * factor).round() as u32;
        let coarse = qc::render_target(&geom, ppi, &Distortions::default()).unwrap();
        let fine = qc::render_target(&geom, fine_ppi, &Distortions::default()).unwrap();
        let a = qc::smallest_resolvable_um(&coarse, &geom).unwrap();
        let b = qc::smallest_resolvable_um(&fine, &geom).unwrap();
        prop_assert!(b <= a, "{} ppi -> {} um, {} ppi -> {} um", ppi, a, fine_ppi, b);
    }

    #[test]
    fn pgm_round_trips(w in 1usize..64, h in 1usize..64, ppi in 1u32..5000, seed in any::<u64>()) {
        let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
        let r = qc::GrayRaster::new(w, h, ppi, pixels).unwrap();
        prop_assert_eq!(qc::GrayRaster::from_pgm(&r.to_pgm()).unwrap(), r);
    }
}
