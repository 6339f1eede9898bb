//! Synthetic calibration strips and the analysis run on scanned ones:
//! measure-scale length, step-wedge tones, bar-chart resolution and
//! cropping a print to a fixed dark border.

mod analysis;
mod raster;
mod target;

use std::path::Path;

use thiserror::Error;

pub use analysis::{
    analyze, analyze_dir, border_px, crop_box, crop_to_border, is_monotone, measure_scale_px,
    print_bounds, read_bar_groups, scale_tolerance_px, smallest_resolvable_um, wedge_tones,
    wedge_tones_n, BatchRow, CalibrationReport, GroupReading, ScaleMeasurement, Verdict,
    MIN_BAR_MODULATION, WEDGE_WINDOW_RADIUS,
};
pub use raster::{GrayRaster, PixelBox};
pub use target::{
    apply_distortions, geometric_groups, render_scan, render_target, wedge_level, Band, BarGroup,
    CalibrationGeometry, Distortions, ScanLayout, MAX_PIXELS, MM_PER_INCH, WEDGE_SEGMENTS,
};

#[derive(Debug, Error)]
pub enum QcError {
    #[error("calibration_qc: {0}")]
    Domain(String),
    #[error("calibration_qc analysis: {0}")]
    Analysis(String),
    #[error("calibration_qc: bad graymap: {0}")]
    Format(String),
    #[error("calibration_qc: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl QcError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        QcError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(ppi: u32) -> GrayRaster {
        render_target(&CalibrationGeometry::default(), ppi, &Distortions::default()).unwrap()
    }

    #[test]
    fn scale_round_trip() {
        let g = CalibrationGeometry::default();
        for ppi in [300, 600, 1200] {
            let m = measure_scale_px(&clean(ppi), &g).unwrap();
            assert!((m.length_px - 6.0 * ppi as f64).abs() <= 1.0, "{ppi}: {}", m.length_px);
            assert_eq!(m.verdict, Verdict::Pass);
        }
    }

    #[test]
    fn one_ppi_scale_is_six_pixels() {
        let g = CalibrationGeometry::default();
        let r = clean(1);
        assert_eq!(measure_scale_px(&r, &g).unwrap().length_px, 6.0);
    }

    #[test]
    fn scale_error_fails() {
        let g = CalibrationGeometry::default();
        let d = Distortions {
            scale_error_fraction: 0.002,
            ..Default::default()
        };
        let r = render_target(&g, 1200, &d).unwrap();
        let m = measure_scale_px(&r, &g).unwrap();
        assert_eq!(m.length_px, 7214.0);
        assert_eq!(m.verdict, Verdict::Fail);
    }

    #[test]
    fn blank_raster_has_no_scale() {
        let r = GrayRaster::filled(3000, 300, 300, 255).unwrap();
        assert!(matches!(
            measure_scale_px(&r, &CalibrationGeometry::default()),
            Err(QcError::Analysis(_))
        ));
    }

    #[test]
    fn wedge_round_trip() {
        let g = CalibrationGeometry::default();
        for ppi in [300, 600, 1200] {
            let (a, b) = g.wedge_centroids(ppi as f64);
            let tones = wedge_tones(&clean(ppi), a, b).unwrap();
            let expected: Vec<u8> = (0..21).map(|k| wedge_level(k, 21)).collect();
            assert_eq!(tones, expected);
        }
    }

    #[test]
    fn wedge_needs_distinct_centroids() {
        let r = clean(300);
        assert!(wedge_tones(&r, (50.0, 50.0), (50.0, 50.0)).is_err());
        assert!(wedge_tones(&r, (50.0, 50.0), (1e6, 50.0)).is_err());
    }

    #[test]
    fn noisy_wedge_stays_close() {
        let g = CalibrationGeometry::default();
        let d = Distortions {
            noise_sigma: 2.0,
            seed: 3,
            ..Default::default()
        };
        let r = render_target(&g, 600, &d).unwrap();
        let (a, b) = g.wedge_centroids(600.0);
        let tones = wedge_tones(&r, a, b).unwrap();
        for (k, t) in tones.iter().enumerate() {
            assert!((*t as i32 - wedge_level(k, 21) as i32).abs() <= 3);
        }
        assert!(is_monotone(&tones));
    }

    #[test]
    fn resolution_near_two_pixels() {
        let g = CalibrationGeometry::default();
        for ppi in [300, 600, 1200] {
            let r = clean(ppi);
            let um = smallest_resolvable_um(&r, &g).unwrap();
            let two_px = 2.0 * r.pixel_pitch_um();
            let step = 2f64.powf(1.0 / 6.0);
            assert!(um >= r.pixel_pitch_um());
            assert!(um <= two_px * step && um >= two_px / step, "{ppi}: {um} vs {two_px}");
        }
    }

    #[test]
    fn coarse_groups_always_count() {
        let g = CalibrationGeometry {
            groups: geometric_groups(500.0, 250.0, 3),
            ..Default::default()
        };
        let um = smallest_resolvable_um(&clean(1200), &g).unwrap();
        assert_eq!(um, g.groups.last().unwrap().line_width_um);
    }

    #[test]
    fn heavy_blur_resolves_nothing() {
        let g = CalibrationGeometry::default();
        let d = Distortions {
            blur_radius_px: 40.0,
            ..Default::default()
        };
        let r = render_target(&g, 100, &d).unwrap();
        assert!(matches!(smallest_resolvable_um(&r, &g), Err(QcError::Analysis(_))));
    }

    #[test]
    fn crop_adds_border() {
        let layout = ScanLayout::default();
        let r = render_scan(&layout, &CalibrationGeometry::default(), 150, &Distortions::default()).unwrap();
        let b = layout.print_box(150);
        assert_eq!(print_bounds(&r).unwrap(), b);
        let pad = border_px(5.0, 150);
        let c = crop_to_border(&r, 5.0).unwrap();
        assert_eq!((c.width, c.height), (b.width + 2 * pad, b.height + 2 * pad));
        assert_eq!(border_px(5.0, 1200), 236);
    }

    #[test]
    fn crop_of_white_is_identity() {
        let r = GrayRaster::filled(40, 30, 300, 255).unwrap();
        assert_eq!(crop_to_border(&r, 5.0).unwrap(), r);
    }

    #[test]
    fn crop_clamps_at_edges() {
        let layout = ScanLayout {
            print_origin_mm: Some([0.0, 0.0]),
            ..Default::default()
        };
        let r = render_scan(&layout, &CalibrationGeometry::default(), 100, &Distortions::default()).unwrap();
        let b = crop_box(&r, 5.0).unwrap();
        assert_eq!((b.x, b.y), (0, 0));
        assert_eq!(b.width, 900 + border_px(5.0, 100));
    }

    #[test]
    fn dark_raster_has_no_print() {
        let r = GrayRaster::filled(40, 30, 300, 10).unwrap();
        assert!(matches!(crop_box(&r, 5.0), Err(QcError::Analysis(_))));
    }

    #[test]
    fn full_report() {
        let g = CalibrationGeometry::default();
        let rep = analyze(&clean(600), &g, 5.0).unwrap();
        assert_eq!(rep.scale_verdict, Verdict::Pass);
        assert!(rep.wedge_monotone);
        assert_eq!(rep.wedge_values.len(), 21);
    }

    #[test]
    fn embedded_target_is_read() {
        let layout = ScanLayout {
            include_target: true,
            ..Default::default()
        };
        let g = CalibrationGeometry::default();
        let r = render_scan(&layout, &g, 300, &Distortions::default()).unwrap();
        let rep = analyze(&r, &g, 5.0).unwrap();
        assert_eq!(rep.scale_verdict, Verdict::Pass);
        assert_eq!(rep.crop_box.width, layout.print_box(300).width + 2 * border_px(5.0, 300));
    }
}
