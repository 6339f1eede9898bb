use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::raster::{GrayRaster, PixelBox};
use super::target::{mm_to_px, CalibrationGeometry, MM_PER_INCH};
use super::QcError;

/// Share of the coarsest group's contrast a finer group must keep to count.
/// Close to one: some sample has to fall wholly inside every bar and every
/// space, which takes roughly two samples per line width.
pub const MIN_BAR_MODULATION: f64 = 0.99;

/// Half-width of the square window sampled around each wedge centroid.
pub const WEDGE_WINDOW_RADIUS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMeasurement {
    pub length_px: f64,
    pub expected_px: f64,
    pub tolerance_px: f64,
    pub verdict: Verdict,
}

/// Allowed deviation: 0.1% of the expected length plus one pixel.
pub fn scale_tolerance_px(expected_px: f64) -> f64 {
    0.001 * expected_px + 1.0
}

fn column_profile(r: &GrayRaster, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<f64> {
    let n = rows.len().max(1) as f64;
    let mut profile = vec![0.0; cols.len()];
    for y in rows {
        let row = &r.row(y)[cols.clone()];
        for (acc, &v) in profile.iter_mut().zip(row) {
            *acc += v as f64;
        }
    }
    profile.iter_mut().for_each(|v| *v /= n);
    profile
}

/// Runs of samples below `threshold` as half-open index ranges.
fn dark_runs(profile: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in profile.iter().enumerate() {
        match (v < threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, profile.len()));
    }
    runs
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Length between the first and last tick of the measure scale, from the
/// darkness-weighted centroids of the tick columns.
pub fn measure_scale_px(
    r: &GrayRaster,
    geom: &CalibrationGeometry,
) -> Result<ScaleMeasurement, QcError> {
    let ppi = r.ppi as f64;
    let rows = geom.scale_band.rows(ppi, r.height);
    let strip = (mm_to_px(geom.width_mm, ppi).ceil() as usize).min(r.width);
    let profile = column_profile(r, rows, 0..strip);
    let (lo, hi) = profile
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo < 32.0 {
        return Err(QcError::Analysis(format!(
            "no measure-scale ticks: band contrast {:.1} grey levels",
            hi - lo
        )));
    }
    let threshold = (lo + hi) / 2.0;
    let runs = dark_runs(&profile, threshold);
    if runs.len() < 2 {
        return Err(QcError::Analysis(format!(
            "found {} measure-scale tick(s), need both ends",
            runs.len()
        )));
    }
    let centroid = |(s, e): (usize, usize)| {
        // Widen by a pixel each side so blurred tails contribute.
        let (s, e) = (s.saturating_sub(1), (e + 1).min(profile.len()));
        let (mut m, mut w) = (0.0, 0.0);
        for (i, v) in profile.iter().enumerate().take(e).skip(s) {
            let weight = (hi - v).max(0.0);
            m += weight * i as f64;
            w += weight;
        }
        m / w
    };
    let length_px = centroid(runs[runs.len() - 1]) - centroid(runs[0]);
    let expected_px = geom.scale_inches as f64 * ppi;
    let tolerance_px = scale_tolerance_px(expected_px);
    let verdict = if (length_px - expected_px).abs() <= tolerance_px {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ScaleMeasurement {
        length_px,
        expected_px,
        tolerance_px,
        verdict,
    })
}

/// Samples `count` evenly spaced points from `first` to `last` (pixel
/// coordinates) and returns the median of a small window at each.
pub fn wedge_tones_n(
    r: &GrayRaster,
    first: (f64, f64),
    last: (f64, f64),
    count: usize,
) -> Result<Vec<u8>, QcError> {
    let inside = |(x, y): (f64, f64)| {
        x >= 0.0 && y >= 0.0 && (x as usize) < r.width && (y as usize) < r.height
    };
    if !inside(first) || !inside(last) {
        return Err(QcError::Domain(format!(
            "wedge centroids {first:?}..{last:?} outside {}x{} raster",
            r.width, r.height
        )));
    }
    if first == last {
        return Err(QcError::Domain("first and last wedge centroids coincide".into()));
    }
    if count < 2 {
        return Err(QcError::Domain("need at least two wedge segments".into()));
    }
    let rad = WEDGE_WINDOW_RADIUS;
    Ok((0..count)
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            let cx = (first.0 + t * (last.0 - first.0)) as usize;
            let cy = (first.1 + t * (last.1 - first.1)) as usize;
            let mut window = Vec::with_capacity((2 * rad + 1).pow(2));
            for y in cy.saturating_sub(rad)..=(cy + rad).min(r.height - 1) {
                for x in cx.saturating_sub(rad)..=(cx + rad).min(r.width - 1) {
                    window.push(r.get(x, y));
                }
            }
            window.sort_unstable();
            window[window.len() / 2]
        })
        .collect())
}

pub fn wedge_tones(r: &GrayRaster, first: (f64, f64), last: (f64, f64)) -> Result<Vec<u8>, QcError> {
    wedge_tones_n(r, first, last, super::target::WEDGE_SEGMENTS)
}

pub fn is_monotone(values: &[u8]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1]) || values.windows(2).all(|w| w[0] >= w[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupReading {
    pub line_width_um: f64,
    pub bars_found: usize,
    pub modulation: f64,
    pub counted: bool,
}

/// Reads every bar group: bars found by thresholding each group's column
/// profile midway between its 10th and 90th percentiles, and the contrast
/// between the lightest bar and the darkest gap relative to the coarsest
/// group.
pub fn read_bar_groups(r: &GrayRaster, geom: &CalibrationGeometry) -> Vec<GroupReading> {
    let ppi = r.ppi as f64;
    let band = geom.bar_band.rows(ppi, r.height);
    // Stay clear of the band edges, which blur into the background.
    let trim = band.len() / 8;
    let rows = band.start + trim..band.end - trim;
    let mut readings = geom
        .groups
        .iter()
        .zip(geom.group_spans_mm())
        .map(|(g, (start, end))| {
            let w = g.line_width_um / 1000.0;
            let from = mm_to_px(start - w, ppi).floor().max(0.0) as usize;
            let to = (mm_to_px(end + w, ppi).ceil() as usize).min(r.width);
            let mut reading = GroupReading {
                line_width_um: g.line_width_um,
                bars_found: 0,
                modulation: 0.0,
                counted: false,
            };
            if to <= from + 2 {
                return reading;
            }
            let profile = column_profile(r, rows.clone(), from..to);
            let p10 = percentile(&profile, 0.1);
            let p90 = percentile(&profile, 0.9);
            let runs = dark_runs(&profile, (p10 + p90) / 2.0);
            reading.bars_found = runs.len();
            if runs.is_empty() || p90 - p10 < 1.0 {
                reading.bars_found = 0;
                return reading;
            }
            let darkest_gap = runs
                .windows(2)
                .map(|pair| {
                    profile[pair[0].1..pair[1].0]
                        .iter()
                        .cloned()
                        .fold(f64::MIN, f64::max)
                })
                .fold(f64::MAX, f64::min);
            let lightest_bar = runs
                .iter()
                .map(|&(s, e)| profile[s..e].iter().cloned().fold(f64::MAX, f64::min))
                .fold(f64::MIN, f64::max);
            let gap = if runs.len() > 1 { darkest_gap } else { p90 };
            reading.modulation = (gap - lightest_bar).max(0.0);
            reading
        })
        .collect::<Vec<_>>();
    // Contrast is judged against the coarsest group.
    let reference = readings.first().map_or(0.0, |g| g.modulation);
    for (reading, g) in readings.iter_mut().zip(&geom.groups) {
        reading.modulation = if reference > 0.0 {
            reading.modulation / reference
        } else {
            0.0
        };
        reading.counted =
            reading.bars_found == g.bar_count as usize && reading.modulation >= MIN_BAR_MODULATION;
    }
    readings
}

/// Line width of the last group, walking coarse to fine, whose bars can all
/// be counted; the walk stops at the first group that fails.
pub fn smallest_resolvable_um(r: &GrayRaster, geom: &CalibrationGeometry) -> Result<f64, QcError> {
    read_bar_groups(r, geom)
        .iter()
        .take_while(|g| g.counted)
        .last()
        .map(|g| g.line_width_um)
        .ok_or_else(|| QcError::Analysis("no countable bar group".into()))
}

/// Border width in pixels for `border_mm` at `ppi`.
pub fn border_px(border_mm: f64, ppi: u32) -> usize {
    (border_mm * ppi as f64 / MM_PER_INCH).round() as usize
}

/// Bounding box of the light print: rows and columns in which at least half
/// as many pixels are light as in the lightest row or column.
pub fn print_bounds(r: &GrayRaster) -> Result<PixelBox, QcError> {
    const LIGHT: u8 = 128;
    let mut row_counts = vec![0usize; r.height];
    let mut col_counts = vec![0usize; r.width];
    for (y, count) in row_counts.iter_mut().enumerate() {
        for (x, &v) in r.row(y).iter().enumerate() {
            if v >= LIGHT {
                *count += 1;
                col_counts[x] += 1;
            }
        }
    }
    let span = |counts: &[usize]| {
        let peak = *counts.iter().max()?;
        if peak == 0 {
            return None;
        }
        let keep = |c: &usize| 2 * c >= peak;
        let first = counts.iter().position(keep)?;
        let last = counts.iter().rposition(keep)?;
        Some((first, last + 1))
    };
    match (span(&row_counts), span(&col_counts)) {
        (Some((y0, y1)), Some((x0, x1))) => Ok(PixelBox {
            x: x0,
            y: y0,
            width: x1 - x0,
            height: y1 - y0,
        }),
        _ => Err(QcError::Analysis("no light print region".into())),
    }
}

/// Print bounds grown by the border on every side, clamped to the raster.
pub fn crop_box(r: &GrayRaster, border_mm: f64) -> Result<PixelBox, QcError> {
    if !(border_mm.is_finite() && border_mm >= 0.0) {
        return Err(QcError::Domain(format!("border must be non-negative, got {border_mm}")));
    }
    let b = print_bounds(r)?;
    let pad = border_px(border_mm, r.ppi);
    let x0 = b.x.saturating_sub(pad);
    let y0 = b.y.saturating_sub(pad);
    let x1 = (b.x + b.width + pad).min(r.width);
    let y1 = (b.y + b.height + pad).min(r.height);
    Ok(PixelBox {
        x: x0,
        y: y0,
        width: x1 - x0,
        height: y1 - y0,
    })
}

pub fn crop_to_border(r: &GrayRaster, border_mm: f64) -> Result<GrayRaster, QcError> {
    r.crop(crop_box(r, border_mm)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ppi: u32,
    pub measured_scale_px: f64,
    pub expected_scale_px: f64,
    pub scale_verdict: Verdict,
    pub wedge_values: Vec<u8>,
    pub wedge_monotone: bool,
    pub smallest_resolvable_um: f64,
    pub crop_box: PixelBox,
}

/// Full analysis of a raster holding the strip at its nominal position.
pub fn analyze(r: &GrayRaster, geom: &CalibrationGeometry, border_mm: f64) -> Result<CalibrationReport, QcError> {
    let scale = measure_scale_px(r, geom)?;
    let (first, last) = geom.wedge_centroids(r.ppi as f64);
    let wedge_values = wedge_tones(r, first, last)?;
    Ok(CalibrationReport {
        ppi: r.ppi,
        measured_scale_px: scale.length_px,
        expected_scale_px: scale.expected_px,
        scale_verdict: scale.verdict,
        wedge_monotone: is_monotone(&wedge_values),
        wedge_values,
        smallest_resolvable_um: smallest_resolvable_um(r, geom)?,
        crop_box: crop_box(r, border_mm)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub file: String,
    pub ppi: Option<u32>,
    pub measured_scale_px: Option<f64>,
    pub scale_verdict: Option<Verdict>,
    pub wedge_monotone: Option<bool>,
    pub smallest_resolvable_um: Option<f64>,
    pub error: Option<String>,
}

fn batch_row(path: &Path, geom: &CalibrationGeometry, border_mm: f64) -> BatchRow {
    let file = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    match GrayRaster::read_pgm(path).and_then(|r| analyze(&r, geom, border_mm)) {
        Ok(rep) => BatchRow {
            file,
            ppi: Some(rep.ppi),
            measured_scale_px: Some(rep.measured_scale_px),
            scale_verdict: Some(rep.scale_verdict),
            wedge_monotone: Some(rep.wedge_monotone),
            smallest_resolvable_um: Some(rep.smallest_resolvable_um),
            error: None,
        },
        Err(e) => BatchRow {
            file,
            ppi: None,
            measured_scale_px: None,
            scale_verdict: None,
            wedge_monotone: None,
            smallest_resolvable_um: None,
            error: Some(e.to_string()),
        },
    }
}

/// Analyzes every `.pgm` file in `dir` in parallel; rows come back sorted by
/// file name. Per-file failures are reported in the row, not raised.
pub fn analyze_dir(dir: &Path, geom: &CalibrationGeometry, border_mm: f64) -> Result<Vec<BatchRow>, QcError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| QcError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    Ok(paths
        .par_iter()
        .map(|p| batch_row(p, geom, border_mm))
        .collect())
}
