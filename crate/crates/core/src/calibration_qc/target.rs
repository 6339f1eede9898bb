use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::raster::{GrayRaster, PixelBox};
use super::QcError;

pub const MM_PER_INCH: f64 = 25.4;
pub const WEDGE_SEGMENTS: usize = 21;

pub(crate) fn mm_to_px(mm: f64, ppi: f64) -> f64 {
    mm * ppi / MM_PER_INCH
}

/// A horizontal band of the target, in millimetres from the strip's top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub top_mm: f64,
    pub bottom_mm: f64,
}

impl Band {
    pub(crate) fn rows(&self, ppi: f64, height: usize) -> std::ops::Range<usize> {
        let top = (mm_to_px(self.top_mm, ppi).floor() as usize).min(height.saturating_sub(1));
        let bottom = (mm_to_px(self.bottom_mm, ppi).round() as usize).clamp(top + 1, height);
        top..bottom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarGroup {
    pub line_width_um: f64,
    pub bar_count: u32,
}

/// Calibration strip: a measure scale, a tonal step wedge and a bar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationGeometry {
    pub width_mm: f64,
    pub height_mm: f64,
    pub scale_inches: u32,
    pub scale_band: Band,
    pub scale_origin_mm: f64,
    pub wedge_segments: usize,
    pub wedge_band: Band,
    pub wedge_origin_mm: f64,
    pub wedge_segment_mm: f64,
    pub bar_band: Band,
    pub bar_origin_mm: f64,
    /// Clear space between neighbouring bar groups.
    pub group_gap_mm: f64,
    pub groups: Vec<BarGroup>,
}

impl Default for CalibrationGeometry {
    fn default() -> Self {
        Self {
            width_mm: 250.0,
            height_mm: 25.0,
            scale_inches: 6,
            scale_band: Band {
                top_mm: 1.0,
                bottom_mm: 7.0,
            },
            scale_origin_mm: 10.0,
            wedge_segments: WEDGE_SEGMENTS,
            wedge_band: Band {
                top_mm: 9.0,
                bottom_mm: 16.0,
            },
            wedge_origin_mm: 10.0,
            wedge_segment_mm: 5.0,
            bar_band: Band {
                top_mm: 18.0,
                bottom_mm: 24.0,
            },
            bar_origin_mm: 10.0,
            group_gap_mm: 1.0,
            groups: geometric_groups(500.0, 10.0, 3),
        }
    }
}

/// Line widths falling by a factor of 2^(1/6) from `coarsest_um` while
/// staying at or above `finest_um`.
pub fn geometric_groups(coarsest_um: f64, finest_um: f64, bar_count: u32) -> Vec<BarGroup> {
    (0..)
        .map(|k| coarsest_um * 2f64.powf(-(k as f64) / 6.0))
        .take_while(|&w| w >= finest_um)
        .map(|line_width_um| BarGroup {
            line_width_um,
            bar_count,
        })
        .collect()
}

/// Nominal wedge intensity for segment `k`: equal steps from black to white.
pub fn wedge_level(k: usize, segments: usize) -> u8 {
    (255.0 * k as f64 / (segments - 1) as f64).round() as u8
}

impl CalibrationGeometry {
    /// Left edge of each group, in mm; each group spans `(2n - 1)` line widths.
    pub fn group_spans_mm(&self) -> Vec<(f64, f64)> {
        let mut x = self.bar_origin_mm;
        self.groups
            .iter()
            .map(|g| {
                let w = g.line_width_um / 1000.0;
                let span = (x, x + w * (2 * g.bar_count - 1) as f64);
                x = span.1 + self.group_gap_mm;
                span
            })
            .collect()
    }

    pub fn wedge_end_mm(&self) -> f64 {
        self.wedge_origin_mm + self.wedge_segment_mm * self.wedge_segments as f64
    }

    /// Centres of the first and last wedge segments, in pixels.
    pub fn wedge_centroids(&self, ppi: f64) -> ((f64, f64), (f64, f64)) {
        let y = mm_to_px((self.wedge_band.top_mm + self.wedge_band.bottom_mm) / 2.0, ppi);
        let first = mm_to_px(self.wedge_origin_mm + self.wedge_segment_mm / 2.0, ppi);
        let last = mm_to_px(self.wedge_end_mm() - self.wedge_segment_mm / 2.0, ppi);
        ((first, y), (last, y))
    }

    pub fn validate(&self) -> Result<(), QcError> {
        let bad = |msg: String| Err(QcError::Domain(format!("geometry: {msg}")));
        if !(self.width_mm > 0.0 && self.height_mm > 0.0) {
            return bad("target size must be positive".into());
        }
        if self.wedge_segments != WEDGE_SEGMENTS {
            return bad(format!("wedge must have {WEDGE_SEGMENTS} segments, got {}", self.wedge_segments));
        }
        if self.groups.is_empty() {
            return bad("no bar groups".into());
        }
        if self.groups.iter().any(|g| g.bar_count == 0 || !(g.line_width_um > 0.0)) {
            return bad("bar groups need positive widths and at least one bar".into());
        }
        if self
            .groups
            .windows(2)
            .any(|w| w[1].line_width_um >= w[0].line_width_um)
        {
            return bad("group line widths must strictly decrease".into());
        }
        let scale_end = self.scale_origin_mm + self.scale_inches as f64 * MM_PER_INCH;
        let bars_end = self.group_spans_mm().last().map_or(0.0, |s| s.1);
        for (what, end) in [
            ("measure scale", scale_end),
            ("wedge", self.wedge_end_mm()),
            ("bar chart", bars_end),
        ] {
            if end > self.width_mm {
                return bad(format!("{what} ends at {end:.1} mm, past the {} mm strip", self.width_mm));
            }
        }
        for (what, band) in [
            ("scale", self.scale_band),
            ("wedge", self.wedge_band),
            ("bar", self.bar_band),
        ] {
            if !(band.top_mm >= 0.0 && band.top_mm < band.bottom_mm && band.bottom_mm <= self.height_mm) {
                return bad(format!("{what} band outside the strip"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Distortions {
    /// The strip is drawn this much larger than nominal; the raster keeps
    /// the nominal ppi.
    pub scale_error_fraction: f64,
    pub noise_sigma: f64,
    /// Gaussian blur standard deviation in pixels.
    pub blur_radius_px: f64,
    pub seed: u64,
}

/// Largest raster the renderers will allocate.
pub const MAX_PIXELS: usize = 1 << 31;

fn check_size(width: usize, height: usize) -> Result<(), QcError> {
    match width.checked_mul(height) {
        Some(n) if n <= MAX_PIXELS && width > 0 && height > 0 => Ok(()),
        _ => Err(QcError::Domain(format!(
            "{width}x{height} raster is empty or too large"
        ))),
    }
}

/// Draws the strip on a white background.
pub fn render_target(
    geom: &CalibrationGeometry,
    ppi: u32,
    distortions: &Distortions,
) -> Result<GrayRaster, QcError> {
    geom.validate()?;
    if ppi == 0 {
        return Err(QcError::Domain("ppi must be positive".into()));
    }
    let d = distortions;
    if !(d.scale_error_fraction.is_finite() && d.scale_error_fraction > -1.0) {
        return Err(QcError::Domain("scale_error_fraction must exceed -1".into()));
    }
    let eff = ppi as f64 * (1.0 + d.scale_error_fraction);
    let width = mm_to_px(geom.width_mm, eff).ceil() as usize;
    let height = mm_to_px(geom.height_mm, eff).ceil() as usize;
    check_size(width, height)?;
    let mut r = GrayRaster::filled(width, height, ppi, 255)?;

    draw_target(&mut r, geom, eff, 0, 0);
    apply_distortions(&mut r, d)?;
    Ok(r)
}

fn draw_target(r: &mut GrayRaster, geom: &CalibrationGeometry, eff: f64, x_off: usize, y_off: usize) {
    let sub_h = (mm_to_px(geom.height_mm, eff).ceil() as usize).min(r.height - y_off);
    let sub_w = (mm_to_px(geom.width_mm, eff).ceil() as usize).min(r.width - x_off);

    // Wedge
    let rows = geom.wedge_band.rows(eff, sub_h);
    for k in 0..geom.wedge_segments {
        let x0 = mm_to_px(geom.wedge_origin_mm + geom.wedge_segment_mm * k as f64, eff).round() as usize;
        let x1 = mm_to_px(geom.wedge_origin_mm + geom.wedge_segment_mm * (k + 1) as f64, eff).round() as usize;
        let level = wedge_level(k, geom.wedge_segments);
        for y in rows.clone() {
            for x in x0.min(sub_w)..x1.min(sub_w) {
                r.set(x_off + x, y_off + y, level);
            }
        }
    }

    // Bars, shaded by the fraction of each column they cover.
    let mut coverage = vec![0.0f64; sub_w];
    for (g, (start, _)) in geom.groups.iter().zip(geom.group_spans_mm()) {
        let w = mm_to_px(g.line_width_um / 1000.0, eff);
        let x0 = mm_to_px(start, eff);
        for b in 0..g.bar_count {
            let a = x0 + 2.0 * w * b as f64;
            let e = a + w;
            let first = a.floor().max(0.0) as usize;
            let last = (e.ceil() as usize).min(sub_w);
            for (c, cov) in coverage.iter_mut().enumerate().take(last).skip(first) {
                let overlap = (e.min(c as f64 + 1.0) - a.max(c as f64)).max(0.0);
                *cov += overlap;
            }
        }
    }
    let rows = geom.bar_band.rows(eff, sub_h);
    for (x, cov) in coverage.iter().enumerate() {
        if *cov > 0.0 {
            let v = (255.0 * (1.0 - cov.min(1.0))).round() as u8;
            for y in rows.clone() {
                r.set(x_off + x, y_off + y, v);
            }
        }
    }

    // Measure scale: white band with a one-pixel tick at each end.
    let rows = geom.scale_band.rows(eff, sub_h);
    for y in rows.clone() {
        for x in 0..sub_w {
            r.set(x_off + x, y_off + y, 255);
        }
    }
    let origin = mm_to_px(geom.scale_origin_mm, eff).round() as usize;
    for inch in [0, geom.scale_inches] {
        let x = origin + (inch as f64 * eff).round() as usize;
        if x < sub_w {
            for y in rows.clone() {
                r.set(x_off + x, y_off + y, 0);
            }
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

fn blur(r: &mut GrayRaster, sigma: f64) {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (r.width as i64, r.height as i64);
    let src: Vec<f32> = r.pixels.iter().map(|&v| v as f32).collect();
    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let xx = (x + i as i64 - radius).clamp(0, w - 1);
                acc += *k * src[(y * w + xx) as usize] as f64;
            }
            tmp[(y * w + x) as usize] = acc as f32;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let yy = (y + i as i64 - radius).clamp(0, h - 1);
                acc += *k * tmp[(yy * w + x) as usize] as f64;
            }
            r.pixels[(y * w + x) as usize] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
}

pub fn apply_distortions(r: &mut GrayRaster, d: &Distortions) -> Result<(), QcError> {
    if !(d.blur_radius_px.is_finite() && d.blur_radius_px >= 0.0) {
        return Err(QcError::Domain("blur_radius_px must be non-negative".into()));
    }
    if !(d.noise_sigma.is_finite() && d.noise_sigma >= 0.0) {
        return Err(QcError::Domain("noise_sigma must be non-negative".into()));
    }
    if d.blur_radius_px > 0.0 {
        blur(r, d.blur_radius_px);
    }
    if d.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
        let normal = Normal::new(0.0, d.noise_sigma).expect("checked sigma");
        for p in r.pixels.iter_mut() {
            *p = (*p as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(())
}

/// A flatbed scan: dark lid area with a light print, optionally with the
/// calibration strip along the top edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanLayout {
    pub area_mm: [f64; 2],
    pub print_in: [f64; 2],
    /// Top-left of the print in mm; centred when absent.
    pub print_origin_mm: Option<[f64; 2]>,
    pub background: u8,
    pub print_tone: u8,
    pub include_target: bool,
}

impl Default for ScanLayout {
    fn default() -> Self {
        Self {
            area_mm: [340.0, 315.0],
            print_in: [9.0, 9.0],
            print_origin_mm: None,
            background: 16,
            print_tone: 230,
            include_target: false,
        }
    }
}

impl ScanLayout {
    /// Where the print lands in the raster, in pixels.
    pub fn print_box(&self, ppi: u32) -> PixelBox {
        let ppi_f = ppi as f64;
        let w_mm = self.print_in[0] * MM_PER_INCH;
        let h_mm = self.print_in[1] * MM_PER_INCH;
        let [ox, oy] = self
            .print_origin_mm
            .unwrap_or([(self.area_mm[0] - w_mm) / 2.0, (self.area_mm[1] - h_mm) / 2.0]);
        PixelBox {
            x: mm_to_px(ox, ppi_f).round() as usize,
            y: mm_to_px(oy, ppi_f).round() as usize,
            width: (self.print_in[0] * ppi_f).round() as usize,
            height: (self.print_in[1] * ppi_f).round() as usize,
        }
    }
}

pub fn render_scan(
    layout: &ScanLayout,
    geom: &CalibrationGeometry,
    ppi: u32,
    distortions: &Distortions,
) -> Result<GrayRaster, QcError> {
    if ppi == 0 {
        return Err(QcError::Domain("ppi must be positive".into()));
    }
    let ppi_f = ppi as f64;
    let width = mm_to_px(layout.area_mm[0], ppi_f).round() as usize;
    let height = mm_to_px(layout.area_mm[1], ppi_f).round() as usize;
    check_size(width, height)?;
    let b = layout.print_box(ppi);
    if b.x + b.width > width || b.y + b.height > height {
        return Err(QcError::Domain(format!(
            "print box {b:?} does not fit the {width}x{height} scan area"
        )));
    }
    let mut r = GrayRaster::filled(width, height, ppi, layout.background)?;
    for y in b.y..b.y + b.height {
        r.pixels[y * width + b.x..y * width + b.x + b.width].fill(layout.print_tone);
    }
    if layout.include_target {
        geom.validate()?;
        let tw = mm_to_px(geom.width_mm, ppi_f).ceil() as usize;
        let th = mm_to_px(geom.height_mm, ppi_f).ceil() as usize;
        if tw > width || th > b.y {
            return Err(QcError::Domain("calibration strip does not fit above the print".into()));
        }
        for y in 0..th {
            r.pixels[y * width..y * width + tw].fill(255);
        }
        draw_target(&mut r, geom, ppi_f, 0, 0);
    }
    apply_distortions(&mut r, distortions)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_valid() {
        let g = CalibrationGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.groups.len(), 34);
        assert_eq!(g.groups[0].line_width_um, 500.0);
        assert!(g.groups.last().unwrap().line_width_um >= 10.0);
    }

    #[test]
    fn wedge_levels_span_full_range() {
        let levels: Vec<u8> = (0..21).map(|k| wedge_level(k, 21)).collect();
        assert_eq!(levels[0], 0);
        assert_eq!(levels[20], 255);
        assert_eq!(levels[1], 13);
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn geometry_checks() {
        let mut g = CalibrationGeometry::default();
        g.wedge_segments = 20;
        assert!(g.validate().is_err());
        let mut g = CalibrationGeometry::default();
        g.width_mm = 150.0;
        assert!(g.validate().is_err());
        let mut g = CalibrationGeometry::default();
        g.groups.swap(0, 1);
        assert!(g.validate().is_err());
    }

    #[test]
    fn raster_size_follows_ppi() {
        let r = render_target(&CalibrationGeometry::default(), 300, &Distortions::default()).unwrap();
        assert_eq!(r.width, 2953);
        assert_eq!(r.height, 296);
        assert_eq!(r.ppi, 300);
    }

    #[test]
    fn scan_print_box() {
        let b = ScanLayout::default().print_box(1200);
        assert_eq!((b.width, b.height), (10_800, 10_800));
        assert_eq!(b.x, mm_to_px((340.0 - 228.6) / 2.0, 1200.0).round() as usize);
    }
}
