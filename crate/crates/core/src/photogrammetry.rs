//! Optical and sampling arithmetic for aerial contact prints.
//!
//! Lengths are carried as [`Length`] (canonical millimeters) so that callers
//! can mix inches, feet, meters and micrometers the way survey metadata does.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MM_PER_INCH: f64 = 25.4;
pub const MM_PER_FOOT: f64 = 304.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotogrammetryError {
    #[error("photogrammetry: {quantity} must be strictly positive and finite, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
}

fn positive(quantity: &'static str, value: f64) -> Result<f64, PhotogrammetryError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(PhotogrammetryError::NonPositive { quantity, value })
    }
}

/// A physical length, stored in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Length {
    mm: f64,
}

impl Length {
    pub const fn from_mm(mm: f64) -> Self {
        Self { mm }
    }
    pub fn from_um(um: f64) -> Self {
        Self { mm: um / 1000.0 }
    }
    pub fn from_m(m: f64) -> Self {
        Self { mm: m * 1000.0 }
    }
    pub fn from_inches(inches: f64) -> Self {
        Self { mm: inches * MM_PER_INCH }
    }
    pub fn from_feet(feet: f64) -> Self {
        Self { mm: feet * MM_PER_FOOT }
    }

    pub fn mm(self) -> f64 {
        self.mm
    }
    pub fn um(self) -> f64 {
        self.mm * 1000.0
    }
    pub fn m(self) -> f64 {
        self.mm / 1000.0
    }
    pub fn inches(self) -> f64 {
        self.mm / MM_PER_INCH
    }
}

/// Camera focal length `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalLength(Length);

impl FocalLength {
    pub fn new(length: Length) -> Result<Self, PhotogrammetryError> {
        positive("focal length", length.mm())?;
        Ok(Self(length))
    }
    pub fn length(self) -> Length {
        self.0
    }
}

/// Flying altitude `H` above ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlyingAltitude(Length);

impl FlyingAltitude {
    pub fn new(length: Length) -> Result<Self, PhotogrammetryError> {
        positive("flying altitude", length.mm())?;
        Ok(Self(length))
    }
    pub fn length(self) -> Length {
        self.0
    }
}

/// Map scale, always normalized to `1:denominator`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScaleRatio {
    denominator: f64,
}

impl ScaleRatio {
    pub fn new(denominator: f64) -> Result<Self, PhotogrammetryError> {
        Ok(Self {
            denominator: positive("scale denominator", denominator)?,
        })
    }
    pub fn denominator(self) -> f64 {
        self.denominator
    }
}

impl fmt::Display for ScaleRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1:{}", self.denominator.round() as u64)
    }
}

/// Print resolution in line pairs per millimeter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LinePairResolution(f64);

impl LinePairResolution {
    pub fn new(lp_per_mm: f64) -> Result<Self, PhotogrammetryError> {
        Ok(Self(positive("line-pair resolution", lp_per_mm)?))
    }
    pub fn lp_per_mm(self) -> f64 {
        self.0
    }
}

/// Edge length of one scanner sample.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PixelPitch(Length);

impl PixelPitch {
    pub fn new(length: Length) -> Result<Self, PhotogrammetryError> {
        positive("pixel pitch", length.mm())?;
        Ok(Self(length))
    }
    pub fn um(self) -> f64 {
        self.0.um()
    }
    pub fn length(self) -> Length {
        self.0
    }
}

/// Scale from focal length and altitude, `1:(H/f)`.
///
/// Altitudes recorded in sortie metadata are above sea level, so the
/// denominator this returns is an upper bound on the true ground scale.
pub fn scale_from_focal_and_altitude(f: FocalLength, h: FlyingAltitude) -> ScaleRatio {
    ScaleRatio {
        denominator: h.length().mm() / f.length().mm(),
    }
}

/// Width of one line of a line pair: `1/(2R)`.
pub fn smallest_resolvable_feature(r: LinePairResolution) -> Length {
    Length::from_mm(1.0 / (2.0 * r.lp_per_mm()))
}

/// Ground resolved distance: smallest print feature times the scale denominator.
pub fn ground_resolved_distance(r: LinePairResolution, s: ScaleRatio) -> Length {
    Length::from_mm(smallest_resolvable_feature(r).mm() * s.denominator())
}

/// Closed band of scanning pixel sizes `[1/(2√2 R), 1/(2R)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelRange {
    pub min: PixelPitch,
    pub max: PixelPitch,
}

pub fn optimal_pixel_range(r: LinePairResolution) -> PixelRange {
    let max = 1.0 / (2.0 * r.lp_per_mm());
    let min = max / std::f64::consts::SQRT_2;
    PixelRange {
        min: PixelPitch(Length::from_mm(min)),
        max: PixelPitch(Length::from_mm(max)),
    }
}

pub fn pixel_pitch_from_ppi(ppi: f64) -> Result<PixelPitch, PhotogrammetryError> {
    let ppi = positive("ppi", ppi)?;
    Ok(PixelPitch(Length::from_mm(MM_PER_INCH / ppi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingVerdict {
    /// Pixels are finer than the optimal band requires.
    Oversampled,
    WithinOptimalBand,
    /// Pixels are coarser than the optimal band allows.
    Undersampled,
}

const EDGE_RELATIVE_SLACK: f64 = 1e-12;

pub fn sampling_adequacy(
    ppi: f64,
    r: LinePairResolution,
) -> Result<SamplingVerdict, PhotogrammetryError> {
    let pitch = pixel_pitch_from_ppi(ppi)?.length().mm();
    let band = optimal_pixel_range(r);
    // Edges are inclusive; allow for the last-ulp differences between
    // 25.4/ppi and 1/(2R) when they are mathematically equal.
    let slack = pitch * EDGE_RELATIVE_SLACK;
    Ok(if pitch < band.min.length().mm() - slack {
        SamplingVerdict::Oversampled
    } else if pitch > band.max.length().mm() + slack {
        SamplingVerdict::Undersampled
    } else {
        SamplingVerdict::WithinOptimalBand
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByteConvention {
    /// 1 TB = 10^12 bytes.
    #[default]
    Decimal,
    /// 1 TiB = 2^40 bytes.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageEstimate {
    pub bytes: u128,
    pub convention: ByteConvention,
}

impl StorageEstimate {
    pub fn terabytes(&self) -> f64 {
        match self.convention {
            ByteConvention::Decimal => self.bytes as f64 / 1e12,
            ByteConvention::Binary => self.bytes as f64 / (1u64 << 40) as f64,
        }
    }
}

pub fn storage_estimate(
    n_images: u64,
    bytes_per_image: u64,
    convention: ByteConvention,
) -> StorageEstimate {
    StorageEstimate {
        bytes: n_images as u128 * bytes_per_image as u128,
        convention,
    }
}

/// Rounds to `digits` significant figures for display only.
pub fn round_sig(value: f64, digits: u32) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let magnitude = value.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits as i32 - 1 - magnitude);
    (value * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(r: f64) -> LinePairResolution {
        LinePairResolution::new(r).unwrap()
    }

    #[test]
    fn scale_from_imperial_metadata() {
        let f = FocalLength::new(Length::from_inches(6.0)).unwrap();
        let h = FlyingAltitude::new(Length::from_feet(5000.0)).unwrap();
        let s = scale_from_focal_and_altitude(f, h);
        assert!((s.denominator() - 10_000.0).abs() < 1e-9);
        assert_eq!(s.to_string(), "1:10000");
    }

    #[test]
    fn scale_unit_identity_and_median_altitude() {
        let s = scale_from_focal_and_altitude(
            FocalLength::new(Length::from_mm(1.0)).unwrap(),
            FlyingAltitude::new(Length::from_m(1.0)).unwrap(),
        );
        assert!((s.denominator() - 1000.0).abs() < 1e-12);

        let s = scale_from_focal_and_altitude(
            FocalLength::new(Length::from_mm(152.4)).unwrap(),
            FlyingAltitude::new(Length::from_m(6262.0)).unwrap(),
        );
        assert_eq!(s.denominator().round(), 41_089.0);
    }

    #[test]
    fn non_positive_inputs_are_rejected() {
        assert!(FocalLength::new(Length::from_mm(0.0)).is_err());
        assert!(FlyingAltitude::new(Length::from_m(-3.0)).is_err());
        assert!(LinePairResolution::new(0.0).is_err());
        assert!(LinePairResolution::new(f64::NAN).is_err());
        assert!(ScaleRatio::new(-1.0).is_err());
        assert!(pixel_pitch_from_ppi(0.0).is_err());
        assert!(sampling_adequacy(-1.0, lp(10.0)).is_err());
    }

    #[test]
    fn smallest_feature_examples() {
        assert!((smallest_resolvable_feature(lp(10.0)).um() - 50.0).abs() < 1e-9);
        let f27 = smallest_resolvable_feature(lp(27.0)).um();
        assert!((f27 - 18.518_518).abs() < 1e-5);
        assert!((smallest_resolvable_feature(lp(0.5)).um() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn ground_resolved_distance_examples() {
        let s = ScaleRatio::new(42_579.0).unwrap();
        let grd10 = ground_resolved_distance(lp(10.0), s).m();
        let grd27 = ground_resolved_distance(lp(27.0), s).m();
        assert!((grd10 - 2.128_95).abs() < 1e-9);
        assert!((grd27 - 0.788_5).abs() < 1e-4);
        assert_eq!(round_sig(grd10, 2), 2.1);
        assert_eq!(round_sig(grd27, 1), 0.8);
        let unit = ground_resolved_distance(lp(10.0), ScaleRatio::new(1.0).unwrap());
        assert!((unit.m() - 5e-5).abs() < 1e-15);
    }

    #[test]
    fn pixel_band_examples() {
        let r27 = optimal_pixel_range(lp(27.0));
        assert_eq!(round_sig(r27.min.um(), 3), 13.1);
        assert_eq!(round_sig(r27.max.um(), 3), 18.5);
        let r10 = optimal_pixel_range(lp(10.0));
        assert_eq!(round_sig(r10.min.um(), 3), 35.4);
        assert!((r10.max.um() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn ppi_to_pitch() {
        assert!((pixel_pitch_from_ppi(1200.0).unwrap().um() - 21.166_666).abs() < 1e-5);
        assert!((pixel_pitch_from_ppi(25_400.0).unwrap().um() - 1.0).abs() < 1e-12);
        assert_eq!(round_sig(pixel_pitch_from_ppi(600.0).unwrap().um(), 3), 42.3);
    }

    #[test]
    fn adequacy_verdicts() {
        assert_eq!(
            sampling_adequacy(1200.0, lp(10.0)).unwrap(),
            SamplingVerdict::Oversampled
        );
        assert_eq!(
            sampling_adequacy(1200.0, lp(27.0)).unwrap(),
            SamplingVerdict::Undersampled
        );
        // 1/(2R) = 50 um exactly at 508 ppi for R = 10.
        assert_eq!(
            sampling_adequacy(508.0, lp(10.0)).unwrap(),
            SamplingVerdict::WithinOptimalBand
        );
        assert_eq!(
            sampling_adequacy(600.0, lp(10.0)).unwrap(),
            SamplingVerdict::WithinOptimalBand
        );
    }

    #[test]
    fn storage_examples() {
        let archive = storage_estimate(1_700_000, 250_000_000, ByteConvention::Decimal);
        assert_eq!(archive.bytes, 425_000_000_000_000);
        assert_eq!(archive.terabytes(), 425.0);
        assert_eq!(storage_estimate(0, 250_000_000, ByteConvention::Binary).terabytes(), 0.0);
        assert_eq!(
            storage_estimate(8_000, 250_000_000, ByteConvention::Decimal).terabytes(),
            2.0
        );
        let binary = storage_estimate(1 << 20, 1 << 20, ByteConvention::Binary);
        assert_eq!(binary.terabytes(), 1.0);
    }

    #[test]
    fn sig_fig_rounding() {
        assert_eq!(round_sig(2.128_95, 3), 2.13);
        assert_eq!(round_sig(41_089.4, 3), 41_100.0);
        assert_eq!(round_sig(0.0, 3), 0.0);
    }
}
