//! Feed arrays, port geometry, and element/array-factor models.
//!
//! Two antenna families share the code:
//! * `Steerable`: a line or grid of patches on the focal plane of one sized
//!   lens; driving a single port picks a beam direction. Without a lens the
//!   same feed block is the broad-beam baseline.
//! * `FixedBeam`: self-contained 50 x 50 x 60 mm unit cubes (a 2 x 2 patch
//!   block under a 50 mm lens) concatenated on a 50 mm grid for gain. The
//!   bare 2 x 2 patch block (no lens) is the matching baseline.
//!
//! Patches are modeled as cos^q power radiators over the forward hemisphere;
//! the feed illumination seen by a lens carries its own exponent because the
//! patch-in-assembly taper is a calibrated quantity, not the isolated
//! element's.

use serde::{Deserialize, Serialize};

pub use crate::lens::FEED_PITCH_M;
use crate::calibrate::defaults;
use crate::error::{Error, Result};
use crate::lens::LensSpec;

/// Square patch edge length. Only reported, never used electrically; the
/// cos^q exponent stands in for the element shape.
pub const PATCH_SIDE_M: f64 = 0.00305;

/// Center-to-center pitch of concatenated fixed-beam unit cubes.
pub const UNIT_CUBE_PITCH_M: f64 = 0.050;

/// Patch offsets of the 2 x 2 block inside one fixed-beam cube.
pub const CUBE_BLOCK_OFFSETS_M: [(f64, f64); 4] =
    [(-0.005, -0.005), (0.005, -0.005), (-0.005, 0.005), (0.005, 0.005)];

// ── element model ───────────────────────────────────────────────────────────

/// cos^q power element. Gain is normalized as a directivity: the integral of
/// `gain / 4 pi` over the sphere is exactly 1 (zero back hemisphere), so the
/// boresight value is 2 (q + 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchElement {
    pub exponent: f64,
}

impl PatchElement {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(Error::NonPositive { name: "element exponent", value: exponent });
        }
        Ok(Self { exponent })
    }

    pub fn calibrated_default() -> Self {
        Self { exponent: defaults::ELEMENT_EXPONENT }
    }

    /// Linear power gain toward `theta_rad` off the element axis.
    #[inline]
    pub fn gain(&self, theta_rad: f64) -> f64 {
        if theta_rad.abs() > std::f64::consts::FRAC_PI_2 {
            return 0.0;
        }
        2.0 * (self.exponent + 1.0) * theta_rad.cos().powf(self.exponent)
    }

    pub fn directivity_dbi(&self) -> f64 {
        crate::em::db_from_linear(2.0 * (self.exponent + 1.0))
    }
}

/// Same closed form for an arbitrary exponent; used for lens illumination.
#[inline]
pub fn cosine_power_gain(exponent: f64, theta_rad: f64) -> f64 {
    if theta_rad.abs() > std::f64::consts::FRAC_PI_2 {
        return 0.0;
    }
    2.0 * (exponent + 1.0) * theta_rad.cos().powf(exponent)
}

// ── array geometry ──────────────────────────────────────────────────────────

/// Port index assignment. Row-major from the (-x, -y) corner, 1-based:
/// port 1 sits at the most negative (x, y), indices walk +x first, then +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortNumbering {
    #[default]
    RowMajorFromCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedLayout {
    Line4,
    Grid4x4,
}

impl FeedLayout {
    pub fn port_count(self) -> u32 {
        match self {
            FeedLayout::Line4 => 4,
            FeedLayout::Grid4x4 => 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    /// Port-switched feed array, optionally behind a sized lens (1..=3).
    Steerable { layout: FeedLayout, lens_size: Option<u32> },
    /// Concatenated fixed-beam unit cubes; `with_lens: false` strips the
    /// lenses and leaves the bare patch blocks.
    FixedBeam { units_x: u32, units_y: u32, with_lens: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub kind: ArrayKind,
    pub element: PatchElement,
    /// cos^q exponent of the feed illumination a lens sees (calibrated).
    pub illumination_exponent: f64,
    /// Power efficiency scalar of a lens aperture (calibrated, <= 1).
    pub lens_efficiency: f64,
    pub numbering: PortNumbering,
}

impl ArrayConfig {
    fn base(kind: ArrayKind, illumination_exponent: f64, lens_efficiency: f64) -> Self {
        Self {
            kind,
            element: PatchElement::calibrated_default(),
            illumination_exponent,
            lens_efficiency,
            numbering: PortNumbering::default(),
        }
    }

    pub fn steerable_grid(lens_size: u32) -> Result<Self> {
        LensSpec::sized(lens_size)?;
        Ok(Self::base(
            ArrayKind::Steerable { layout: FeedLayout::Grid4x4, lens_size: Some(lens_size) },
            defaults::STEERABLE_ILLUMINATION_EXPONENT,
            defaults::STEERABLE_LENS_EFFICIENCY,
        ))
    }

    pub fn steerable_line(lens_size: u32) -> Result<Self> {
        LensSpec::sized(lens_size)?;
        Ok(Self::base(
            ArrayKind::Steerable { layout: FeedLayout::Line4, lens_size: Some(lens_size) },
            defaults::STEERABLE_ILLUMINATION_EXPONENT,
            defaults::STEERABLE_LENS_EFFICIENCY,
        ))
    }

    pub fn bare_grid() -> Self {
        Self::base(ArrayKind::Steerable { layout: FeedLayout::Grid4x4, lens_size: None }, 1.0, 1.0)
    }

    pub fn bare_line() -> Self {
        Self::base(ArrayKind::Steerable { layout: FeedLayout::Line4, lens_size: None }, 1.0, 1.0)
    }

    /// `nx` x `ny` fixed-beam unit cubes.
    pub fn fixed_beam(units_x: u32, units_y: u32) -> Result<Self> {
        if units_x == 0 || units_y == 0 {
            return Err(Error::Config("fixed-beam array needs at least one unit".into()));
        }
        Ok(Self::base(
            ArrayKind::FixedBeam { units_x, units_y, with_lens: true },
            defaults::FIXED_BEAM_ILLUMINATION_EXPONENT,
            defaults::FIXED_BEAM_LENS_EFFICIENCY,
        ))
    }

    /// Bare 2 x 2 patch block of a single cube (the lens removed).
    pub fn bare_cube_block() -> Self {
        Self::base(ArrayKind::FixedBeam { units_x: 1, units_y: 1, with_lens: false }, 1.0, 1.0)
    }

    pub fn lens(&self) -> Result<Option<LensSpec>> {
        match &self.kind {
            ArrayKind::Steerable { lens_size: Some(i), .. } => Ok(Some(LensSpec::sized(*i)?)),
            ArrayKind::Steerable { lens_size: None, .. } => Ok(None),
            ArrayKind::FixedBeam { with_lens: true, .. } => Ok(Some(LensSpec::unit_cube())),
            ArrayKind::FixedBeam { with_lens: false, .. } => Ok(None),
        }
    }

    pub fn port_count(&self) -> u32 {
        match &self.kind {
            ArrayKind::Steerable { layout, .. } => layout.port_count(),
            ArrayKind::FixedBeam { .. } => 1,
        }
    }

    /// Focal-plane position of a port's patch, meters.
    pub fn port_position_m(&self, port: u32) -> Result<(f64, f64)> {
        let count = self.port_count();
        if port < 1 || port > count {
            return Err(Error::UnknownPort { port, count });
        }
        let PortNumbering::RowMajorFromCorner = self.numbering;
        let idx = (port - 1) as f64;
        match &self.kind {
            ArrayKind::Steerable { layout: FeedLayout::Line4, .. } => {
                Ok(((idx - 1.5) * FEED_PITCH_M, 0.0))
            }
            ArrayKind::Steerable { layout: FeedLayout::Grid4x4, .. } => {
                let row = ((port - 1) / 4) as f64;
                let col = ((port - 1) % 4) as f64;
                Ok(((col - 1.5) * FEED_PITCH_M, (row - 1.5) * FEED_PITCH_M))
            }
            ArrayKind::FixedBeam { .. } => Ok((0.0, 0.0)),
        }
    }

    /// Centers of the concatenated units (single origin for 1 x 1).
    pub fn unit_centers_m(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ArrayKind::FixedBeam { units_x, units_y, .. } => {
                let nx = *units_x as i64;
                let ny = *units_y as i64;
                let mut out = Vec::with_capacity((nx * ny) as usize);
                for iy in 0..ny {
                    for ix in 0..nx {
                        out.push((
                            (ix as f64 - (nx as f64 - 1.0) / 2.0) * UNIT_CUBE_PITCH_M,
                            (iy as f64 - (ny as f64 - 1.0) / 2.0) * UNIT_CUBE_PITCH_M,
                        ));
                    }
                }
                out
            }
            ArrayKind::Steerable { .. } => vec![(0.0, 0.0)],
        }
    }

    /// Patch positions radiating coherently when the array has no lens.
    /// Steerable feeds drive one patch per port; a bare cube block drives
    /// its whole 2 x 2 block through one feed network.
    pub fn coherent_positions_m(&self, port: u32) -> Result<Vec<(f64, f64)>> {
        match &self.kind {
            ArrayKind::Steerable { .. } => Ok(vec![self.port_position_m(port)?]),
            ArrayKind::FixedBeam { .. } => {
                if port != 1 {
                    return Err(Error::UnknownPort { port, count: 1 });
                }
                let mut out = Vec::new();
                for (cx, cy) in self.unit_centers_m() {
                    for (px, py) in CUBE_BLOCK_OFFSETS_M {
                        out.push((cx + px, cy + py));
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ArrayKind::Steerable { layout, lens_size } => {
                let shape = match layout {
                    FeedLayout::Line4 => "1x4",
                    FeedLayout::Grid4x4 => "4x4",
                };
                match lens_size {
                    Some(i) => format!("steerable_{shape}_d{i}"),
                    None => format!("steerable_{shape}_no_lens"),
                }
            }
            ArrayKind::FixedBeam { units_x, units_y, with_lens } => {
                if *with_lens {
                    format!("fixed_{units_x}x{units_y}")
                } else {
                    format!("bare_block_{units_x}x{units_y}")
                }
            }
        }
    }
}

/// Power-normalized array factor at direction cosines (u, v):
/// `sum exp(-j k (u x + v y)) / sqrt(N)`, so |AF|^2 peaks at N broadside.
#[inline]
pub fn array_factor(
    positions_m: &[(f64, f64)],
    wavenumber_rad_m: f64,
    u: f64,
    v: f64,
) -> num_complex::Complex64 {
    let mut af = num_complex::Complex64::new(0.0, 0.0);
    for &(x, y) in positions_m {
        af += num_complex::Complex64::from_polar(1.0, -wavenumber_rad_m * (u * x + v * y));
    }
    af / (positions_m.len() as f64).sqrt()
}

/// Visible grating-lobe angles (degrees off broadside) of a lattice with the
/// given pitch, broadside-fed. Empty when the pitch is below one wavelength.
pub fn grating_lobe_angles_deg(pitch_m: f64, wavelength_m: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1.0;
    while m * wavelength_m / pitch_m < 1.0 {
        out.push((m * wavelength_m / pitch_m).asin().to_degrees());
        m += 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::RadioConstants;

    #[test]
    fn grid_port_map_row_major_from_corner() {
        let cfg = ArrayConfig::bare_grid();
        let mm = |p: u32| {
            let (x, y) = cfg.port_position_m(p).unwrap();
            (x * 1e3, y * 1e3)
        };
        assert_eq!(mm(1), (-15.0, -15.0));
        assert_eq!(mm(4), (15.0, -15.0));
        assert_eq!(mm(6), (-5.0, -5.0));
        assert_eq!(mm(11), (5.0, 5.0));
        assert_eq!(mm(16), (15.0, 15.0));
        // the diagonal ports lie on x == y
        for p in [1u32, 6, 11, 16] {
            let (x, y) = mm(p);
            assert_eq!(x, y);
        }
        // all 16 positions are distinct lattice nodes
        let mut seen: Vec<(i64, i64)> = (1..=16)
            .map(|p| {
                let (x, y) = mm(p);
                (x.round() as i64, y.round() as i64)
            })
            .collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn line_port_map() {
        let cfg = ArrayConfig::bare_line();
        let (x, y) = cfg.port_position_m(2).unwrap();
        assert_eq!((x * 1e3, y * 1e3), (-5.0, 0.0));
        assert!(cfg.port_position_m(0).is_err());
        assert!(cfg.port_position_m(5).is_err());
    }

    #[test]
    fn element_directivity_and_normalization() {
        let e = PatchElement::new(2.0).unwrap();
        assert!((e.directivity_dbi() - 7.7815).abs() < 1e-3);
        assert_eq!(e.gain(0.0), 6.0);
        assert_eq!(e.gain(1.8), 0.0, "zero behind the hemisphere");
        // (1/4pi) integral of gain over the sphere == 1 for any exponent:
        // closed form 2(q+1) * integral cos^q sin dtheta dphi / 4pi
        for q in [0.0, 1.0, 2.0, 7.5, 40.0] {
            let e = PatchElement::new(q).unwrap();
            let n = 20_000;
            let mut acc = 0.0;
            for i in 0..n {
                let th = (i as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2;
                acc += e.gain(th) * th.sin() * (std::f64::consts::FRAC_PI_2 / n as f64);
            }
            let fraction = acc * 2.0 * std::f64::consts::PI / (4.0 * std::f64::consts::PI);
            assert!((fraction - 1.0).abs() < 1e-3, "q = {q}: fraction = {fraction}");
        }
    }

    #[test]
    fn array_factor_peak_and_power() {
        let rc = RadioConstants::ka_band_28ghz();
        let cfg = ArrayConfig::bare_cube_block();
        let pos = cfg.coherent_positions_m(1).unwrap();
        assert_eq!(pos.len(), 4);
        let af0 = array_factor(&pos, rc.wavenumber_rad_m, 0.0, 0.0);
        assert!((af0.norm_sqr() - 4.0).abs() < 1e-12, "broadside |AF|^2 = N");
    }

    #[test]
    fn concatenated_unit_centers() {
        let cfg = ArrayConfig::fixed_beam(2, 2).unwrap();
        let c = cfg.unit_centers_m();
        assert_eq!(c.len(), 4);
        assert!(c.contains(&(-0.025, -0.025)) && c.contains(&(0.025, 0.025)));
        let line = ArrayConfig::fixed_beam(4, 1).unwrap().unit_centers_m();
        assert_eq!(line.len(), 4);
        assert!((line[0].0 + 0.075).abs() < 1e-12);
    }

    #[test]
    fn unit_cube_pitch_grates_at_28ghz() {
        let rc = RadioConstants::ka_band_28ghz();
        let lobes = grating_lobe_angles_deg(UNIT_CUBE_PITCH_M, rc.wavelength_m);
        assert!(!lobes.is_empty());
        assert!((lobes[0] - 12.37).abs() < 0.05, "first lobe at {}", lobes[0]);
        // sub-wavelength pitch stays clean
        assert!(grating_lobe_angles_deg(0.005, rc.wavelength_m).is_empty());
    }

    #[test]
    fn rejects_degenerate_configs() {
        assert!(ArrayConfig::fixed_beam(0, 2).is_err());
        assert!(ArrayConfig::steerable_grid(5).is_err());
        assert!(PatchElement::new(-1.0).is_err());
        assert!(PatchElement::new(f64::NAN).is_err());
    }
}
