//! Shared electromagnetic plumbing: radio constants, decibel conversions,
//! angular grids with solid-angle quadrature, and aperture field lattices.
//!
//! Conventions used by the whole crate:
//! * Boresight is +z. `theta` is the signed angle off boresight in degrees,
//!   `phi` the azimuth in degrees. A direction unit vector is
//!   `(sin(theta)cos(phi), sin(theta)sin(phi), cos(theta))`, so a negative
//!   `theta` lands at azimuth `phi + 180`. A cut at fixed `phi` with signed
//!   `theta` therefore shows both half-planes of that great circle, which is
//!   how measured pattern cuts are usually plotted.
//! * SI units internally (meters, hertz, watts); decibels only at API edges.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

// ── decibel helpers ─────────────────────────────────────────────────────────

/// 10*log10(x). Power ratios only; callers square field quantities first.
#[inline]
pub fn db_from_linear(x: f64) -> f64 {
    10.0 * x.log10()
}

#[inline]
pub fn linear_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn dbm_from_watts(w: f64) -> f64 {
    db_from_linear(w * 1e3)
}

#[inline]
pub fn watts_from_dbm(dbm: f64) -> f64 {
    linear_from_db(dbm) * 1e-3
}

// ── radio constants ─────────────────────────────────────────────────────────

/// Carrier-derived constants. The electrical wavelength is always computed
/// from the carrier; the 10 mm feed pitch used by mechanical layout rules is
/// a separate dimension and lives with the array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    pub frequency_hz: f64,
    pub wavelength_m: f64,
    pub wavenumber_rad_m: f64,
}

impl RadioConstants {
    pub fn new(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::NonPositive { name: "frequency_hz", value: frequency_hz });
        }
        let wavelength_m = SPEED_OF_LIGHT_M_S / frequency_hz;
        Ok(Self { frequency_hz, wavelength_m, wavenumber_rad_m: 2.0 * std::f64::consts::PI / wavelength_m })
    }

    /// The 28 GHz operating point used by every shipped preset.
    pub fn ka_band_28ghz() -> Self {
        Self::new(28.0e9).expect("28 GHz is a valid carrier")
    }
}

// ── directions ──────────────────────────────────────────────────────────────

/// Direction cosines (u, v) = (sin t cos p, sin t sin p) for signed theta.
#[inline]
pub fn direction_cosines(theta_deg: f64, phi_deg: f64) -> (f64, f64) {
    let t = theta_deg.to_radians();
    let p = phi_deg.to_radians();
    (t.sin() * p.cos(), t.sin() * p.sin())
}

/// Signed projection of a direction onto a principal plane: `Horizontal`
/// returns u (x component), `Vertical` returns v (y component), in degrees
/// of arc via asin. This is the scalar "steering angle" used for cuts.
#[inline]
pub fn in_plane_angle_deg(theta_deg: f64, phi_deg: f64, plane: CutPlane) -> f64 {
    let (u, v) = direction_cosines(theta_deg, phi_deg);
    match plane {
        CutPlane::Horizontal => u.asin().to_degrees(),
        CutPlane::Vertical => v.asin().to_degrees(),
    }
}

/// Principal pattern cut. `Horizontal` is the x-z great circle (phi = 0 with
/// signed theta); `Vertical` is the y-z great circle (phi = 90 with signed
/// theta), the plane used for the published measured cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutPlane {
    Horizontal,
    Vertical,
}

impl CutPlane {
    pub fn azimuth_deg(self) -> f64 {
        match self {
            CutPlane::Horizontal => 0.0,
            CutPlane::Vertical => 90.0,
        }
    }
}

// ── angular grid ────────────────────────────────────────────────────────────

/// Product grid of signed theta and azimuth samples, both in degrees and
/// strictly increasing. Pattern vectors are stored theta-major:
/// `index = ti * n_phi + pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    theta_deg: Vec<f64>,
    phi_deg: Vec<f64>,
}

impl AngularGrid {
    pub fn new(theta_deg: Vec<f64>, phi_deg: Vec<f64>) -> Result<Self> {
        if theta_deg.is_empty() || phi_deg.is_empty() {
            return Err(Error::BadGrid("empty axis".into()));
        }
        if !strictly_increasing(&theta_deg) || !strictly_increasing(&phi_deg) {
            return Err(Error::BadGrid("axes must be strictly increasing".into()));
        }
        if theta_deg[0] < -90.0 || *theta_deg.last().unwrap() > 90.0 {
            return Err(Error::BadGrid("theta outside [-90, 90]".into()));
        }
        if phi_deg[0] < 0.0 || *phi_deg.last().unwrap() >= 360.0 {
            return Err(Error::BadGrid("phi outside [0, 360)".into()));
        }
        Ok(Self { theta_deg, phi_deg })
    }

    /// Full-sphere grid at `resolution_deg` (<= 1 degree): signed theta over
    /// [-90, 90], azimuth over [0, 360). With signed theta every physical
    /// direction appears twice (at phi and phi + 180), so the solid-angle
    /// weights sum to 4 pi and `cover_factor` reports 2.
    pub fn full_sphere(resolution_deg: f64) -> Result<Self> {
        if !(resolution_deg > 0.0 && resolution_deg <= 1.0) {
            return Err(Error::BadGrid(format!("resolution {resolution_deg} outside (0, 1] deg")));
        }
        let theta = linspace_step(-90.0, 90.0, resolution_deg);
        let n_phi = (360.0 / resolution_deg).round() as usize;
        let phi = (0..n_phi).map(|i| i as f64 * resolution_deg).collect();
        Self::new(theta, phi)
    }

    /// Single great-circle cut with signed theta over +-`half_span_deg`.
    pub fn principal_cut(plane: CutPlane, half_span_deg: f64, resolution_deg: f64) -> Result<Self> {
        if !(resolution_deg > 0.0 && resolution_deg <= 1.0) {
            return Err(Error::BadGrid(format!("resolution {resolution_deg} outside (0, 1] deg")));
        }
        if !(half_span_deg > 0.0 && half_span_deg <= 90.0) {
            return Err(Error::BadGrid(format!("half span {half_span_deg} outside (0, 90] deg")));
        }
        let theta = linspace_step(-half_span_deg, half_span_deg, resolution_deg);
        Self::new(theta, vec![plane.azimuth_deg()])
    }

    pub fn theta_deg(&self) -> &[f64] {
        &self.theta_deg
    }

    pub fn phi_deg(&self) -> &[f64] {
        &self.phi_deg
    }

    pub fn n_theta(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_deg.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, ti: usize, pi: usize) -> usize {
        ti * self.n_phi() + pi
    }

    pub fn is_cut(&self) -> bool {
        self.n_phi() == 1
    }

    /// Solid-angle quadrature weights, theta-major, in steradians:
    /// sin|theta| dtheta dphi with trapezoid end corrections in theta and
    /// periodic wrap in phi when the azimuth axis spans the full circle.
    /// Requires at least two azimuth samples; a single cut has no area.
    pub fn solid_angle_weights(&self) -> Result<Vec<f64>> {
        if self.is_cut() {
            return Err(Error::BadGrid("a single-cut grid has no solid-angle measure".into()));
        }
        let dtheta = axis_intervals(&self.theta_deg, false);
        let dphi = axis_intervals(&self.phi_deg, self.phi_spans_circle());
        let mut w = Vec::with_capacity(self.len());
        for (ti, th) in self.theta_deg.iter().enumerate() {
            let s = th.to_radians().sin().abs() * dtheta[ti].to_radians();
            for dp in &dphi {
                w.push(s * dp.to_radians());
            }
        }
        Ok(w)
    }

    /// How many times the grid covers the hemisphere: sum(w) / (2 pi).
    /// The default full-sphere grid double-covers (factor 2).
    pub fn cover_factor(&self) -> Result<f64> {
        let w: f64 = self.solid_angle_weights()?.iter().sum();
        Ok(w / (2.0 * std::f64::consts::PI))
    }

    fn phi_spans_circle(&self) -> bool {
        let span = self.phi_deg.last().unwrap() - self.phi_deg[0];
        let step = if self.phi_deg.len() > 1 { self.phi_deg[1] - self.phi_deg[0] } else { 0.0 };
        (span + step - 360.0).abs() < 1e-9
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|p| p[1] > p[0]) && xs.iter().all(|x| x.is_finite())
}

fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Per-sample interval lengths for trapezoid quadrature on one axis.
fn axis_intervals(xs: &[f64], periodic: bool) -> Vec<f64> {
    let n = xs.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut d = vec![0.0; n];
    for i in 0..n {
        let left = if i == 0 {
            if periodic { xs[n - 1] - 360.0 } else { xs[0] }
        } else {
            xs[i - 1]
        };
        let right = if i == n - 1 {
            if periodic { xs[0] + 360.0 } else { xs[n - 1] }
        } else {
            xs[i + 1]
        };
        // interior: half the neighbor span; non-periodic endpoints fall out
        // as half intervals because left/right degenerate to the point itself
        d[i] = 0.5 * (right - left);
    }
    d
}

// ── aperture field ──────────────────────────────────────────────────────────

/// One cell of an aperture field lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureSample {
    pub x_m: f64,
    pub y_m: f64,
    pub amplitude: Complex64,
}

/// Complex field sampled on a square lattice over an aperture. Amplitudes are
/// per unit area with the convention that `sum |a|^2 * pitch^2` is the power
/// carried through the aperture (unit feed power => value in [0, 1]).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pitch_m: f64,
    samples: Vec<ApertureSample>,
}

impl ComplexField {
    pub fn new(pitch_m: f64, samples: Vec<ApertureSample>) -> Result<Self> {
        if !(pitch_m.is_finite() && pitch_m > 0.0) {
            return Err(Error::NonPositive { name: "pitch_m", value: pitch_m });
        }
        if samples.is_empty() {
            return Err(Error::BadGrid("aperture field needs at least one sample".into()));
        }
        Ok(Self { pitch_m, samples })
    }

    pub fn pitch_m(&self) -> f64 {
        self.pitch_m
    }

    pub fn cell_area_m2(&self) -> f64 {
        self.pitch_m * self.pitch_m
    }

    pub fn samples(&self) -> &[ApertureSample] {
        &self.samples
    }

    /// Power through the aperture plane (unit feed power convention).
    pub fn exit_power(&self) -> f64 {
        let a = self.cell_area_m2();
        self.samples.iter().map(|s| s.amplitude.norm_sqr() * a).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wavelength_and_wavenumber_at_28ghz() {
        let rc = RadioConstants::ka_band_28ghz();
        // independent recomputation
        let lambda = 299_792_458.0 / 28.0e9;
        assert!(close(rc.wavelength_m, lambda, 1e-15));
        assert!(close(rc.wavelength_m * 1e3, 10.707, 5e-3), "got {} mm", rc.wavelength_m * 1e3);
        // k * lambda == 2 pi identically; magnitude near the quoted ~586.6 rad/m
        assert!(close(rc.wavenumber_rad_m * rc.wavelength_m, std::f64::consts::TAU, 1e-12));
        assert!(rc.wavenumber_rad_m > 585.0 && rc.wavenumber_rad_m < 588.0, "k = {}", rc.wavenumber_rad_m);
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        assert!(RadioConstants::new(0.0).is_err());
        assert!(RadioConstants::new(-1.0).is_err());
        assert!(RadioConstants::new(f64::NAN).is_err());
    }

    #[test]
    fn decibel_round_trips() {
        assert!(close(db_from_linear(316.2278), 25.0, 1e-6));
        assert!(close(linear_from_db(3.0), 1.9952623, 1e-6));
        assert!(close(watts_from_dbm(30.0), 1.0, 1e-12));
        assert!(close(dbm_from_watts(1e-3), 0.0, 1e-12));
        for &x in &[1e-6, 0.5, 1.0, 42.0, 3.1e9] {
            assert!(close(linear_from_db(db_from_linear(x)), x, x * 1e-12));
        }
    }

    #[test]
    fn full_sphere_weights_sum_to_4pi() {
        let g = AngularGrid::full_sphere(1.0).unwrap();
        assert_eq!(g.n_theta(), 181);
        assert_eq!(g.n_phi(), 360);
        let total: f64 = g.solid_angle_weights().unwrap().iter().sum();
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!(
            (total - four_pi).abs() / four_pi < 1e-4,
            "sum(w) = {total}, expected {four_pi}"
        );
        assert!(close(g.cover_factor().unwrap(), 2.0, 2e-4));
    }

    #[test]
    fn direction_convention() {
        let (u, v) = direction_cosines(30.0, 90.0);
        assert!(close(u, 0.0, TOL));
        assert!(close(v, 0.5, TOL));
        // negative theta is the mirror through boresight
        let (u2, v2) = direction_cosines(-30.0, 90.0);
        assert!(close(u2, 0.0, TOL));
        assert!(close(v2, -0.5, TOL));
        assert!(close(in_plane_angle_deg(-30.0, 90.0, CutPlane::Vertical), -30.0, 1e-9));
        assert!(close(in_plane_angle_deg(10.0, 0.0, CutPlane::Horizontal), 10.0, 1e-9));
    }

    #[test]
    fn cut_grid_shape_and_guard() {
        let c = AngularGrid::principal_cut(CutPlane::Vertical, 90.0, 0.05).unwrap();
        assert_eq!(c.n_phi(), 1);
        assert_eq!(c.n_theta(), 3601);
        assert!(c.is_cut());
        assert!(c.solid_angle_weights().is_err(), "cuts carry no solid angle");
    }

    #[test]
    fn grid_validation() {
        assert!(AngularGrid::full_sphere(2.0).is_err(), "default resolution must stay <= 1 deg");
        assert!(AngularGrid::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(AngularGrid::new(vec![0.0], vec![360.0]).is_err());
        assert!(AngularGrid::new(vec![-91.0], vec![0.0]).is_err());
    }

    #[test]
    fn exit_power_of_unit_cell() {
        let f = ComplexField::new(
            0.5,
            vec![ApertureSample { x_m: 0.0, y_m: 0.0, amplitude: Complex64::new(2.0, 0.0) }],
        )
        .unwrap();
        assert!(close(f.exit_power(), 1.0, 1e-12)); // |2|^2 * 0.25
    }
}
