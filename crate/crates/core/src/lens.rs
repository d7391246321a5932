//! Hyperbolic dielectric lens as a thin phase screen.
//!
//! The lens is polyethylene (relative permittivity 2.40). Its convex face is
//! the hyperbola `r(theta) = (n - 1) f / (n cos(theta) - 1)`, which turns a
//! spherical wave from the focal point into a plane wave. The simulator does
//! not trace rays through the bulk; it applies the equivalent aperture phase
//! `phi(rho) = k (f - sqrt(f^2 + rho^2))` to the incident field at the exit
//! plane, which is exact for a feed at the focus and a good small-offset
//! approximation for feeds displaced across the focal plane.
//!
//! Lens diameters follow the fixed sizing rule: the feed block is a 55 mm
//! square (4 x 4 patches at 10 mm pitch plus margins) and each size step adds
//! an odd multiple of the 10 mm feed pitch of clearance on each side:
//! `D_i = 55 mm + 2 * 10 mm * (2i - 1)`, giving 75, 115 and 155 mm. The
//! focal length is always `f = 1.2 D`.

use num_complex::Complex64;

use crate::em::{ApertureSample, ComplexField, RadioConstants};
use crate::error::{Error, Result};

/// Polyethylene, as used for all lenses.
pub const RELATIVE_PERMITTIVITY: f64 = 2.40;

/// f/D ratio shared by every lens size.
pub const FOCAL_RATIO: f64 = 1.2;

/// Feed lattice pitch, also the mechanical step of the sizing rule. This is
/// a layout dimension, not the electrical wavelength (10.71 mm at 28 GHz).
pub const FEED_PITCH_M: f64 = 0.010;

/// Side of the 4 x 4 feed block the sizing rule clears.
pub const FEED_BLOCK_SIDE_M: f64 = 0.055;

/// Fixed-beam unit lens: largest circle on the 50 mm cube face. With the
/// shared focal ratio the focus lands 60 mm deep, the cube height.
pub const UNIT_CUBE_LENS_DIAMETER_M: f64 = 0.050;

#[derive(Debug, Clone, PartialEq)]
pub struct LensSpec {
    pub diameter_m: f64,
    pub focal_length_m: f64,
    pub refractive_index: f64,
    /// 1..=3 for the steerable-array lens family, None for the unit-cube lens.
    pub size_index: Option<u32>,
}

impl LensSpec {
    pub fn new(diameter_m: f64, focal_length_m: f64, epsilon_r: f64) -> Result<Self> {
        for (name, value) in [
            ("diameter_m", diameter_m),
            ("focal_length_m", focal_length_m),
            ("epsilon_r", epsilon_r),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositive { name, value });
            }
        }
        if epsilon_r <= 1.0 {
            return Err(Error::Config(format!(
                "epsilon_r = {epsilon_r} does not refract; a lens needs epsilon_r > 1"
            )));
        }
        Ok(Self { diameter_m, focal_length_m, refractive_index: epsilon_r.sqrt(), size_index: None })
    }

    /// Steerable-array lens of size index 1..=3 (75 / 115 / 155 mm).
    pub fn sized(size_index: u32) -> Result<Self> {
        if !(1..=3).contains(&size_index) {
            return Err(Error::LensSizeIndex(size_index));
        }
        // whole-millimetre arithmetic keeps the advertised sizes exact
        let pitch_mm = (FEED_PITCH_M * 1e3).round() as u32;
        let block_mm = (FEED_BLOCK_SIDE_M * 1e3).round() as u32;
        let diameter_mm = block_mm + 2 * pitch_mm * (2 * size_index - 1);
        let diameter_m = f64::from(diameter_mm) / 1e3;
        let mut lens = Self::new(diameter_m, FOCAL_RATIO * diameter_m, RELATIVE_PERMITTIVITY)?;
        lens.size_index = Some(size_index);
        Ok(lens)
    }

    /// Lens of the fixed-beam 50 x 50 x 60 mm unit cube.
    pub fn unit_cube() -> Self {
        Self::new(
            UNIT_CUBE_LENS_DIAMETER_M,
            FOCAL_RATIO * UNIT_CUBE_LENS_DIAMETER_M,
            RELATIVE_PERMITTIVITY,
        )
        .expect("unit cube lens constants are valid")
    }

    pub fn radius_m(&self) -> f64 {
        0.5 * self.diameter_m
    }

    /// Half opening angle of the hyperbola asymptote cone, acos(1/n).
    pub fn asymptote_half_angle_deg(&self) -> f64 {
        (1.0 / self.refractive_index).acos().to_degrees()
    }

    /// Distance from the focus to the convex face at polar angle `theta_deg`.
    /// Defined only inside the asymptote cone.
    pub fn hyperbola_surface_m(&self, theta_deg: f64) -> Result<f64> {
        let n = self.refractive_index;
        let denom = n * theta_deg.to_radians().cos() - 1.0;
        if denom <= 0.0 {
            return Err(Error::OutsideAsymptote {
                theta_deg,
                limit_deg: self.asymptote_half_angle_deg(),
            });
        }
        Ok((n - 1.0) * self.focal_length_m / denom)
    }

    /// Collimating phase of the screen at radial distance `rho_m` from the
    /// lens axis: `k (f - sqrt(f^2 + rho^2))`. Zero on axis, strictly
    /// decreasing outward; it cancels the spherical phase accumulated from
    /// the focus so the exit phase is flat.
    pub fn collimating_phase_rad(&self, wavenumber_rad_m: f64, rho_m: f64) -> Result<f64> {
        if !(0.0..=self.radius_m() + 1e-12).contains(&rho_m) {
            return Err(Error::OutsideAperture { rho_m, max_m: self.radius_m() });
        }
        let f = self.focal_length_m;
        Ok(wavenumber_rad_m * (f - (f * f + rho_m * rho_m).sqrt()))
    }
}

/// Largest aperture lattice pitch that keeps the discrete far-field sum
/// alias-free over all visible angles.
pub fn max_aperture_pitch_m(rc: &RadioConstants) -> f64 {
    rc.wavelength_m / 4.0
}

/// Exit field of a lens fed from the focal plane, plus power bookkeeping.
#[derive(Debug, Clone)]
pub struct FeedField {
    pub field: ComplexField,
    /// Fraction of the (unit) feed power that passes through the aperture.
    /// The complement is spillover past the lens rim.
    pub captured_fraction: f64,
    pub warnings: Vec<String>,
}

/// Propagate a feed at `(x, y)` on the focal plane to the lens exit plane.
///
/// `illumination_gain` is the feed's power gain toward a ray angle in
/// radians off the feed axis, normalized like a directivity so that
/// (1/4pi) * integral over the sphere is 1; spillover then falls out of the
/// bookkeeping instead of being estimated separately. Each lattice cell
/// receives `gain/(4 pi R^2) * cos(theta_ray)` of power per area and the
/// phase `k R` plus the collimating screen phase.
pub fn transform_feed_field(
    lens: &LensSpec,
    feed_offset_m: (f64, f64),
    illumination_gain: &dyn Fn(f64) -> f64,
    rc: &RadioConstants,
    pitch_m: f64,
) -> Result<FeedField> {
    let limit = max_aperture_pitch_m(rc);
    if !(pitch_m.is_finite() && pitch_m > 0.0) {
        return Err(Error::NonPositive { name: "pitch_m", value: pitch_m });
    }
    if pitch_m > limit {
        return Err(Error::UndersampledAperture { pitch_mm: pitch_m * 1e3, limit_mm: limit * 1e3 });
    }

    let (fx, fy) = feed_offset_m;
    let r_ap = lens.radius_m();
    let f = lens.focal_length_m;
    let k = rc.wavenumber_rad_m;
    let four_pi = 4.0 * std::f64::consts::PI;

    let mut warnings = Vec::new();
    let offset = (fx * fx + fy * fy).sqrt();
    if offset > r_ap {
        warnings.push(format!(
            "feed offset {:.1} mm is outside the focal region (lens radius {:.1} mm); \
             the phase-screen approximation degrades here",
            offset * 1e3,
            r_ap * 1e3
        ));
    }

    // Half-offset lattice: cell centers at (i + 0.5) * pitch, symmetric in x/y.
    let n = (r_ap / pitch_m).ceil() as i64;
    let mut samples = Vec::new();
    for iy in -n..n {
        let y = (iy as f64 + 0.5) * pitch_m;
        for ix in -n..n {
            let x = (ix as f64 + 0.5) * pitch_m;
            let rho2 = x * x + y * y;
            if rho2 > r_ap * r_ap {
                continue;
            }
            let dx = x - fx;
            let dy = y - fy;
            let r_ray = (dx * dx + dy * dy + f * f).sqrt();
            let cos_ray = f / r_ray;
            let gain = illumination_gain(cos_ray.clamp(-1.0, 1.0).acos());
            let power_per_area = gain / (four_pi * r_ray * r_ray) * cos_ray;
            let phase = k * r_ray + lens.collimating_phase_rad(k, rho2.sqrt())?;
            samples.push(ApertureSample {
                x_m: x,
                y_m: y,
                amplitude: Complex64::from_polar(power_per_area.sqrt(), phase),
            });
        }
    }

    let field = ComplexField::new(pitch_m, samples)?;
    let captured_fraction = field.exit_power();
    if captured_fraction > 1.0 + 1e-9 {
        return Err(Error::ContractViolation(format!(
            "aperture captures {captured_fraction} of the feed power; a passive lens cannot exceed 1"
        )));
    }
    Ok(FeedField { field, captured_fraction, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc() -> RadioConstants {
        RadioConstants::ka_band_28ghz()
    }

    /// Uniform hemispheric illumination (gain 2 forward), for tests that
    /// want geometry without a feed taper.
    fn hemispheric(theta: f64) -> f64 {
        if theta <= std::f64::consts::FRAC_PI_2 {
            2.0
        } else {
            0.0
        }
    }

    #[test]
    fn sizing_rule_is_exact() {
        let expected_mm = [75.0, 115.0, 155.0];
        for (i, d_mm) in (1..=3).zip(expected_mm) {
            let lens = LensSpec::sized(i).unwrap();
            assert_eq!(lens.diameter_m * 1e3, d_mm);
            assert!((lens.focal_length_m - 1.2 * lens.diameter_m).abs() < 1e-15);
        }
        let d3 = LensSpec::sized(3).unwrap();
        assert!((d3.focal_length_m - 0.186).abs() < 1e-12, "f_3 = {}", d3.focal_length_m);
        assert!(LensSpec::sized(0).is_err());
        assert!(LensSpec::sized(4).is_err());
    }

    #[test]
    fn unit_cube_lens_matches_cube_depth() {
        let lens = LensSpec::unit_cube();
        assert_eq!(lens.diameter_m, 0.050);
        assert!((lens.focal_length_m - 0.060).abs() < 1e-15, "focus at the cube depth");
    }

    #[test]
    fn refractive_index_and_asymptote() {
        let lens = LensSpec::sized(3).unwrap();
        assert!((lens.refractive_index - 2.40f64.sqrt()).abs() < 1e-15);
        assert!((lens.refractive_index - 1.549).abs() < 5e-4);
        assert!((lens.asymptote_half_angle_deg() - 49.797).abs() < 0.01);
    }

    #[test]
    fn hyperbola_surface_values() {
        let lens = LensSpec::sized(3).unwrap();
        // on axis the surface passes through the focus distance exactly
        let r0 = lens.hyperbola_surface_m(0.0).unwrap();
        assert!((r0 - lens.focal_length_m).abs() < 1e-15);
        // direct formula evaluation as an independent oracle
        let n = 2.40f64.sqrt();
        let expected = (n - 1.0) * 0.186 / (n * 10f64.to_radians().cos() - 1.0);
        let r10 = lens.hyperbola_surface_m(10.0).unwrap();
        assert!((r10 - expected).abs() < 1e-12);
        assert!(r10 > r0 && r10 < 0.20, "r(10 deg) = {r10}");
        // monotone growth toward the asymptote, then the domain ends
        let r49 = lens.hyperbola_surface_m(49.0).unwrap();
        assert!(r49 > lens.hyperbola_surface_m(45.0).unwrap());
        assert!(lens.hyperbola_surface_m(49.9).is_err());
        assert!(lens.hyperbola_surface_m(60.0).is_err());
    }

    #[test]
    fn collimating_phase_shape_and_value() {
        let lens = LensSpec::sized(3).unwrap();
        let k = rc().wavenumber_rad_m;
        assert_eq!(lens.collimating_phase_rad(k, 0.0).unwrap(), 0.0);
        // strictly decreasing in rho
        let mut prev = 0.0;
        for i in 1..=10 {
            let rho = lens.radius_m() * i as f64 / 10.0;
            let phi = lens.collimating_phase_rad(k, rho).unwrap();
            assert!(phi < prev, "phi({rho}) = {phi} not below {prev}");
            prev = phi;
        }
        // rim value: k * (f - sqrt(f^2 + (D/2)^2)); the 24-10-26 triangle
        // makes the root exact: sqrt(0.186^2 + 0.0775^2) = 0.2015
        let rim = lens.collimating_phase_rad(k, 0.0775).unwrap();
        assert!((rim - k * (0.186 - 0.2015)).abs() < 1e-9);
        assert!((rim - (-9.096)).abs() < 0.02, "rim phase = {rim} rad");
        assert!(lens.collimating_phase_rad(k, 0.08).is_err(), "outside the aperture");
    }

    #[test]
    fn centered_feed_exits_with_flat_phase() {
        let lens = LensSpec::sized(1).unwrap();
        let out = transform_feed_field(&lens, (0.0, 0.0), &hemispheric, &rc(), 0.0025).unwrap();
        assert!(out.warnings.is_empty());
        let expected = rc().wavenumber_rad_m * lens.focal_length_m;
        for s in out.field.samples() {
            let err = (s.amplitude.arg() - wrap_to_pi(expected)).abs();
            assert!(err < 1e-9, "exit phase deviates by {err} rad");
        }
    }

    fn wrap_to_pi(x: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        let mut y = x % tau;
        if y > std::f64::consts::PI {
            y -= tau;
        } else if y < -std::f64::consts::PI {
            y += tau;
        }
        y
    }

    #[test]
    fn offset_feed_tilts_the_exit_phase() {
        let lens = LensSpec::sized(3).unwrap();
        let d = 0.005;
        let out = transform_feed_field(&lens, (d, 0.0), &hemispheric, &rc(), 0.0025).unwrap();
        // finite-difference slope of the exit phase near the axis vs the
        // ray-geometry prediction d(kR)/dx at x = 0: -k d / sqrt(d^2 + f^2)
        let f = lens.focal_length_m;
        let k = rc().wavenumber_rad_m;
        let predicted = -k * d / (d * d + f * f).sqrt();
        let pick = |x: f64, y: f64| {
            out.field
                .samples()
                .iter()
                .find(|s| (s.x_m - x).abs() < 1e-9 && (s.y_m - y).abs() < 1e-9)
                .expect("lattice sample")
        };
        let a = pick(-0.00125, 0.00125);
        let b = pick(0.00125, 0.00125);
        let slope = (b.amplitude / a.amplitude).arg() / 0.0025;
        assert!(
            ((slope - predicted) / predicted).abs() < 1e-3,
            "slope {slope} vs predicted {predicted}"
        );
        assert!(slope < 0.0, "positive feed offset must tilt the phase downward in x");
    }

    #[test]
    fn passivity_over_feed_positions() {
        let lens = LensSpec::sized(2).unwrap();
        for (fx, fy) in [(0.0, 0.0), (0.005, -0.005), (0.015, 0.015), (0.04, 0.0)] {
            let out = transform_feed_field(&lens, (fx, fy), &hemispheric, &rc(), 0.0025).unwrap();
            assert!(out.captured_fraction > 0.0 && out.captured_fraction <= 1.0);
        }
    }

    #[test]
    fn far_offset_feed_warns() {
        let lens = LensSpec::sized(1).unwrap();
        let out = transform_feed_field(&lens, (0.05, 0.0), &hemispheric, &rc(), 0.0025).unwrap();
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn coarse_lattice_is_rejected() {
        let lens = LensSpec::sized(1).unwrap();
        let err = transform_feed_field(&lens, (0.0, 0.0), &hemispheric, &rc(), 0.004);
        assert!(matches!(err, Err(Error::UndersampledAperture { .. })));
    }
}
