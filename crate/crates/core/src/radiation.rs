//! Far-field radiation patterns and their metrics.
//!
//! Lens-equipped configurations radiate the discrete exit-aperture field:
//! `E(u, v) = sum a_i exp(-j k (u x_i + v y_i)) dA`. Bare configurations use
//! the closed-form element pattern times a power-normalized array factor.
//! Either way the pattern is self-normalized: gain is scaled so that the
//! solid-angle integral of the linear gain equals `4 pi` times the radiated
//! power fraction (spillover and lens efficiency already removed). That makes
//! energy bookkeeping exact by construction and keeps the point-aperture
//! limit sensible (a point source is hemispherically isotropic at 3.01 dBi).
//!
//! Normalization always integrates an internal 1 degree full-sphere
//! reference grid, so cuts and coarse display grids of the same engine share
//! one absolute scale. The only exception is `far_field` called with a
//! full-sphere grid, which normalizes on the caller's grid so that
//! grid-refinement convergence stays observable.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{array_factor, grating_lobe_angles_deg, ArrayConfig, ArrayKind, PatchElement, UNIT_CUBE_PITCH_M};
use crate::em::{
    db_from_linear, direction_cosines, AngularGrid, ApertureSample, ComplexField, CutPlane,
    RadioConstants,
};
use crate::error::{Error, Result};
use crate::lens::{max_aperture_pitch_m, transform_feed_field};

/// Gain floor (dBi) reported for directions with zero computed power.
pub const GAIN_FLOOR_DBI: f64 = -300.0;

/// Half-power threshold: 10 log10(2).
pub const HALF_POWER_DB: f64 = 3.010_299_956_639_812;

/// Aperture lattice pitch used for all lens exit fields; safely under the
/// anti-aliasing bound of lambda/4 = 2.68 mm at 28 GHz.
pub const DEFAULT_APERTURE_PITCH_M: f64 = 0.0025;

/// Resolution of the internal normalization reference grid.
pub const REFERENCE_RESOLUTION_DEG: f64 = 1.0;

// ── pattern container ───────────────────────────────────────────────────────

/// Gain samples over an angular grid plus the bookkeeping needed to interpret
/// them as absolute dBi.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    grid: AngularGrid,
    gain_dbi: Vec<f64>,
    radiated_fraction: f64,
    peak_gain_dbi: f64,
    peak_theta_deg: f64,
    peak_phi_deg: f64,
    label: String,
    port: Option<u32>,
    warnings: Vec<String>,
}

impl RadiationPattern {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    /// Gain values in dBi, theta-major (`grid.index`).
    pub fn gain_dbi(&self) -> &[f64] {
        &self.gain_dbi
    }

    pub fn gain_dbi_at(&self, ti: usize, pi: usize) -> f64 {
        self.gain_dbi[self.grid.index(ti, pi)]
    }

    /// Fraction of the feed power this pattern radiates (<= 1).
    pub fn radiated_fraction(&self) -> f64 {
        self.radiated_fraction
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        self.peak_gain_dbi
    }

    /// Peak direction; grid-resolution ties resolve toward boresight, then
    /// smaller azimuth.
    pub fn peak_direction_deg(&self) -> (f64, f64) {
        (self.peak_theta_deg, self.peak_phi_deg)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn port(&self) -> Option<u32> {
        self.port
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// (1/4pi) integral of linear gain over the sphere; equals the radiated
    /// fraction up to quadrature error. Errors on cut grids (no measure).
    pub fn integrated_fraction(&self) -> Result<f64> {
        let w = self.grid.solid_angle_weights()?;
        let cover = self.grid.cover_factor()?;
        let sum: f64 = self
            .gain_dbi
            .iter()
            .zip(&w)
            .map(|(g, w)| crate::em::linear_from_db(*g) * w)
            .sum();
        Ok(sum / cover / (4.0 * std::f64::consts::PI))
    }

    /// Full half-power width of a principal-cut pattern, degrees, with linear
    /// interpolation in dB between grid samples.
    pub fn hpbw_full_deg(&self) -> Result<f64> {
        if !self.grid.is_cut() {
            return Err(Error::BadGrid("half-power width needs a single-plane cut".into()));
        }
        hpbw_from_profile(self.grid.theta_deg(), &self.gain_dbi)
    }

    /// CSV export: `theta_deg,phi_deg,gain_dbi`, theta-major, bit-stable.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.gain_dbi.len() + 1));
        out.push_str("theta_deg,phi_deg,gain_dbi\n");
        for (ti, th) in self.grid.theta_deg().iter().enumerate() {
            for (pi, ph) in self.grid.phi_deg().iter().enumerate() {
                let g = self.gain_dbi[self.grid.index(ti, pi)];
                writeln!(out, "{th:.3},{ph:.3},{g:.6}").expect("string write");
            }
        }
        out
    }
}

/// Interpolated -3.01 dB full width around the global peak of a 1D profile.
pub(crate) fn hpbw_from_profile(axis_deg: &[f64], gain_dbi: &[f64]) -> Result<f64> {
    let mut pi = 0;
    for (i, g) in gain_dbi.iter().enumerate() {
        if *g > gain_dbi[pi] {
            pi = i;
        }
    }
    let threshold = gain_dbi[pi] - HALF_POWER_DB;
    let crossing = |inner: usize, outer: usize| -> f64 {
        let t = (threshold - gain_dbi[outer]) / (gain_dbi[inner] - gain_dbi[outer]);
        axis_deg[outer] + t * (axis_deg[inner] - axis_deg[outer])
    };
    let mut left = None;
    for i in (0..pi).rev() {
        if gain_dbi[i] <= threshold {
            left = Some(crossing(i + 1, i));
            break;
        }
    }
    let mut right = None;
    for i in pi + 1..gain_dbi.len() {
        if gain_dbi[i] <= threshold {
            right = Some(crossing(i - 1, i));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok(r - l),
        _ => Err(Error::UnboundedBeamwidth),
    }
}

// ── radiating sources ───────────────────────────────────────────────────────

/// What produces the raw (unnormalized) power at a direction.
#[derive(Debug, Clone)]
enum Radiator {
    Aperture { field: ComplexField, wavenumber_rad_m: f64 },
    ClosedForm { element: PatchElement, positions_m: Vec<(f64, f64)>, wavenumber_rad_m: f64 },
}

impl Radiator {
    fn raw_power(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let (u, v) = direction_cosines(theta_deg, phi_deg);
        match self {
            Radiator::Aperture { field, wavenumber_rad_m } => {
                let mut e = Complex64::new(0.0, 0.0);
                for s in field.samples() {
                    e += s.amplitude
                        * Complex64::from_polar(1.0, -wavenumber_rad_m * (u * s.x_m + v * s.y_m));
                }
                e.norm_sqr()
            }
            Radiator::ClosedForm { element, positions_m, wavenumber_rad_m } => {
                element.gain(theta_deg.to_radians().abs())
                    * array_factor(positions_m, *wavenumber_rad_m, u, v).norm_sqr()
            }
        }
    }
}

fn eval_grid(radiator: &Radiator, grid: &AngularGrid) -> Vec<f64> {
    let phis = grid.phi_deg();
    let rows: Vec<Vec<f64>> = grid
        .theta_deg()
        .par_iter()
        .map(|&th| phis.iter().map(|&ph| radiator.raw_power(th, ph)).collect())
        .collect();
    rows.into_iter().flatten().collect()
}

/// Hemisphere integral of raw power over a full-sphere grid (accounting for
/// the grid's double cover).
fn hemisphere_integral(grid: &AngularGrid, raw: &[f64]) -> Result<f64> {
    let w = grid.solid_angle_weights()?;
    let cover = grid.cover_factor()?;
    let s: f64 = raw.iter().zip(&w).map(|(p, w)| p * w).sum();
    Ok(s / cover)
}

// ── pattern engine ──────────────────────────────────────────────────────────

/// A normalized radiator: evaluates absolute gain at any direction and
/// materializes patterns on arbitrary grids with one consistent scale.
#[derive(Debug, Clone)]
pub struct PatternEngine {
    radiator: Radiator,
    norm_linear: f64,
    radiated_fraction: f64,
    label: String,
    port: Option<u32>,
    warnings: Vec<String>,
    reference: Option<Box<RadiationPattern>>,
}

impl PatternEngine {
    fn new(
        radiator: Radiator,
        radiated_fraction: f64,
        label: String,
        port: Option<u32>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        if !(radiated_fraction.is_finite() && radiated_fraction > 0.0) {
            return Err(Error::NonPositive {
                name: "radiated_fraction",
                value: radiated_fraction,
            });
        }
        if radiated_fraction > 1.0 + 1e-9 {
            return Err(Error::ContractViolation(format!(
                "radiated fraction {radiated_fraction} exceeds unity"
            )));
        }
        let grid = AngularGrid::full_sphere(REFERENCE_RESOLUTION_DEG)?;
        let raw = eval_grid(&radiator, &grid);
        let integral = hemisphere_integral(&grid, &raw)?;
        if !(integral.is_finite() && integral > 0.0) {
            return Err(Error::ContractViolation(
                "radiator carries no power over the forward hemisphere".into(),
            ));
        }
        let norm_linear = 4.0 * std::f64::consts::PI * radiated_fraction / integral;
        let mut engine = Self {
            radiator,
            norm_linear,
            radiated_fraction,
            label,
            port,
            warnings,
            reference: None,
        };
        engine.reference = Some(Box::new(engine.assemble(grid, raw)));
        Ok(engine)
    }

    fn assemble(&self, grid: AngularGrid, raw: Vec<f64>) -> RadiationPattern {
        let gain_dbi: Vec<f64> = raw
            .iter()
            .map(|p| {
                let g = p * self.norm_linear;
                if g > 0.0 {
                    db_from_linear(g).max(GAIN_FLOOR_DBI)
                } else {
                    GAIN_FLOOR_DBI
                }
            })
            .collect();
        let (peak_gain_dbi, peak_theta_deg, peak_phi_deg) = find_peak(&grid, &gain_dbi);
        RadiationPattern {
            grid,
            gain_dbi,
            radiated_fraction: self.radiated_fraction,
            peak_gain_dbi,
            peak_theta_deg,
            peak_phi_deg,
            label: self.label.clone(),
            port: self.port,
            warnings: self.warnings.clone(),
        }
    }

    /// Absolute gain (dBi) toward one direction.
    pub fn gain_dbi_at(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let g = self.radiator.raw_power(theta_deg, phi_deg) * self.norm_linear;
        if g > 0.0 {
            db_from_linear(g).max(GAIN_FLOOR_DBI)
        } else {
            GAIN_FLOOR_DBI
        }
    }

    /// The cached 1 degree full-sphere pattern.
    pub fn reference(&self) -> &RadiationPattern {
        self.reference.as_ref().expect("reference pattern built in constructor")
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        self.reference().peak_gain_dbi()
    }

    pub fn radiated_fraction(&self) -> f64 {
        self.radiated_fraction
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Materialize the pattern on an arbitrary grid (cuts included) using the
    /// engine's reference normalization.
    pub fn pattern_on(&self, grid: &AngularGrid) -> RadiationPattern {
        let raw = eval_grid(&self.radiator, grid);
        self.assemble(grid.clone(), raw)
    }

    /// Principal-plane cut at fine resolution.
    pub fn cut(&self, plane: CutPlane, half_span_deg: f64, resolution_deg: f64) -> Result<RadiationPattern> {
        let grid = AngularGrid::principal_cut(plane, half_span_deg, resolution_deg)?;
        Ok(self.pattern_on(&grid))
    }

    /// Peak, widths, and bookkeeping in one serializable bundle.
    pub fn summary(&self) -> Result<PatternSummary> {
        let reference = self.reference();
        let (peak_theta_deg, peak_phi_deg) = reference.peak_direction_deg();
        let vertical = self.cut(CutPlane::Vertical, 90.0, 0.05)?;
        let horizontal = self.cut(CutPlane::Horizontal, 90.0, 0.05)?;
        Ok(PatternSummary {
            label: self.label.clone(),
            port: self.port,
            peak_gain_dbi: reference.peak_gain_dbi(),
            peak_theta_deg,
            peak_phi_deg,
            radiated_fraction: self.radiated_fraction,
            hpbw_vertical_deg: vertical.hpbw_full_deg().ok(),
            hpbw_horizontal_deg: horizontal.hpbw_full_deg().ok(),
            warnings: self.warnings.clone(),
        })
    }
}

/// Peak search with deterministic tie-breaking: larger gain wins; exact ties
/// resolve toward smaller |theta|, then smaller phi, then smaller theta.
fn find_peak(grid: &AngularGrid, gain_dbi: &[f64]) -> (f64, f64, f64) {
    let mut best = f64::NEG_INFINITY;
    let mut best_dir = (0.0_f64, 0.0_f64);
    for (ti, th) in grid.theta_deg().iter().enumerate() {
        for (pi, ph) in grid.phi_deg().iter().enumerate() {
            let g = gain_dbi[grid.index(ti, pi)];
            let better = g > best
                || (g == best
                    && (th.abs(), *ph, *th) < (best_dir.0.abs(), best_dir.1, best_dir.0));
            if better {
                best = g;
                best_dir = (*th, *ph);
            }
        }
    }
    (best, best_dir.0, best_dir.1)
}

/// Flat summary of one port's pattern, ready for JSON export.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PatternSummary {
    pub label: String,
    pub port: Option<u32>,
    pub peak_gain_dbi: f64,
    pub peak_theta_deg: f64,
    pub peak_phi_deg: f64,
    pub radiated_fraction: f64,
    pub hpbw_vertical_deg: Option<f64>,
    pub hpbw_horizontal_deg: Option<f64>,
    pub warnings: Vec<String>,
}

// ── public construction paths ───────────────────────────────────────────────

/// Far field of a caller-supplied aperture field.
///
/// `radiated_fraction` is the share of feed power actually in the aperture
/// (1.0 for an ideal aperture). Full-sphere grids are normalized on
/// themselves; cuts borrow the internal 1 degree reference normalization.
pub fn far_field(
    field: &ComplexField,
    rc: &RadioConstants,
    grid: &AngularGrid,
    radiated_fraction: f64,
    label: &str,
) -> Result<RadiationPattern> {
    let limit = max_aperture_pitch_m(rc);
    if field.pitch_m() > limit {
        return Err(Error::UndersampledAperture {
            pitch_mm: field.pitch_m() * 1e3,
            limit_mm: limit * 1e3,
        });
    }
    let radiator =
        Radiator::Aperture { field: field.clone(), wavenumber_rad_m: rc.wavenumber_rad_m };
    if grid.is_cut() {
        let engine =
            PatternEngine::new(radiator, radiated_fraction, label.to_string(), None, Vec::new())?;
        return Ok(engine.pattern_on(grid));
    }
    // normalize on the caller's grid so refinement studies see the quadrature
    if !(radiated_fraction.is_finite() && radiated_fraction > 0.0) {
        return Err(Error::NonPositive { name: "radiated_fraction", value: radiated_fraction });
    }
    if radiated_fraction > 1.0 + 1e-9 {
        return Err(Error::ContractViolation(format!(
            "radiated fraction {radiated_fraction} exceeds unity"
        )));
    }
    let raw = eval_grid(&radiator, grid);
    let integral = hemisphere_integral(grid, &raw)?;
    let norm_linear = 4.0 * std::f64::consts::PI * radiated_fraction / integral;
    let engine = PatternEngine {
        radiator,
        norm_linear,
        radiated_fraction,
        label: label.to_string(),
        port: None,
        warnings: Vec::new(),
        reference: None,
    };
    Ok(engine.assemble(grid.clone(), raw))
}

/// Build the normalized pattern engine for one activated port of an array.
pub fn pattern_engine(cfg: &ArrayConfig, port: u32, rc: &RadioConstants) -> Result<PatternEngine> {
    let count = cfg.port_count();
    if port < 1 || port > count {
        return Err(Error::UnknownPort { port, count });
    }
    let label = format!("{} port {port}", cfg.label());
    let mut warnings = Vec::new();
    if let ArrayKind::FixedBeam { units_x, units_y, .. } = &cfg.kind {
        if *units_x > 1 || *units_y > 1 {
            let lobes = grating_lobe_angles_deg(UNIT_CUBE_PITCH_M, rc.wavelength_m);
            if !lobes.is_empty() {
                let list: Vec<String> = lobes.iter().map(|a| format!("{a:.1}")).collect();
                warnings.push(format!(
                    "unit pitch {:.0} mm exceeds the wavelength; grating lobes at {} deg off broadside",
                    UNIT_CUBE_PITCH_M * 1e3,
                    list.join(", ")
                ));
            }
        }
    }

    match (&cfg.kind, cfg.lens()?) {
        (_, None) => {
            let positions_m = cfg.coherent_positions_m(port)?;
            let radiator = Radiator::ClosedForm {
                element: cfg.element,
                positions_m,
                wavenumber_rad_m: rc.wavenumber_rad_m,
            };
            PatternEngine::new(radiator, 1.0, label, Some(port), warnings)
        }
        (ArrayKind::Steerable { .. }, Some(lens)) => {
            let offset = cfg.port_position_m(port)?;
            let q = cfg.illumination_exponent;
            let feed = transform_feed_field(
                &lens,
                offset,
                &|theta| crate::array::cosine_power_gain(q, theta),
                rc,
                DEFAULT_APERTURE_PITCH_M,
            )?;
            warnings.extend(feed.warnings);
            let fraction = feed.captured_fraction * cfg.lens_efficiency;
            let radiator = Radiator::Aperture {
                field: feed.field,
                wavenumber_rad_m: rc.wavenumber_rad_m,
            };
            PatternEngine::new(radiator, fraction, label, Some(port), warnings)
        }
        (ArrayKind::FixedBeam { .. }, Some(lens)) => {
            let q = cfg.illumination_exponent;
            let feed = transform_feed_field(
                &lens,
                (0.0, 0.0),
                &|theta| crate::array::cosine_power_gain(q, theta),
                rc,
                DEFAULT_APERTURE_PITCH_M,
            )?;
            warnings.extend(feed.warnings);
            let centers = cfg.unit_centers_m();
            let scale = 1.0 / (centers.len() as f64).sqrt();
            let mut samples = Vec::with_capacity(centers.len() * feed.field.samples().len());
            for (cx, cy) in &centers {
                for s in feed.field.samples() {
                    samples.push(ApertureSample {
                        x_m: s.x_m + cx,
                        y_m: s.y_m + cy,
                        amplitude: s.amplitude * scale,
                    });
                }
            }
            let field = ComplexField::new(feed.field.pitch_m(), samples)?;
            let fraction = feed.captured_fraction * cfg.lens_efficiency;
            let radiator =
                Radiator::Aperture { field, wavenumber_rad_m: rc.wavenumber_rad_m };
            PatternEngine::new(radiator, fraction, label, Some(port), warnings)
        }
    }
}

/// One-call version of `pattern_engine` + reference materialization.
pub fn pattern_for_port(
    cfg: &ArrayConfig,
    port: u32,
    rc: &RadioConstants,
) -> Result<RadiationPattern> {
    Ok(pattern_engine(cfg, port, rc)?.reference().clone())
}

/// Half-power width of an aperture field along a principal cut, measured on
/// raw (unnormalized) power. Used by calibration loops, where rebuilding the
/// full normalization every iteration would be wasted work.
pub(crate) fn aperture_cut_hpbw_deg(
    field: &ComplexField,
    rc: &RadioConstants,
    plane: CutPlane,
    half_span_deg: f64,
    resolution_deg: f64,
) -> Result<f64> {
    let grid = AngularGrid::principal_cut(plane, half_span_deg, resolution_deg)?;
    let radiator =
        Radiator::Aperture { field: field.clone(), wavenumber_rad_m: rc.wavenumber_rad_m };
    let raw = eval_grid(&radiator, &grid);
    let profile: Vec<f64> =
        raw.iter().map(|p| if *p > 0.0 { db_from_linear(*p) } else { GAIN_FLOOR_DBI }).collect();
    hpbw_from_profile(grid.theta_deg(), &profile)
}
