//! Beam-switching control: the port-to-direction steering map, port
//! selection for a requested departure angle, synthesized multi-beam
//! codebooks, and the RF switch loss model.
//!
//! A steerable array points its beam by activating one feed port; the
//! steering map tabulates, per port, where that beam lands and how strong
//! and wide it is. The codebook side works the other way around: it takes
//! one measured-quality pattern cut and rescales its main lobe into a bank
//! of `N_b` selectable beams spanning the service sector, which is how the
//! system-level experiments sweep beam count without re-simulating optics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::ArrayConfig;
use crate::em::{
    db_from_linear, direction_cosines, in_plane_angle_deg, linear_from_db, CutPlane,
    RadioConstants,
};
use crate::error::{Error, Result};
use crate::radiation::{hpbw_from_profile, pattern_engine, RadiationPattern};

/// Beam directions closer together than this are "the same direction".
const DEGENERATE_SPREAD_DEG: f64 = 0.5;

/// Local peak-refinement window in direction cosine units.
const REFINE_HALF_WINDOW: f64 = 0.02;
const REFINE_STEP: f64 = 5e-4;

/// Steering-map angular profile step, degrees.
const MAP_PROFILE_STEP_DEG: f64 = 0.02;

/// Codebook profile tabulation step, degrees.
const CODEBOOK_STEP_DEG: f64 = 0.25;

/// Service sector edge for codebook beams, degrees.
const SECTOR_EDGE_DEG: f64 = 75.0;

// ── steering map ────────────────────────────────────────────────────────────

/// One port's beam: refined peak direction, absolute gain, and width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringEntry {
    pub port: u32,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub gain_dbi: f64,
    /// Full half-power width of the great-circle cut through the peak;
    /// absent when the beam has no -3 dB crossing inside the hemisphere.
    pub hpbw_deg: Option<f64>,
}

impl SteeringEntry {
    /// Signed steering angle in the map's reference plane.
    pub fn in_plane_deg(&self, plane: CutPlane) -> f64 {
        in_plane_angle_deg(self.theta_deg, self.phi_deg, plane)
    }
}

/// Port-indexed beam table for one array configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringMap {
    pub entries: Vec<SteeringEntry>,
    /// Plane whose signed projection orders the beams (feed rows for a line
    /// layout, feed columns for the grid).
    pub plane: CutPlane,
    pub config_hash: String,
    /// True when all beams land within [`DEGENERATE_SPREAD_DEG`] of each
    /// other, i.e. switching ports does not steer.
    pub degenerate: bool,
}

impl SteeringMap {
    /// Max minus min in-plane steering angle over the entries, degrees.
    pub fn in_plane_spread_deg(&self) -> f64 {
        let angles = self.entries.iter().map(|e| e.in_plane_deg(self.plane));
        let lo = angles.clone().fold(f64::INFINITY, f64::min);
        let hi = angles.fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn entry(&self, port: u32) -> Result<&SteeringEntry> {
        self.entries
            .iter()
            .find(|e| e.port == port)
            .ok_or(Error::UnknownPort { port, count: self.entries.len() as u32 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("steering map serializes")
    }
}

/// Great-circle angle between two (theta, phi) directions, degrees.
fn angular_distance_deg(a_deg: (f64, f64), b_deg: (f64, f64)) -> f64 {
    let unit = |(t, p): (f64, f64)| {
        let (u, v) = direction_cosines(t, p);
        let w = t.to_radians().cos();
        (u, v, w)
    };
    let a = unit(a_deg);
    let b = unit(b_deg);
    let dot = (a.0 * b.0 + a.1 * b.1 + a.2 * b.2).clamp(-1.0, 1.0);
    dot.acos().to_degrees()
}

/// Normalize an azimuth to [0, 360).
fn wrap_azimuth_deg(phi_deg: f64) -> f64 {
    let p = phi_deg.rem_euclid(360.0);
    if p == 360.0 {
        0.0
    } else {
        p
    }
}

/// Tabulate every port's beam for one array configuration.
///
/// Each port's pattern is evaluated once; its reference-grid peak is then
/// refined on a fine direction-cosine patch, and the beam width is read off
/// a great-circle cut through the refined peak. No-lens configurations
/// produce a valid but degenerate map (all beams at boresight).
pub fn build_steering_map(cfg: &ArrayConfig, rc: &RadioConstants) -> Result<SteeringMap> {
    let plane = steering_plane(cfg);
    let ports: Vec<u32> = (1..=cfg.port_count()).collect();
    let entries: Result<Vec<SteeringEntry>> = ports
        .par_iter()
        .map(|&port| {
            let engine = pattern_engine(cfg, port, rc)?;
            let (t0, p0) = engine.reference().peak_direction_deg();
            let (gain_dbi, theta_deg, phi_deg) = refine_peak(&engine, t0, p0);
            let hpbw_deg = peak_cut_hpbw(&engine, theta_deg, phi_deg).ok();
            Ok(SteeringEntry { port, theta_deg, phi_deg, gain_dbi, hpbw_deg })
        })
        .collect();
    let entries = entries?;
    let mut map = SteeringMap {
        entries,
        plane,
        config_hash: crate::scenario::content_hash(cfg),
        degenerate: false,
    };
    map.degenerate = map.in_plane_spread_deg() < DEGENERATE_SPREAD_DEG;
    Ok(map)
}

/// Plane along which a layout's ports sweep the beam.
fn steering_plane(cfg: &ArrayConfig) -> CutPlane {
    use crate::array::{ArrayKind, FeedLayout};
    match &cfg.kind {
        ArrayKind::Steerable { layout: FeedLayout::Line4, .. } => CutPlane::Horizontal,
        _ => CutPlane::Vertical,
    }
}

/// Grid-search the true peak on a fine u-v patch around a seed direction.
fn refine_peak(
    engine: &crate::radiation::PatternEngine,
    seed_theta_deg: f64,
    seed_phi_deg: f64,
) -> (f64, f64, f64) {
    let (u0, v0) = direction_cosines(seed_theta_deg, seed_phi_deg);
    let steps = (2.0 * REFINE_HALF_WINDOW / REFINE_STEP).round() as i64;
    let mut best_gain = f64::NEG_INFINITY;
    let mut best_dir = (seed_theta_deg, seed_phi_deg);
    for i in 0..=steps {
        let u = u0 - REFINE_HALF_WINDOW + i as f64 * REFINE_STEP;
        for j in 0..=steps {
            let v = v0 - REFINE_HALF_WINDOW + j as f64 * REFINE_STEP;
            let r2 = u * u + v * v;
            if r2 >= 1.0 {
                continue;
            }
            let theta = r2.sqrt().asin().to_degrees();
            let phi = wrap_azimuth_deg(v.atan2(u).to_degrees());
            let g = engine.gain_dbi_at(theta, phi);
            if g > best_gain {
                best_gain = g;
                best_dir = (theta, phi);
            }
        }
    }
    (best_gain, best_dir.0, best_dir.1)
}

/// Half-power width of the great-circle cut through a beam peak.
///
/// The cut runs through boresight and the peak: signed offsets keep the
/// peak azimuth, negative offsets continue through boresight to the
/// opposite half-plane, which `gain_dbi_at` handles via its signed-theta
/// convention.
fn peak_cut_hpbw(
    engine: &crate::radiation::PatternEngine,
    peak_theta_deg: f64,
    peak_phi_deg: f64,
) -> Result<f64> {
    let n = (180.0 / MAP_PROFILE_STEP_DEG).round() as usize;
    let mut axis = Vec::with_capacity(n + 1);
    let mut gains = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = -90.0 + i as f64 * MAP_PROFILE_STEP_DEG;
        if (s - peak_theta_deg).abs() > 90.0 {
            continue;
        }
        axis.push(s);
        gains.push(engine.gain_dbi_at(s, peak_phi_deg));
    }
    hpbw_from_profile(&axis, &gains)
}

/// Pick the port whose beam lies closest to a requested departure angle.
///
/// The target is a signed angle in the map's steering plane; distance is
/// the great-circle angle from each beam peak to that in-plane direction.
/// Ties resolve to the lower port index, and targets beyond the map's
/// extremes clamp to the nearest edge port.
pub fn select_port(map: &SteeringMap, target_aod_deg: f64) -> Result<u32> {
    if map.degenerate {
        return Err(Error::DegenerateSteering { spread_deg: map.in_plane_spread_deg() });
    }
    let target = (
        target_aod_deg.abs(),
        if target_aod_deg >= 0.0 {
            map.plane.azimuth_deg()
        } else {
            map.plane.azimuth_deg() + 180.0
        },
    );
    let mut best: Option<(f64, u32)> = None;
    for e in &map.entries {
        let d = angular_distance_deg((e.theta_deg, e.phi_deg), target);
        match best {
            Some((bd, _)) if d >= bd => {}
            _ => best = Some((d, e.port)),
        }
    }
    best.map(|(_, port)| port).ok_or_else(|| Error::BadGrid("empty steering map".into()))
}

// ── beam codebook ───────────────────────────────────────────────────────────

/// Uniformly sampled relative-gain profile over one angular axis, dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    start_deg: f64,
    step_deg: f64,
    rel_db: Vec<f64>,
}

impl Profile {
    fn new(start_deg: f64, step_deg: f64, rel_db: Vec<f64>) -> Self {
        Self { start_deg, step_deg, rel_db }
    }

    /// Linear-in-dB interpolation, clamped to the tabulated ends.
    pub fn rel_db_at(&self, offset_deg: f64) -> f64 {
        let x = (offset_deg - self.start_deg) / self.step_deg;
        if x <= 0.0 {
            return self.rel_db[0];
        }
        let last = self.rel_db.len() - 1;
        if x >= last as f64 {
            return self.rel_db[last];
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        self.rel_db[i] + t * (self.rel_db[i + 1] - self.rel_db[i])
    }

    /// Circular convolution with a Gaussian kernel, in linear power.
    ///
    /// Only valid for closed full-circle profiles whose first and last
    /// samples alias the same angle. The kernel is normalized, so the mean
    /// linear power around the circle is conserved exactly.
    fn convolved_circular(&self, sigma_deg: f64) -> Profile {
        let period = self.rel_db.len() - 1;
        debug_assert!(
            (period as f64 * self.step_deg - 360.0).abs() < 1e-9,
            "circular convolution needs a full-circle profile"
        );
        let radius = (4.0 * sigma_deg / self.step_deg).ceil() as i64;
        let weights: Vec<f64> = (-radius..=radius)
            .map(|j| {
                let x = j as f64 * self.step_deg / sigma_deg;
                (-0.5 * x * x).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let linear: Vec<f64> = self.rel_db[..period].iter().map(|db| linear_from_db(*db)).collect();
        let mut rel_db: Vec<f64> = (0..period as i64)
            .map(|i| {
                let blurred: f64 = weights
                    .iter()
                    .zip(-radius..=radius)
                    .map(|(w, j)| w * linear[(i - j).rem_euclid(period as i64) as usize])
                    .sum();
                db_from_linear(blurred / total)
            })
            .collect();
        rel_db.push(rel_db[0]);
        Profile::new(self.start_deg, self.step_deg, rel_db)
    }
}

/// One selectable beam: separable azimuth x elevation gain model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub index: usize,
    /// Azimuthal pointing direction, degrees.
    pub direction_deg: f64,
    /// Elevation pointing direction, degrees; negative points below the
    /// horizon (mechanical downtilt). Codebook beams start at 0.
    pub elevation_deg: f64,
    /// Half-power half-width in azimuth, degrees.
    pub half_width_deg: f64,
    /// Boresight gain, dBi, set by the beam solid angle.
    pub peak_gain_dbi: f64,
    azimuth: Profile,
    elevation: Profile,
}

impl Beam {
    /// Gain toward (azimuth, elevation) relative to the array broadside.
    pub fn gain_dbi(&self, azimuth_deg: f64, elevation_deg: f64) -> f64 {
        let mut off = (azimuth_deg - self.direction_deg).rem_euclid(360.0);
        if off >= 180.0 {
            off -= 360.0;
        }
        self.peak_gain_dbi
            + self.azimuth.rel_db_at(off)
            + self.elevation.rel_db_at(elevation_deg - self.elevation_deg)
    }

    /// The beam as seen through a scattering channel: its azimuth pattern is
    /// circularly convolved with a Gaussian of the given RMS width, degrees.
    ///
    /// Radiated power is conserved, so a lobe much narrower than the spread
    /// flattens toward the spread width and forfeits most of its peak
    /// advantage. A spread of 0 returns the beam unchanged.
    pub fn with_azimuth_spread(&self, spread_deg: f64) -> Beam {
        let mut out = self.clone();
        if spread_deg > 0.0 {
            out.azimuth = self.azimuth.convolved_circular(spread_deg);
        }
        out
    }
}

/// Bank of equal-width beams spanning the service sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamCodebook {
    pub beams: Vec<Beam>,
    pub half_width_deg: f64,
    /// Full half-power width of the source pattern the lobes were rescaled
    /// from, degrees.
    pub source_hpbw_deg: f64,
}

impl BeamCodebook {
    pub fn n_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        self.beams[0].peak_gain_dbi
    }
}

/// Beam count to half-power half-width pairing for supported codebooks.
fn codebook_half_width_deg(n_beams: usize) -> Result<f64> {
    match n_beams {
        8 => Ok(10.5),
        16 => Ok(5.0),
        32 => Ok(2.5),
        64 => Ok(1.25),
        other => Err(Error::Config(format!(
            "unsupported codebook size {other}; choose one of 8, 16, 32, 64"
        ))),
    }
}

/// Sidelobe envelope floor for synthesized beams, dB relative to peak:
/// near sidelobes hold at -12 dB, rolling off linearly to -28 dB far out.
fn envelope_floor_db(offset_deg: f64) -> f64 {
    let a = offset_deg.abs();
    if a <= 35.0 {
        -12.0
    } else if a <= 55.0 {
        -12.0 - 16.0 * (a - 35.0) / 20.0
    } else {
        -28.0
    }
}

/// Synthesize an `n_beams`-entry codebook from one measured-grade cut.
///
/// The source's main lobe is re-centered and rescaled in azimuth to each
/// codebook width under a fixed sidelobe envelope; the unscaled lobe is
/// reused as the elevation profile. Peak gain follows from the beam solid
/// angle, so every beam integrates to exactly unit radiated power and
/// narrower codebooks get higher peaks.
pub fn make_codebook(n_beams: usize, source: &RadiationPattern) -> Result<BeamCodebook> {
    let half_width = codebook_half_width_deg(n_beams)?;
    if !source.grid().is_cut() {
        return Err(Error::BadGrid("codebook source must be a principal-plane cut".into()));
    }
    let source_hpbw = source.hpbw_full_deg()?;
    let template = recentered_template(source);
    let scale = (0.5 * source_hpbw) / half_width;

    // azimuth: rescaled main lobe, clipped from below by the envelope floor
    let n_az = (360.0 / CODEBOOK_STEP_DEG).round() as usize;
    let azimuth: Vec<f64> = (0..=n_az)
        .map(|i| {
            let off = -180.0 + i as f64 * CODEBOOK_STEP_DEG;
            template.rel_db_at(off * scale).max(envelope_floor_db(off))
        })
        .collect();
    let azimuth = Profile::new(-180.0, CODEBOOK_STEP_DEG, azimuth);

    // elevation: the source lobe as-is (the codebook narrows azimuth only)
    let n_el = (180.0 / CODEBOOK_STEP_DEG).round() as usize;
    let elevation: Vec<f64> = (0..=n_el)
        .map(|i| template.rel_db_at(-90.0 + i as f64 * CODEBOOK_STEP_DEG))
        .collect();
    let elevation = Profile::new(-90.0, CODEBOOK_STEP_DEG, elevation);

    let peak_gain_dbi = db_from_linear(4.0 * std::f64::consts::PI / beam_solid_angle_sr(&azimuth, &elevation));

    let beams = (0..n_beams)
        .map(|index| {
            let t = index as f64 / (n_beams - 1) as f64;
            Beam {
                index,
                direction_deg: -SECTOR_EDGE_DEG + 2.0 * SECTOR_EDGE_DEG * t,
                elevation_deg: 0.0,
                half_width_deg: half_width,
                peak_gain_dbi,
                azimuth: azimuth.clone(),
                elevation: elevation.clone(),
            }
        })
        .collect();
    Ok(BeamCodebook { beams, half_width_deg: half_width, source_hpbw_deg: source_hpbw })
}

/// Relative-gain template of a cut, re-centered so its peak sits at 0.
fn recentered_template(source: &RadiationPattern) -> Profile {
    let axis = source.grid().theta_deg();
    let gains = source.gain_dbi();
    let mut pk = 0;
    for (i, g) in gains.iter().enumerate() {
        if *g > gains[pk] {
            pk = i;
        }
    }
    let step = axis[1] - axis[0];
    let rel: Vec<f64> = gains.iter().map(|g| g - gains[pk]).collect();
    Profile::new(axis[0] - axis[pk], step, rel)
}

/// Solid angle of a separable relative-power beam, steradians.
fn beam_solid_angle_sr(azimuth: &Profile, elevation: &Profile) -> f64 {
    let step = CODEBOOK_STEP_DEG.to_radians();
    let az_sum: f64 = azimuth.rel_db
        .iter()
        .map(|db| linear_from_db(*db))
        .sum::<f64>()
        * step;
    let el_sum: f64 = elevation.rel_db
        .iter()
        .enumerate()
        .map(|(i, db)| {
            let el = elevation.start_deg + i as f64 * elevation.step_deg;
            linear_from_db(*db) * el.to_radians().cos()
        })
        .sum::<f64>()
        * step;
    az_sum * el_sum
}

// ── switch loss model ───────────────────────────────────────────────────────

/// RF beam-switching network: raw insertion loss, PA make-up gain, and the
/// residual cross-stream isolation floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitchModel {
    /// Uncompensated switch network loss, dB; realizable parts sit in 10-20.
    pub raw_loss_db: f64,
    /// Power-amplifier make-up gain, dB; defaults to full compensation.
    pub pa_compensation_db: f64,
    /// Port switching time, seconds; kept for completeness, nothing models
    /// switching dynamics.
    pub switching_delay_s: f64,
    /// Fraction of each stream's power that leaks into every co-scheduled
    /// stream's beam, dB relative to the serving gain; `None` disables the
    /// mechanism.
    pub cross_stream_leakage_db: Option<f64>,
}

impl Default for SwitchModel {
    fn default() -> Self {
        Self {
            raw_loss_db: 15.0,
            pa_compensation_db: 15.0,
            switching_delay_s: 0.0,
            cross_stream_leakage_db: None,
        }
    }
}

impl SwitchModel {
    pub fn validate(&self) -> Result<()> {
        if !(10.0..=20.0).contains(&self.raw_loss_db) {
            return Err(Error::Config(format!(
                "switch raw loss {} dB outside the realizable 10-20 dB range",
                self.raw_loss_db
            )));
        }
        if self.pa_compensation_db < 0.0 {
            return Err(Error::Config("PA compensation cannot be negative".into()));
        }
        if self.switching_delay_s < 0.0 {
            return Err(Error::Config("switching delay cannot be negative".into()));
        }
        Ok(())
    }

    /// Net insertion loss after PA compensation, dB (default 0).
    pub fn net_loss_db(&self) -> f64 {
        self.raw_loss_db - self.pa_compensation_db
    }

    /// Cross-stream leakage as a linear power fraction (0 when disabled).
    pub fn leakage_linear(&self) -> f64 {
        self.cross_stream_leakage_db.map_or(0.0, linear_from_db)
    }
}
