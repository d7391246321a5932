//! System-level experiments: point-to-point link budgets and seeded
//! Monte Carlo multi-user throughput runs.
//!
//! Everything here reduces to the same three steps: compose a link budget
//! in dB, sum interference and noise in linear milliwatts, and map SINR to
//! Shannon throughput. The multi-user runs are deterministic by contract:
//! one counter-derived RNG per trial makes the result independent of how
//! trials are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::beamsteer::{Beam, BeamCodebook, SwitchModel};
use crate::calibrate::defaults;
use crate::channel::{
    bearing_from_tx, blockage_excess_db, fspl_db, noise_power_dbm, BlockageZone, IndoorGeometry,
    Link, OutdoorGeometry, Point3,
};
use crate::em::{db_from_linear, linear_from_db, RadioConstants};
use crate::error::{Error, Result};

/// Reported interference level when a user sees no interferers at all, dBm.
pub const INTERFERENCE_FLOOR_DBM: f64 = -400.0;

/// Long-range backhaul distances, meters: case 1 is the shorter obstructed
/// hop, case 2 the longer clear one.
pub const BACKHAUL_CASE1_DISTANCE_M: f64 = 450.0;
pub const BACKHAUL_CASE2_DISTANCE_M: f64 = 636.0;

/// Measured link-level reference the Shannon bound must clear, bps.
pub const LINK_LEVEL_REFERENCE_BPS: f64 = 2.474e9;

// ── Shannon capacity ────────────────────────────────────────────────────────

/// Shannon throughput `B log2(1 + sinr)`, bps.
pub fn shannon_bps(sinr_linear: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::NonPositive { name: "bandwidth_hz", value: bandwidth_hz });
    }
    if !(sinr_linear >= 0.0) {
        return Err(Error::Config(format!("sinr must be non-negative, got {sinr_linear}")));
    }
    Ok(bandwidth_hz * (1.0 + sinr_linear).log2())
}

// ── point-to-point budgets ──────────────────────────────────────────────────

/// Full dB-domain accounting of one point-to-point link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub label: String,
    pub distance_m: f64,
    pub line_of_sight: bool,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub fspl_db: f64,
    pub excess_loss_db: f64,
    pub received_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub throughput_bps: f64,
}

impl LinkBudget {
    #[allow(clippy::too_many_arguments)]
    fn compose(
        label: String,
        link: &Link,
        rc: &RadioConstants,
        tx_power_dbm: f64,
        tx_gain_dbi: f64,
        rx_gain_dbi: f64,
        bandwidth_hz: f64,
        noise_figure_db: f64,
    ) -> Result<Self> {
        let fspl = fspl_db(link.distance_m(), rc)?;
        let received = tx_power_dbm + tx_gain_dbi + rx_gain_dbi - fspl - link.excess_loss_db;
        let noise = noise_power_dbm(bandwidth_hz, noise_figure_db)?;
        let snr_db = received - noise;
        let throughput = shannon_bps(linear_from_db(snr_db), bandwidth_hz)?;
        Ok(Self {
            label,
            distance_m: link.distance_m(),
            line_of_sight: link.line_of_sight,
            tx_power_dbm,
            tx_gain_dbi,
            rx_gain_dbi,
            fspl_db: fspl,
            excess_loss_db: link.excess_loss_db,
            received_power_dbm: received,
            noise_power_dbm: noise,
            snr_db,
            bandwidth_hz,
            throughput_bps: throughput,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("link budget serializes")
    }
}

/// Radio and antenna parameters of the long-range backhaul study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackhaulParams {
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Gain of the lens-equipped 2 x 2 array, used at both ends.
    pub lens_gain_dbi: f64,
    /// Gain of the bare patch block, used at both ends of the no-lens runs.
    pub no_lens_gain_dbi: f64,
    /// Calibrated excess loss of the obstructed case-1 path, dB.
    pub nlos_excess_db: f64,
}

impl Default for BackhaulParams {
    fn default() -> Self {
        Self {
            tx_power_dbm: 43.0,
            bandwidth_hz: 2e9,
            noise_figure_db: 5.0,
            lens_gain_dbi: defaults::FIXED_BEAM_2X2_GAIN_DBI,
            no_lens_gain_dbi: defaults::BARE_BLOCK_GAIN_DBI,
            nlos_excess_db: defaults::NLOS_EXCESS_LOSS_DB,
        }
    }
}

/// Budget for one of the two backhaul cases, with or without the lens.
///
/// Case 1 is 450 m obstructed (the calibrated excess loss applies), case 2
/// is 636 m clear. Both ends carry the same antenna; alignment is perfect.
pub fn backhaul_throughput(
    case: u8,
    lens: bool,
    params: &BackhaulParams,
    rc: &RadioConstants,
) -> Result<LinkBudget> {
    let tx = Point3::new(0.0, 0.0, 10.0);
    let link = match case {
        1 => Link::obstructed(
            tx,
            Point3::new(0.0, BACKHAUL_CASE1_DISTANCE_M, 10.0),
            params.nlos_excess_db,
        )?,
        2 => Link::clear(tx, Point3::new(0.0, BACKHAUL_CASE2_DISTANCE_M, 10.0))?,
        other => return Err(Error::Config(format!("backhaul case must be 1 or 2, got {other}"))),
    };
    let gain = if lens { params.lens_gain_dbi } else { params.no_lens_gain_dbi };
    let label = format!("backhaul_case{case}_{}", if lens { "lens" } else { "no_lens" });
    LinkBudget::compose(
        label,
        &link,
        rc,
        params.tx_power_dbm,
        gain,
        gain,
        params.bandwidth_hz,
        params.noise_figure_db,
    )
}

/// Short-range wideband link check: horn feed into one fixed-beam unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkLevelParams {
    pub bandwidth_hz: f64,
    pub distance_m: f64,
    pub tx_power_dbm: f64,
    pub horn_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_figure_db: f64,
}

impl Default for LinkLevelParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 800e6,
            distance_m: 0.7,
            tx_power_dbm: 0.0,
            horn_gain_dbi: 10.0,
            rx_gain_dbi: defaults::FIXED_BEAM_UNIT_GAIN_DBI,
            noise_figure_db: 5.0,
        }
    }
}

/// Link-level Shannon bound with modulation-ceiling context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLevelReport {
    pub budget: LinkBudget,
    pub spectral_efficiency_bps_hz: f64,
    /// 64-QAM hard ceiling, 6 bit/s/Hz across the band.
    pub qam64_ceiling_bps: f64,
    /// Measured benchmark the Shannon bound must exceed.
    pub reference_throughput_bps: f64,
    pub exceeds_reference: bool,
}

impl LinkLevelReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("link level report serializes")
    }
}

/// Shannon bound for the desk-scale wideband link.
pub fn link_level_budget(params: &LinkLevelParams, rc: &RadioConstants) -> Result<LinkLevelReport> {
    let link = Link::clear(
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, params.distance_m, 1.0),
    )?;
    let budget = LinkBudget::compose(
        "link_level".into(),
        &link,
        rc,
        params.tx_power_dbm,
        params.horn_gain_dbi,
        params.rx_gain_dbi,
        params.bandwidth_hz,
        params.noise_figure_db,
    )?;
    let spectral = budget.throughput_bps / params.bandwidth_hz;
    Ok(LinkLevelReport {
        spectral_efficiency_bps_hz: spectral,
        qam64_ceiling_bps: 6.0 * params.bandwidth_hz,
        reference_throughput_bps: LINK_LEVEL_REFERENCE_BPS,
        exceeds_reference: budget.throughput_bps >= LINK_LEVEL_REFERENCE_BPS,
        budget,
    })
}

// ── multi-user Monte Carlo ──────────────────────────────────────────────────

/// Outdoor multi-user scenario: lattice drop, random user subsets per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutdoorScenario {
    pub geometry: OutdoorGeometry,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub users_per_trial: usize,
    pub trials: usize,
    pub switch: SwitchModel,
    /// Broadside gain exponent of the no-lens baseline pattern.
    pub no_lens_exponent: f64,
    /// Elevation the transmit beams point at, degrees; negative tilts below
    /// the horizon. Street-level receivers keep this at 0.
    pub beam_elevation_deg: f64,
    /// RMS azimuth spread of the street-canyon channel, degrees. Every beam
    /// pattern is convolved with this blur, so lobes narrower than the
    /// spread stop gaining peak power, which is what saturates ever-larger
    /// codebooks.
    pub azimuth_spread_deg: f64,
}

impl Default for OutdoorScenario {
    fn default() -> Self {
        Self {
            geometry: OutdoorGeometry::default(),
            tx_power_dbm: 38.0,
            bandwidth_hz: 2e9,
            noise_figure_db: 5.0,
            users_per_trial: 5,
            trials: 220,
            switch: SwitchModel::default(),
            no_lens_exponent: defaults::ELEMENT_EXPONENT,
            beam_elevation_deg: 0.0,
            azimuth_spread_deg: 2.0,
        }
    }
}

/// Indoor two-stream scenario: every lattice user evaluated once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndoorScenario {
    pub geometry: IndoorGeometry,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Azimuths of the simultaneous streams, degrees.
    pub beam_directions_deg: Vec<f64>,
    pub blockages: Vec<BlockageZone>,
    pub switch: SwitchModel,
    pub no_lens_exponent: f64,
    /// Elevation the streams point at, degrees; ceiling-height mounts tilt
    /// down toward the seated user plane.
    pub beam_elevation_deg: f64,
    /// RMS azimuth spread of the channel, degrees; the short line-of-sight
    /// links indoors leave this at 0.
    pub azimuth_spread_deg: f64,
}

impl Default for IndoorScenario {
    fn default() -> Self {
        Self {
            geometry: IndoorGeometry::default(),
            tx_power_dbm: 13.0,
            bandwidth_hz: 2e9,
            noise_figure_db: 5.0,
            beam_directions_deg: vec![-60.0, 60.0],
            blockages: Vec::new(),
            switch: SwitchModel::default(),
            no_lens_exponent: defaults::ELEMENT_EXPONENT,
            beam_elevation_deg: -8.5,
            azimuth_spread_deg: 0.0,
        }
    }
}

/// One user's outcome within one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub trial: usize,
    pub user_index: usize,
    pub position: Point3,
    pub beam: usize,
    pub signal_dbm: f64,
    pub interference_dbm: f64,
    pub sinr_db: f64,
    pub throughput_bps: f64,
}

/// Full result of a multi-user run, with its empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub label: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub lens: bool,
    pub outcomes: Vec<UserOutcome>,
    /// (throughput bps, cumulative probability), sorted ascending.
    pub cdf: Vec<(f64, f64)>,
    pub mean_bps: f64,
    pub median_bps: f64,
    pub max_bps: f64,
}

impl ThroughputReport {
    fn from_outcomes(
        label: String,
        scenario_hash: String,
        seed: u64,
        lens: bool,
        outcomes: Vec<UserOutcome>,
    ) -> Self {
        let mut sorted: Vec<f64> = outcomes.iter().map(|o| o.throughput_bps).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let cdf: Vec<(f64, f64)> =
            sorted.iter().enumerate().map(|(i, t)| (*t, (i + 1) as f64 / n as f64)).collect();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let median = sorted[(n - 1) / 2];
        let max = sorted[n - 1];
        Self {
            label,
            scenario_hash,
            seed,
            lens,
            outcomes,
            cdf,
            mean_bps: mean,
            median_bps: median,
            max_bps: max,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("throughput report serializes")
    }

    /// CSV of the empirical CDF, hash and seed in comment headers.
    pub fn cdf_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.cdf.len() + 3));
        writeln!(out, "# scenario_hash={}", self.scenario_hash).expect("string write");
        writeln!(out, "# seed={}", self.seed).expect("string write");
        out.push_str("throughput_bps,cdf\n");
        for (t, p) in &self.cdf {
            writeln!(out, "{t},{p}").expect("string write");
        }
        out
    }
}

/// Transmit-side gain model for the co-scheduled streams.
///
/// Lens runs point one codebook lobe per stream; no-lens runs radiate the
/// broad low-gain element pattern around the +y boresight on every stream.
enum TxSide {
    Beams(Vec<Beam>),
    Broad { exponent: f64, streams: usize },
}

impl TxSide {
    fn stream_count(&self) -> usize {
        match self {
            TxSide::Beams(beams) => beams.len(),
            TxSide::Broad { streams, .. } => *streams,
        }
    }

    fn gain_dbi(&self, stream: usize, azimuth_deg: f64, elevation_deg: f64) -> f64 {
        match self {
            TxSide::Beams(beams) => beams[stream].gain_dbi(azimuth_deg, elevation_deg),
            TxSide::Broad { exponent, .. } => {
                let cos_bore = azimuth_deg.to_radians().cos() * elevation_deg.to_radians().cos();
                let off_boresight = cos_bore.clamp(-1.0, 1.0).acos();
                db_from_linear(crate::array::cosine_power_gain(*exponent, off_boresight).max(1e-30))
            }
        }
    }
}

/// SplitMix64 mix, used to derive independent per-trial seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Linear-domain SINR composition for one user.
///
/// Every interfering stream contributes its own pattern gain toward the
/// user plus the switch network's leakage replica of the serving gain;
/// everything rides the user's path gain.
pub(crate) fn user_sinr_linear(
    stream_power_mw: f64,
    path_gain_linear: f64,
    serving_gain_linear: f64,
    interferer_gains_linear: &[f64],
    leakage_linear: f64,
    noise_mw: f64,
) -> (f64, f64, f64) {
    let signal_mw = stream_power_mw * serving_gain_linear * path_gain_linear;
    let interference_mw: f64 = interferer_gains_linear
        .iter()
        .map(|g| stream_power_mw * (g + leakage_linear * serving_gain_linear) * path_gain_linear)
        .sum();
    let sinr = signal_mw / (interference_mw + noise_mw);
    (signal_mw, interference_mw, sinr)
}

/// Radio constants shared by one multi-user evaluation.
struct MuRadio {
    rc: RadioConstants,
    stream_power_mw: f64,
    noise_mw: f64,
    leakage_linear: f64,
    bandwidth_hz: f64,
}

/// Evaluate one user against all simultaneous streams.
fn evaluate_user(
    radio: &MuRadio,
    tx: &Point3,
    tx_side: &TxSide,
    serving_stream: usize,
    trial: usize,
    user_index: usize,
    position: &Point3,
    excess_db: f64,
) -> Result<UserOutcome> {
    let (az, el) = bearing_from_tx(tx, position);
    let path = linear_from_db(-(fspl_db(tx.distance_m(position), &radio.rc)? + excess_db));
    let serving_gain = linear_from_db(tx_side.gain_dbi(serving_stream, az, el));
    let interferer_gains: Vec<f64> = (0..tx_side.stream_count())
        .filter(|s| *s != serving_stream)
        .map(|s| linear_from_db(tx_side.gain_dbi(s, az, el)))
        .collect();
    let (signal_mw, interference_mw, sinr) = user_sinr_linear(
        radio.stream_power_mw,
        path,
        serving_gain,
        &interferer_gains,
        radio.leakage_linear,
        radio.noise_mw,
    );
    Ok(UserOutcome {
        trial,
        user_index,
        position: *position,
        beam: serving_stream,
        signal_dbm: db_from_linear(signal_mw),
        interference_dbm: if interference_mw > 0.0 {
            db_from_linear(interference_mw)
        } else {
            INTERFERENCE_FLOOR_DBM
        },
        sinr_db: db_from_linear(sinr),
        throughput_bps: shannon_bps(sinr, radio.bandwidth_hz)?,
    })
}

/// Serving beam of one user: highest codebook gain, ties to lower index.
fn best_beam(codebook: &BeamCodebook, azimuth_deg: f64, elevation_deg: f64) -> usize {
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for (i, beam) in codebook.beams.iter().enumerate() {
        let g = beam.gain_dbi(azimuth_deg, elevation_deg);
        if g > best_gain {
            best_gain = g;
            best = i;
        }
    }
    best
}

/// Seeded outdoor Monte Carlo: random user groups, optimal beam per user,
/// equal power split, full-band spatial reuse.
///
/// `workers = 0` uses all cores; any worker count produces bit-identical
/// results because each trial derives its RNG from the trial index alone.
pub fn run_outdoor_mu(
    scenario: &OutdoorScenario,
    codebook: &BeamCodebook,
    lens: bool,
    seed: u64,
    workers: usize,
) -> Result<ThroughputReport> {
    scenario.switch.validate()?;
    validate_beam_elevation(scenario.beam_elevation_deg)?;
    validate_azimuth_spread(scenario.azimuth_spread_deg)?;
    if scenario.users_per_trial == 0 || scenario.trials == 0 {
        return Err(Error::Config("need at least one user per trial and one trial".into()));
    }
    let users = scenario.geometry.drop_users()?;
    if users.len() < scenario.users_per_trial {
        return Err(Error::EmptyDrop(format!(
            "scenario drops {} users but each trial needs {}",
            users.len(),
            scenario.users_per_trial
        )));
    }
    let tx = scenario.geometry.tx_position();
    let radio = MuRadio {
        rc: RadioConstants::ka_band_28ghz(),
        stream_power_mw: linear_from_db(
            scenario.tx_power_dbm
                - 10.0 * (scenario.users_per_trial as f64).log10()
                - scenario.switch.net_loss_db(),
        ),
        noise_mw: linear_from_db(noise_power_dbm(scenario.bandwidth_hz, scenario.noise_figure_db)?),
        leakage_linear: scenario.switch.leakage_linear(),
        bandwidth_hz: scenario.bandwidth_hz,
    };
    let label = format!(
        "outdoor_{}_n{}_h{}",
        if lens { "lens" } else { "no_lens" },
        codebook.n_beams(),
        scenario.geometry.tx_height_m
    );
    let scenario_hash = crate::scenario::content_hash(&(scenario, codebook, lens));

    // mount downtilt and channel angular spread reshape every beam the same
    // way, so bake both into one effective codebook before the trial loop
    let codebook = {
        let mut cb = codebook.clone();
        for b in &mut cb.beams {
            b.elevation_deg = scenario.beam_elevation_deg;
            *b = b.with_azimuth_spread(scenario.azimuth_spread_deg);
        }
        cb
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let per_trial: Result<Vec<Vec<UserOutcome>>> = pool.install(|| {
        (0..scenario.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix64(trial as u64));
                let picks =
                    rand::seq::index::sample(&mut rng, users.len(), scenario.users_per_trial);
                let group: Vec<(usize, Point3)> = picks.iter().map(|i| (i, users[i])).collect();
                let tx_side = if lens {
                    TxSide::Beams(
                        group
                            .iter()
                            .map(|(_, p)| {
                                let (az, el) = bearing_from_tx(&tx, p);
                                codebook.beams[best_beam(&codebook, az, el)].clone()
                            })
                            .collect(),
                    )
                } else {
                    TxSide::Broad { exponent: scenario.no_lens_exponent, streams: group.len() }
                };
                group
                    .iter()
                    .enumerate()
                    .map(|(slot, (user_index, position))| {
                        evaluate_user(&radio, &tx, &tx_side, slot, trial, *user_index, position, 0.0)
                    })
                    .collect()
            })
            .collect()
    });
    let outcomes: Vec<UserOutcome> = per_trial?.into_iter().flatten().collect();
    Ok(ThroughputReport::from_outcomes(label, scenario_hash, seed, lens, outcomes))
}

/// Rejects beam tilts a ceiling or pole mount could not realize.
fn validate_beam_elevation(deg: f64) -> Result<()> {
    if !deg.is_finite() || deg.abs() > 45.0 {
        return Err(Error::Config(format!("beam elevation {deg} deg outside [-45, 45]")));
    }
    Ok(())
}

/// Rejects channel azimuth spreads outside the plausible urban range.
fn validate_azimuth_spread(deg: f64) -> Result<()> {
    if !deg.is_finite() || !(0.0..=30.0).contains(&deg) {
        return Err(Error::Config(format!("azimuth spread {deg} deg outside [0, 30]")));
    }
    Ok(())
}

/// Deterministic indoor sweep: fixed streams, every lattice user once.
pub fn run_indoor_mu(
    scenario: &IndoorScenario,
    codebook: &BeamCodebook,
    lens: bool,
) -> Result<ThroughputReport> {
    scenario.switch.validate()?;
    validate_beam_elevation(scenario.beam_elevation_deg)?;
    validate_azimuth_spread(scenario.azimuth_spread_deg)?;
    if scenario.beam_directions_deg.len() < 2 {
        return Err(Error::Config("indoor scenario needs at least two stream directions".into()));
    }
    let users = scenario.geometry.drop_users()?;
    let tx = scenario.geometry.tx_position();
    let n_streams = scenario.beam_directions_deg.len();
    let radio = MuRadio {
        rc: RadioConstants::ka_band_28ghz(),
        stream_power_mw: linear_from_db(
            scenario.tx_power_dbm
                - 10.0 * (n_streams as f64).log10()
                - scenario.switch.net_loss_db(),
        ),
        noise_mw: linear_from_db(noise_power_dbm(scenario.bandwidth_hz, scenario.noise_figure_db)?),
        leakage_linear: scenario.switch.leakage_linear(),
        bandwidth_hz: scenario.bandwidth_hz,
    };

    // fixed streams: the codebook lobe shape re-pointed at the scenario angles
    let tx_side = if lens {
        TxSide::Beams(
            scenario
                .beam_directions_deg
                .iter()
                .enumerate()
                .map(|(i, dir)| {
                    let mut b = codebook.beams[0].with_azimuth_spread(scenario.azimuth_spread_deg);
                    b.index = i;
                    b.direction_deg = *dir;
                    b.elevation_deg = scenario.beam_elevation_deg;
                    b
                })
                .collect(),
        )
    } else {
        TxSide::Broad { exponent: scenario.no_lens_exponent, streams: n_streams }
    };

    let mut outcomes = Vec::with_capacity(users.len());
    for (user_index, position) in users.iter().enumerate() {
        let (az, el) = bearing_from_tx(&tx, position);
        let mut serving = 0;
        let mut best = f64::NEG_INFINITY;
        for s in 0..n_streams {
            let g = tx_side.gain_dbi(s, az, el);
            if g > best {
                best = g;
                serving = s;
            }
        }
        let excess = blockage_excess_db(&scenario.blockages, position);
        outcomes.push(evaluate_user(&radio, &tx, &tx_side, serving, 0, user_index, position, excess)?);
    }
    let label = format!("indoor_{}", if lens { "lens" } else { "no_lens" });
    let scenario_hash = crate::scenario::content_hash(&(scenario, codebook, lens));
    Ok(ThroughputReport::from_outcomes(label, scenario_hash, 0, lens, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayConfig;
    use crate::beamsteer::make_codebook;
    use crate::em::CutPlane;
    use crate::radiation::pattern_engine;
    use std::sync::LazyLock;

    static CODEBOOK_16: LazyLock<BeamCodebook> = LazyLock::new(|| {
        let cfg = ArrayConfig::steerable_grid(3).unwrap();
        let rc = RadioConstants::ka_band_28ghz();
        let cut = pattern_engine(&cfg, 11, &rc).unwrap().cut(CutPlane::Vertical, 90.0, 0.05).unwrap();
        make_codebook(16, &cut).unwrap()
    });

    #[test]
    fn shannon_hits_the_textbook_points() {
        assert_eq!(shannon_bps(0.0, 1e9).unwrap(), 0.0);
        assert_eq!(shannon_bps(1.0, 1.0).unwrap(), 1.0);
        let high = shannon_bps(10f64.powf(5.15), 2e9).unwrap();
        assert!((high / 1e9 - 34.2).abs() < 0.1, "high-SNR point {high} bps");
        assert!(shannon_bps(-0.1, 1e9).is_err(), "negative sinr must fail");
        assert!(shannon_bps(1.0, 0.0).is_err(), "zero bandwidth must fail");
    }

    #[test]
    fn backhaul_budgets_land_on_their_targets() {
        let rc = RadioConstants::ka_band_28ghz();
        let p = BackhaulParams::default();
        let c2_lens = backhaul_throughput(2, true, &p, &rc).unwrap();
        assert!(
            (c2_lens.throughput_bps - 34.3e9).abs() / 34.3e9 < 0.20,
            "case 2 lens {} Gbps",
            c2_lens.throughput_bps / 1e9
        );
        let c2_bare = backhaul_throughput(2, false, &p, &rc).unwrap();
        assert!(
            (c2_bare.throughput_bps - 18.8e9).abs() / 18.8e9 < 0.25,
            "case 2 no lens {} Gbps",
            c2_bare.throughput_bps / 1e9
        );
        let c1_lens = backhaul_throughput(1, true, &p, &rc).unwrap();
        assert!(
            (c1_lens.throughput_bps - 16.9e9).abs() / 16.9e9 < 0.005,
            "case 1 lens {} Gbps should sit on the calibration target",
            c1_lens.throughput_bps / 1e9
        );
        assert!(!c1_lens.line_of_sight && c1_lens.excess_loss_db > 0.0);
        assert!(backhaul_throughput(3, true, &p, &rc).is_err(), "only cases 1 and 2 exist");
    }

    #[test]
    fn backhaul_case2_matches_hand_arithmetic() {
        let rc = RadioConstants::ka_band_28ghz();
        let p = BackhaulParams::default();
        let b = backhaul_throughput(2, true, &p, &rc).unwrap();
        let snr = 43.0 + 2.0 * p.lens_gain_dbi - b.fspl_db - b.noise_power_dbm;
        assert!((b.snr_db - snr).abs() < 1e-9, "budget snr {} vs hand {snr}", b.snr_db);
        assert!((b.fspl_db - 117.46).abs() < 0.05, "636 m fspl {}", b.fspl_db);
    }

    #[test]
    fn link_level_bound_clears_the_reference_with_margin() {
        let rc = RadioConstants::ka_band_28ghz();
        let r = link_level_budget(&LinkLevelParams::default(), &rc).unwrap();
        assert!(r.exceeds_reference, "Shannon bound {} bps", r.budget.throughput_bps);
        assert!(r.budget.throughput_bps >= LINK_LEVEL_REFERENCE_BPS);
        assert_eq!(r.qam64_ceiling_bps, 4.8e9);
        assert!((r.budget.fspl_db - 58.29).abs() < 0.05, "0.7 m fspl {}", r.budget.fspl_db);
        // the bound keeps holding at the minimum quoted horn gain
        let weak = LinkLevelParams { horn_gain_dbi: 10.0, ..Default::default() };
        let r = link_level_budget(&weak, &rc).unwrap();
        assert!(r.budget.throughput_bps >= LINK_LEVEL_REFERENCE_BPS);
    }

    fn small_outdoor() -> OutdoorScenario {
        OutdoorScenario { trials: 12, ..Default::default() }
    }

    #[test]
    fn outdoor_runs_are_bit_identical_across_seeds_and_workers() {
        let sc = small_outdoor();
        let a = run_outdoor_mu(&sc, &CODEBOOK_16, true, 7, 1).unwrap();
        let b = run_outdoor_mu(&sc, &CODEBOOK_16, true, 7, 4).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "worker count must not change the report");
        let c = run_outdoor_mu(&sc, &CODEBOOK_16, true, 7, 0).unwrap();
        assert_eq!(a.to_json(), c.to_json(), "default pool must match");
        let d = run_outdoor_mu(&sc, &CODEBOOK_16, true, 8, 1).unwrap();
        assert_ne!(a.to_json(), d.to_json(), "different seed must change the draw");
    }

    #[test]
    fn outdoor_outcome_counts_and_cdf_shape() {
        let sc = small_outdoor();
        let r = run_outdoor_mu(&sc, &CODEBOOK_16, true, 7, 2).unwrap();
        assert_eq!(r.outcomes.len(), sc.trials * sc.users_per_trial);
        assert_eq!(r.cdf.len(), r.outcomes.len());
        for w in r.cdf.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 > w[0].1, "CDF must be sorted and increasing");
        }
        assert!((r.cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
        assert!(r.max_bps >= r.median_bps && r.median_bps <= r.mean_bps * 2.0);
    }

    #[test]
    fn lensless_outdoor_saturates_at_the_equal_share_bound() {
        let sc = small_outdoor();
        let r = run_outdoor_mu(&sc, &CODEBOOK_16, false, 7, 2).unwrap();
        // four equal-gain interferers bound SINR by 1/4
        let bound = sc.bandwidth_hz * (1.0 + 0.25f64).log2();
        assert!(
            r.max_bps <= bound + 1.0,
            "no-lens max {} exceeds the equal-share bound {bound}",
            r.max_bps
        );
    }

    #[test]
    fn single_user_trials_have_no_interference() {
        let sc = OutdoorScenario { users_per_trial: 1, trials: 4, ..Default::default() };
        let r = run_outdoor_mu(&sc, &CODEBOOK_16, true, 3, 1).unwrap();
        for o in &r.outcomes {
            assert_eq!(o.interference_dbm, INTERFERENCE_FLOOR_DBM);
            let snr = o.signal_dbm
                - noise_power_dbm(sc.bandwidth_hz, sc.noise_figure_db).unwrap();
            assert!((o.sinr_db - snr).abs() < 1e-9, "SINR {} vs SNR {snr}", o.sinr_db);
        }
    }

    #[test]
    fn colocated_users_share_a_beam_and_split_capacity() {
        // closed form: identical serving and interfering gains, no leakage
        let (s, i, sinr) = user_sinr_linear(2.0, 0.5, 3.0, &[3.0], 0.0, 1e-12);
        assert!((s - 3.0).abs() < 1e-12 && (i - 3.0).abs() < 1e-12);
        assert!((sinr - 1.0).abs() < 1e-9, "equal powers give 0 dB SINR, got {sinr}");
        // and the leakage term adds on top of the pattern term
        let (_, i, _) = user_sinr_linear(2.0, 0.5, 3.0, &[3.0], 0.1, 0.0);
        assert!((i - (3.0 + 0.1 * 3.0)).abs() < 1e-12, "leakage-augmented interference {i}");
    }

    #[test]
    fn indoor_sweep_covers_every_user_deterministically() {
        let sc = IndoorScenario::default();
        let a = run_indoor_mu(&sc, &CODEBOOK_16, true).unwrap();
        assert_eq!(a.outcomes.len(), 300);
        let b = run_indoor_mu(&sc, &CODEBOOK_16, true).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        // both streams actually serve someone
        assert!(a.outcomes.iter().any(|o| o.beam == 0));
        assert!(a.outcomes.iter().any(|o| o.beam == 1));
        // users left of the axis take the left stream
        let left = a.outcomes.iter().find(|o| o.position.x_m < 5.0).unwrap();
        assert_eq!(left.beam, 0, "left-side user served by the -60 deg stream");
    }

    #[test]
    fn indoor_lens_beats_no_lens_on_average() {
        let sc = IndoorScenario::default();
        let lens = run_indoor_mu(&sc, &CODEBOOK_16, true).unwrap();
        let bare = run_indoor_mu(&sc, &CODEBOOK_16, false).unwrap();
        assert!(
            lens.mean_bps > bare.mean_bps,
            "lens {} vs bare {}",
            lens.mean_bps,
            bare.mean_bps
        );
    }

    #[test]
    fn blockage_zones_lower_the_blocked_users_only() {
        let mut sc = IndoorScenario::default();
        let clear = run_indoor_mu(&sc, &CODEBOOK_16, true).unwrap();
        sc.blockages = vec![BlockageZone {
            x_min_m: 20.0,
            x_max_m: 26.0,
            y_min_m: 4.0,
            y_max_m: 8.0,
            excess_loss_db: 25.0,
        }];
        let blocked = run_indoor_mu(&sc, &CODEBOOK_16, true).unwrap();
        let mut affected = 0;
        for (c, b) in clear.outcomes.iter().zip(&blocked.outcomes) {
            let inside = sc.blockages[0].contains(&c.position);
            if inside {
                affected += 1;
                assert!(
                    b.signal_dbm < c.signal_dbm - 20.0,
                    "blocked user at ({}, {}) lost too little",
                    c.position.x_m,
                    c.position.y_m
                );
            } else {
                assert_eq!(b.signal_dbm, c.signal_dbm, "clear users must be untouched");
            }
        }
        assert!(affected > 0, "the zone must cover some lattice users");
    }

    #[test]
    fn cdf_csv_embeds_hash_and_seed() {
        let sc = OutdoorScenario { trials: 2, ..Default::default() };
        let r = run_outdoor_mu(&sc, &CODEBOOK_16, true, 11, 1).unwrap();
        let csv = r.cdf_csv();
        assert!(csv.starts_with("# scenario_hash="));
        assert!(csv.contains("\n# seed=11\n"));
        assert!(csv.contains("\nthroughput_bps,cdf\n"));
        assert_eq!(csv.lines().count(), 3 + r.cdf.len());
    }
}
