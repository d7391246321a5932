//! Run configuration: TOML job configs, shipped presets, and content
//! hashing so every artifact can name the exact inputs that produced it.
//!
//! Each CLI subcommand deserializes one config struct from here. Configs
//! reject unknown keys outright (a typo must fail loudly, not silently run
//! the default), and every field has a default so presets only spell out
//! what they change.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::array::{ArrayConfig, ArrayKind, PatchElement};
use crate::error::{Error, Result};
use crate::syssim::{IndoorScenario, OutdoorScenario};

/// Seed used when a run does not specify one; never wall clock.
pub const DEFAULT_SEED: u64 = 7;

/// SHA-256 over the canonical JSON encoding of any serializable value.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types serialize");
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Parse a TOML config, mapping syntax and unknown-key problems to a
/// config error.
pub fn from_toml_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
}

// ── array description ───────────────────────────────────────────────────────

/// Flat, human-editable description of an antenna build.
///
/// `kind` picks the construction; the optional fields apply only where
/// they make sense and are rejected elsewhere. Calibrated parameters can
/// be overridden for what-if studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    /// One of `steerable_grid`, `steerable_line`, `bare_grid`, `bare_line`,
    /// `fixed_beam`, `bare_block`.
    pub kind: String,
    /// Lens size index 1..=3 for steerable kinds.
    pub lens_size: Option<u32>,
    /// Unit-cube tiling for `fixed_beam`.
    pub units_x: Option<u32>,
    pub units_y: Option<u32>,
    /// Set false to strip the lens off a `fixed_beam` tiling.
    pub with_lens: Option<bool>,
    /// Override the patch element's cosine exponent.
    pub element_exponent: Option<f64>,
    /// Override the calibrated feed illumination exponent.
    pub illumination_exponent: Option<f64>,
    /// Override the calibrated lens power efficiency.
    pub lens_efficiency: Option<f64>,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self {
            kind: "steerable_grid".into(),
            lens_size: None,
            units_x: None,
            units_y: None,
            with_lens: None,
            element_exponent: None,
            illumination_exponent: None,
            lens_efficiency: None,
        }
    }
}

impl ArraySection {
    pub fn build(&self) -> Result<ArrayConfig> {
        let steerable_only = |name: &str, set: bool| -> Result<()> {
            if set {
                return Err(Error::Config(format!(
                    "`{name}` applies only to steerable kinds, not `{}`",
                    self.kind
                )));
            }
            Ok(())
        };
        let fixed_only = |name: &str, set: bool| -> Result<()> {
            if set {
                return Err(Error::Config(format!(
                    "`{name}` applies only to `fixed_beam`, not `{}`",
                    self.kind
                )));
            }
            Ok(())
        };
        let mut cfg = match self.kind.as_str() {
            "steerable_grid" | "steerable_line" => {
                fixed_only("units_x", self.units_x.is_some())?;
                fixed_only("units_y", self.units_y.is_some())?;
                fixed_only("with_lens", self.with_lens.is_some())?;
                let size = self.lens_size.unwrap_or(3);
                if self.kind == "steerable_grid" {
                    ArrayConfig::steerable_grid(size)?
                } else {
                    ArrayConfig::steerable_line(size)?
                }
            }
            "bare_grid" | "bare_line" => {
                steerable_only("lens_size", self.lens_size.is_some())?;
                fixed_only("units_x", self.units_x.is_some())?;
                fixed_only("units_y", self.units_y.is_some())?;
                fixed_only("with_lens", self.with_lens.is_some())?;
                if self.kind == "bare_grid" {
                    ArrayConfig::bare_grid()
                } else {
                    ArrayConfig::bare_line()
                }
            }
            "fixed_beam" => {
                steerable_only("lens_size", self.lens_size.is_some())?;
                let ux = self.units_x.unwrap_or(1);
                let uy = self.units_y.unwrap_or(1);
                let mut cfg = ArrayConfig::fixed_beam(ux, uy)?;
                if self.with_lens == Some(false) {
                    cfg.kind = ArrayKind::FixedBeam { units_x: ux, units_y: uy, with_lens: false };
                    cfg.lens_efficiency = 1.0;
                }
                cfg
            }
            "bare_block" => {
                steerable_only("lens_size", self.lens_size.is_some())?;
                fixed_only("units_x", self.units_x.is_some())?;
                fixed_only("units_y", self.units_y.is_some())?;
                fixed_only("with_lens", self.with_lens.is_some())?;
                ArrayConfig::bare_cube_block()
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown array kind `{other}`; expected steerable_grid, steerable_line, \
                     bare_grid, bare_line, fixed_beam, or bare_block"
                )))
            }
        };
        if let Some(e) = self.element_exponent {
            cfg.element = PatchElement::new(e)?;
        }
        if let Some(q) = self.illumination_exponent {
            if !(q.is_finite() && q >= 0.0) {
                return Err(Error::NonPositive { name: "illumination_exponent", value: q });
            }
            cfg.illumination_exponent = q;
        }
        if let Some(eta) = self.lens_efficiency {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!(
                    "lens_efficiency {eta} outside (0, 1]; an efficiency cannot add power"
                )));
            }
            cfg.lens_efficiency = eta;
        }
        Ok(cfg)
    }
}

// ── per-command job configs ─────────────────────────────────────────────────

/// Config for the `pattern` and `steermap` commands.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayJobConfig {
    pub array: ArraySection,
    /// Active feed port for `pattern`; `steermap` sweeps all ports.
    pub port: u32,
}

impl ArrayJobConfig {
    pub fn port_or_first(&self) -> u32 {
        if self.port == 0 {
            1
        } else {
            self.port
        }
    }
}

/// Config for the outdoor `mumimo` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutdoorMuConfig {
    pub scenario: OutdoorScenario,
    /// Codebook sizes to sweep.
    pub beams: Vec<usize>,
    /// Transmitter heights to run; reports for every height sit side by
    /// side in the output set.
    pub heights_m: Vec<f64>,
}

impl Default for OutdoorMuConfig {
    fn default() -> Self {
        Self {
            scenario: OutdoorScenario::default(),
            beams: vec![8, 16, 32, 64],
            heights_m: vec![3.0, 6.0],
        }
    }
}

/// Config for the indoor `mumimo` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndoorMuConfig {
    pub scenario: IndoorScenario,
    /// Codebook whose lobe shape the fixed streams borrow.
    pub codebook_size: usize,
}

impl Default for IndoorMuConfig {
    fn default() -> Self {
        Self { scenario: IndoorScenario::default(), codebook_size: 8 }
    }
}

// ── shipped presets ─────────────────────────────────────────────────────────

/// Preset names and their TOML bodies, compiled into the library.
const PRESETS: &[(&str, &str)] = &[
    ("steerable_4x4_d1", include_str!("../presets/steerable_4x4_d1.toml")),
    ("steerable_4x4_d2", include_str!("../presets/steerable_4x4_d2.toml")),
    ("steerable_4x4_d3", include_str!("../presets/steerable_4x4_d3.toml")),
    ("steerable_1x4_d3", include_str!("../presets/steerable_1x4_d3.toml")),
    ("bare_4x4", include_str!("../presets/bare_4x4.toml")),
    ("fixed_1x1", include_str!("../presets/fixed_1x1.toml")),
    ("fixed_2x2", include_str!("../presets/fixed_2x2.toml")),
    ("bare_block", include_str!("../presets/bare_block.toml")),
    ("backhaul", include_str!("../presets/backhaul.toml")),
    ("outdoor_mu", include_str!("../presets/outdoor_mu.toml")),
    ("indoor_mu", include_str!("../presets/indoor_mu.toml")),
    ("linklevel", include_str!("../presets/linklevel.toml")),
];

/// TOML body of a named preset.
pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, body)| *body)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
