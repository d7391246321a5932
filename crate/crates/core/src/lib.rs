//! Simulator for 28 GHz lens-embedded antenna arrays.
//!
//! The library models two builds of the same idea: a beam-switching array
//! whose feed grid sits in the focal plane of a dielectric lens (activate a
//! different port, get a different beam), and a static array of lens-capped
//! 2 x 2 patch units for fixed point-to-point links. On top of the antenna
//! layer sit the system experiments: steering maps, multi-beam codebooks,
//! long-range link budgets, and seeded multi-user throughput Monte Carlo.
//!
//! Layering, bottom up:
//!
//! * [`em`]: units, angular grids, aperture field containers.
//! * [`lens`]: hyperbolic lens geometry and the thin-phase-screen feed
//!   transform.
//! * [`array`]: patch elements, feed layouts, array builds.
//! * [`radiation`]: far-field evaluation, normalization, cuts, widths.
//! * [`beamsteer`]: steering maps, port selection, codebooks, switch loss.
//! * [`channel`]: path loss, links, blockage, scenario geometry.
//! * [`syssim`]: link budgets and multi-user SINR/throughput runs.
//! * [`calibrate`]: solves the model's four free parameters and carries
//!   the frozen results every default construction uses.
//! * [`scenario`]: TOML job configs, shipped presets, content hashing.
//!
//! ```
//! use lenssim::channel::fspl_db;
//! use lenssim::em::RadioConstants;
//! use lenssim::lens::LensSpec;
//!
//! let rc = RadioConstants::ka_band_28ghz();
//! let lens = LensSpec::sized(3)?;
//! assert!((lens.diameter_m - 0.155).abs() < 1e-12);
//! assert!((lens.focal_length_m - 0.186).abs() < 1e-12);
//! // a 636 m hop costs about 117.5 dB of spreading loss
//! assert!((fspl_db(636.0, &rc)? - 117.5).abs() < 0.1);
//! # Ok::<(), lenssim::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod array;
pub mod beamsteer;
pub mod calibrate;
pub mod channel;
pub mod em;
pub mod error;
pub mod lens;
pub mod radiation;
pub mod scenario;
pub mod syssim;

pub use error::{Error, Result};
