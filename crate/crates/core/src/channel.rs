//! Geometric 28 GHz propagation and scenario geometry.
//!
//! The channel model is deliberately small: free-space path loss plus an
//! additive excess-loss term for obstructed links and blockage zones. User
//! populations are deterministic lattices (the spacing fixes the count);
//! which users participate in a trial is the only randomized step, and that
//! lives in the system simulator.
//!
//! Scenario frames put the transmitter boresight along +y, x to the right,
//! z up. `bearing_deg` maps a receiver position into the (azimuth,
//! elevation) pair that antenna gain profiles consume.

use serde::{Deserialize, Serialize};

use crate::em::{db_from_linear, RadioConstants};
use crate::error::{Error, Result};

// ── points and bearings ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl Point3 {
    pub fn new(x_m: f64, y_m: f64, z_m: f64) -> Self {
        Self { x_m, y_m, z_m }
    }

    pub fn distance_m(&self, other: &Point3) -> f64 {
        let dx = self.x_m - other.x_m;
        let dy = self.y_m - other.y_m;
        let dz = self.z_m - other.z_m;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Azimuth/elevation (degrees) of the direction from `from` to `to` in the
/// scenario frame: azimuth positive toward +x, zero along +y; elevation
/// positive upward.
pub fn bearing_deg(from: &Point3, to: &Point3) -> (f64, f64) {
    let dx = to.x_m - from.x_m;
    let dy = to.y_m - from.y_m;
    let dz = to.z_m - from.z_m;
    let horizontal = (dx * dx + dy * dy).sqrt();
    (dx.atan2(dy).to_degrees(), dz.atan2(horizontal).to_degrees())
}

// ── path loss ───────────────────────────────────────────────────────────────

/// Free-space path loss, 20 log10(4 pi d / lambda), dB.
pub fn fspl_db(distance_m: f64, rc: &RadioConstants) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::NonPositive { name: "distance_m", value: distance_m });
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * distance_m / rc.wavelength_m).log10())
}

/// Thermal noise floor: -174 dBm/Hz + 10 log10(B) + noise figure.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(Error::NonPositive { name: "bandwidth_hz", value: bandwidth_hz });
    }
    Ok(-174.0 + db_from_linear(bandwidth_hz) + noise_figure_db)
}

/// One point-to-point link with its obstruction state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub tx_m: Point3,
    pub rx_m: Point3,
    pub line_of_sight: bool,
    pub excess_loss_db: f64,
}

impl Link {
    pub fn new(tx_m: Point3, rx_m: Point3, line_of_sight: bool, excess_loss_db: f64) -> Result<Self> {
        if tx_m.distance_m(&rx_m) <= 0.0 {
            return Err(Error::NonPositive { name: "link distance", value: 0.0 });
        }
        if !(excess_loss_db.is_finite() && excess_loss_db >= 0.0) {
            return Err(Error::Config(format!("excess loss {excess_loss_db} dB must be >= 0")));
        }
        if line_of_sight && excess_loss_db != 0.0 {
            return Err(Error::Config(
                "a line-of-sight link cannot carry excess loss".into(),
            ));
        }
        Ok(Self { tx_m, rx_m, line_of_sight, excess_loss_db })
    }

    pub fn clear(tx_m: Point3, rx_m: Point3) -> Result<Self> {
        Self::new(tx_m, rx_m, true, 0.0)
    }

    pub fn obstructed(tx_m: Point3, rx_m: Point3, excess_loss_db: f64) -> Result<Self> {
        Self::new(tx_m, rx_m, false, excess_loss_db)
    }

    pub fn distance_m(&self) -> f64 {
        self.tx_m.distance_m(&self.rx_m)
    }
}

/// End-to-end link gain in dB: antenna gains toward each other minus path
/// and excess loss. Symmetric under Tx/Rx exchange with exchanged gains.
pub fn link_gain_db(
    link: &Link,
    rc: &RadioConstants,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
) -> Result<f64> {
    Ok(tx_gain_dbi + rx_gain_dbi - fspl_db(link.distance_m(), rc)? - link.excess_loss_db)
}

// ── blockage zones ──────────────────────────────────────────────────────────

/// Axis-aligned floor region that adds excess loss to any user inside it.
/// A zone stands in for furniture or partition clusters; the loss applies to
/// the Tx-user link as a whole (no ray tracing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockageZone {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub excess_loss_db: f64,
}

impl BlockageZone {
    pub fn contains(&self, p: &Point3) -> bool {
        p.x_m >= self.x_min_m && p.x_m <= self.x_max_m && p.y_m >= self.y_min_m && p.y_m <= self.y_max_m
    }
}

/// Total blockage excess (dB) for a user position.
pub fn blockage_excess_db(zones: &[BlockageZone], rx: &Point3) -> f64 {
    zones.iter().filter(|z| z.contains(rx)).map(|z| z.excess_loss_db).sum()
}

// ── user lattices ───────────────────────────────────────────────────────────

/// Street-canyon strip: Tx on the short edge at x = 0, users filling the
/// strip in front of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutdoorGeometry {
    pub span_across_m: f64,
    pub span_along_m: f64,
    pub spacing_m: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
}

impl Default for OutdoorGeometry {
    fn default() -> Self {
        Self {
            span_across_m: 20.0,
            span_along_m: 200.0,
            spacing_m: 2.0,
            tx_height_m: 3.0,
            rx_height_m: 3.0,
        }
    }
}

impl OutdoorGeometry {
    pub fn tx_position(&self) -> Point3 {
        Point3::new(0.0, 0.0, self.tx_height_m)
    }

    /// Deterministic user lattice: symmetric columns across the strip
    /// (edges included), cell-centered rows along it. The default geometry
    /// yields 11 x 100 = 1100 users.
    pub fn drop_users(&self) -> Result<Vec<Point3>> {
        let s = self.spacing_m;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NonPositive { name: "spacing_m", value: s });
        }
        if s > self.span_across_m || s > self.span_along_m {
            return Err(Error::EmptyDrop(format!(
                "spacing {s} m exceeds the {} x {} m area",
                self.span_across_m, self.span_along_m
            )));
        }
        let nx = (self.span_across_m / s).floor() as i64 + 1;
        let ny = (self.span_along_m / s).round() as i64;
        let mut users = Vec::with_capacity((nx * ny) as usize);
        for j in 0..ny {
            let y = s / 2.0 + j as f64 * s;
            for i in 0..nx {
                let x = -self.span_across_m / 2.0 + i as f64 * s;
                users.push(Point3::new(x, y, self.rx_height_m));
            }
        }
        if users.is_empty() {
            return Err(Error::EmptyDrop("no users fit the outdoor area".into()));
        }
        Ok(users)
    }
}

/// Rectangular room: Tx centered on the y = 0 wall, boresight into the room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndoorGeometry {
    pub room_x_m: f64,
    pub room_y_m: f64,
    pub spacing_m: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
}

impl Default for IndoorGeometry {
    fn default() -> Self {
        Self { room_x_m: 30.0, room_y_m: 10.0, spacing_m: 1.0, tx_height_m: 3.0, rx_height_m: 1.5 }
    }
}

impl IndoorGeometry {
    pub fn tx_position(&self) -> Point3 {
        Point3::new(self.room_x_m / 2.0, 0.0, self.tx_height_m)
    }

    /// Cell-centered lattice over the whole floor; the default room gives
    /// 30 x 10 = 300 users.
    pub fn drop_users(&self) -> Result<Vec<Point3>> {
        let s = self.spacing_m;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NonPositive { name: "spacing_m", value: s });
        }
        let nx = (self.room_x_m / s).round() as i64;
        let ny = (self.room_y_m / s).round() as i64;
        if nx < 1 || ny < 1 {
            return Err(Error::EmptyDrop(format!(
                "spacing {s} m exceeds the {} x {} m room",
                self.room_x_m, self.room_y_m
            )));
        }
        let mut users = Vec::with_capacity((nx * ny) as usize);
        for j in 0..ny {
            let y = s / 2.0 + j as f64 * s;
            for i in 0..nx {
                let x = s / 2.0 + i as f64 * s;
                users.push(Point3::new(x, y, self.rx_height_m));
            }
        }
        Ok(users)
    }
}

/// Scenario frame: Tx boresight +y. Bearing of `rx` seen from `tx`.
pub fn bearing_from_tx(tx: &Point3, rx: &Point3) -> (f64, f64) {
    bearing_deg(tx, rx)
}
