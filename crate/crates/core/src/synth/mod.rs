//! Generative world model: base stations with log-distance path loss and
//! frozen log-normal shadowing, hand-off hysteresis, and a decreasing
//! signal-to-power map with application noise. Every drive it simulates
//! carries per-sample ground truth, so the estimators can be scored without
//! any real-device data.

mod drive;
mod field;
pub mod fixtures;
mod library;

pub use drive::{inject_transient, simulate_drive, DriveRecord};
pub use library::{build_reference_library, LibrarySpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LatLon, LocalFrame, Route};

/// Transmit power of the reference station: a station at this power yields
/// exactly `reference_signal_dbm` at the reference distance.
pub const TX_REF_DBM: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub lat: f64,
    pub lon: f64,
    pub tx_power_dbm: f64,
}

/// Signal-to-power mapping: radio draw is `radio_coefficient_mw * g(signal)`
/// where `g` is affine and decreasing between the two anchor signal levels,
/// clipped outside, with `g(best) = 1` and `g(worst) = worst_to_best_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    pub base_draw_mw: f64,
    pub radio_coefficient_mw: f64,
    pub best_signal_dbm: f64,
    pub worst_signal_dbm: f64,
    pub worst_to_best_ratio: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            base_draw_mw: 800.0,
            radio_coefficient_mw: 600.0,
            best_signal_dbm: -50.0,
            worst_signal_dbm: -110.0,
            worst_to_best_ratio: 1.5,
        }
    }
}

/// Measurement noise: per-sample Gaussian jitter plus transient events
/// (phone-call-shaped rectangular surges with Poisson arrivals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub gaussian_sigma_mw: f64,
    /// Expected transient events per second; 0 disables them.
    pub transient_rate_hz: f64,
    pub transient_min_s: f64,
    pub transient_max_s: f64,
    /// Amplitude bounds as multiples of the base draw.
    pub transient_min_amp: f64,
    pub transient_max_amp: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            gaussian_sigma_mw: 40.0,
            transient_rate_hz: 0.0,
            transient_min_s: 20.0,
            transient_max_s: 90.0,
            transient_min_amp: 2.0,
            transient_max_amp: 4.0,
        }
    }
}

/// Speed randomization used when sampling drive plans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicsConfig {
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    /// Probability of a stop (traffic light) at a segment entry.
    pub stop_probability: f64,
    pub stop_min_s: f64,
    pub stop_max_s: f64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        KinematicsConfig {
            speed_min_mps: 8.0,
            speed_max_mps: 16.0,
            stop_probability: 0.25,
            stop_min_s: 5.0,
            stop_max_s: 25.0,
        }
    }
}

/// Full description of a synthetic world. The seed freezes the shadow
/// fields: signal strength is a pure function of (seed, station, position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub seed: u64,
    /// Origin of the local tangent plane all geometry is projected onto.
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub base_stations: Vec<BaseStation>,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    pub reference_signal_dbm: f64,
    pub shadowing_sigma_db: f64,
    pub shadow_grid_m: f64,
    pub hysteresis_margin_db: f64,
    pub sample_rate_hz: f64,
    pub power: PowerModel,
    pub noise: NoiseModel,
    pub kinematics: KinematicsConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 0,
            origin_lat: 37.0,
            origin_lon: -122.0,
            base_stations: Vec::new(),
            path_loss_exponent: 2.0,
            reference_distance_m: 10.0,
            reference_signal_dbm: -40.0,
            shadowing_sigma_db: 6.0,
            shadow_grid_m: 50.0,
            hysteresis_margin_db: 4.0,
            sample_rate_hz: 10.0,
            power: PowerModel::default(),
            noise: NoiseModel::default(),
            kinematics: KinematicsConfig::default(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_stations.is_empty() {
            return Err(Error::invalid("world", "at least one base station required"));
        }
        if !(self.path_loss_exponent > 0.0)
            || !(self.reference_distance_m > 0.0)
            || !(self.shadowing_sigma_db >= 0.0)
            || !(self.hysteresis_margin_db >= 0.0)
            || !(self.sample_rate_hz > 0.0)
            || !(self.shadow_grid_m > 0.0)
            || !(self.power.base_draw_mw >= 0.0)
        {
            return Err(Error::invalid("world", "parameter out of range"));
        }
        LatLon::new(self.origin_lat, self.origin_lon)?;
        for bs in &self.base_stations {
            LatLon::new(bs.lat, bs.lon)?;
        }
        Ok(())
    }
}

/// A world with its projection frame and station positions resolved.
#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    frame: LocalFrame,
    stations_xy: Vec<(f64, f64)>,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let frame = LocalFrame::new(LatLon::new(config.origin_lat, config.origin_lon)?);
        let stations_xy = config
            .base_stations
            .iter()
            .map(|bs| frame.to_xy(LatLon { lat: bs.lat, lon: bs.lon }))
            .collect();
        Ok(World {
            config,
            frame,
            stations_xy,
        })
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    pub fn station_count(&self) -> usize {
        self.stations_xy.len()
    }

    /// Received signal in dBm from station `bs` at `position`:
    /// `P0 + (tx - tx_ref) - 10 n log10(max(d, d0) / d0) + shadow`.
    pub fn signal_strength_at(&self, position: LatLon, bs: usize) -> f64 {
        let (x, y) = self.frame.to_xy(position);
        self.signal_xy(x, y, bs)
    }

    pub(crate) fn signal_xy(&self, x: f64, y: f64, bs: usize) -> f64 {
        let cfg = &self.config;
        let (sx, sy) = self.stations_xy[bs];
        let d = ((x - sx).powi(2) + (y - sy).powi(2))
            .sqrt()
            .max(cfg.reference_distance_m);
        let path_loss = 10.0 * cfg.path_loss_exponent * (d / cfg.reference_distance_m).log10();
        let shadow = if cfg.shadowing_sigma_db > 0.0 {
            cfg.shadowing_sigma_db
                * field::value_noise(
                    cfg.seed,
                    bs as u32,
                    x / cfg.shadow_grid_m,
                    y / cfg.shadow_grid_m,
                )
        } else {
            0.0
        };
        cfg.reference_signal_dbm + (cfg.base_stations[bs].tx_power_dbm - TX_REF_DBM) - path_loss
            + shadow
    }

    /// One hysteresis step: switch to the strongest other station only when
    /// it beats the current one by strictly more than the margin.
    pub fn handoff_step(&self, position: LatLon, current_bs: usize) -> usize {
        let (x, y) = self.frame.to_xy(position);
        self.handoff_xy(x, y, current_bs)
    }

    pub(crate) fn handoff_xy(&self, x: f64, y: f64, current_bs: usize) -> usize {
        let current = self.signal_xy(x, y, current_bs);
        let mut best = current_bs;
        let mut best_signal = f64::NEG_INFINITY;
        for bs in 0..self.stations_xy.len() {
            if bs == current_bs {
                continue;
            }
            let s = self.signal_xy(x, y, bs);
            if s > best_signal {
                best_signal = s;
                best = bs;
            }
        }
        if best_signal - current > self.config.hysteresis_margin_db {
            best
        } else {
            current_bs
        }
    }

    /// Strongest station at a position, lowest index on ties. Initial
    /// attachment before any hysteresis memory exists.
    pub(crate) fn strongest_xy(&self, x: f64, y: f64) -> usize {
        let mut best = 0;
        let mut best_signal = f64::NEG_INFINITY;
        for bs in 0..self.stations_xy.len() {
            let s = self.signal_xy(x, y, bs);
            if s > best_signal {
                best_signal = s;
                best = bs;
            }
        }
        best
    }

    /// Radio draw multiplier for a received signal level.
    pub(crate) fn signal_to_draw(&self, signal_dbm: f64) -> f64 {
        let p = &self.config.power;
        let t = ((p.best_signal_dbm - signal_dbm) / (p.best_signal_dbm - p.worst_signal_dbm))
            .clamp(0.0, 1.0);
        1.0 + (p.worst_to_best_ratio - 1.0) * t
    }
}

/// A concrete drive: a route plus realized per-segment kinematics. Two plans
/// with the same route and spans but different noise seeds produce distinct
/// traces over identical ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivePlan {
    pub route: Route,
    pub spans: Vec<SpeedSpan>,
    pub noise_seed: u64,
}

/// Kinematics of one segment traversal: an optional stop at the segment
/// entry followed by a constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSpan {
    pub speed_mps: f64,
    pub stop_s: f64,
}

impl DrivePlan {
    /// Fixed-speed plan with no stops.
    pub fn constant(route: Route, speed_mps: f64, noise_seed: u64) -> Self {
        let spans = vec![
            SpeedSpan {
                speed_mps,
                stop_s: 0.0,
            };
            route.len_segments()
        ];
        DrivePlan {
            route,
            spans,
            noise_seed,
        }
    }

    /// Randomized plan: per-segment speed uniform in the configured range,
    /// stop events at segment entries with the configured probability.
    pub fn sample(route: Route, kin: &KinematicsConfig, rng: &mut impl rand::Rng) -> Self {
        let spans = (0..route.len_segments())
            .map(|_| {
                let speed_mps = rng.random_range(kin.speed_min_mps..=kin.speed_max_mps);
                let stop_s = if rng.random_bool(kin.stop_probability) {
                    rng.random_range(kin.stop_min_s..=kin.stop_max_s)
                } else {
                    0.0
                };
                SpeedSpan { speed_mps, stop_s }
            })
            .collect();
        let noise_seed = rng.random();
        DrivePlan {
            route,
            spans,
            noise_seed,
        }
    }
}
