//! Flat TOML run configuration.
//!
//! Every key is optional; omitted keys take the defaults below. Angles are in
//! degrees, distances in meters, times in seconds. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{default_rx_gains, default_tx_gains, RadioParams, ShadowingProfile};
use crate::deployment::DeploymentParams;
use crate::detection::{Centering, DetectorConfig};
use crate::error::{Error, Result};
use crate::geometry::{Point2, SectorLayout};
use crate::scenario::{BlockerSpec, ErrorBinning, EstimatorMode, MotionModel, ScenarioConfig};
use crate::sensing::Scheduling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    #[default]
    Raster,
    RandomWaypoint,
    Waypoints,
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub radius_m: f64,
    pub bs_density: f64,
    pub ue_density: f64,

    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub fading: bool,
    pub nakagami_m: f64,
    pub tx_beamwidth_deg: f64,
    pub rx_beamwidth_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_main_tx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_side_tx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_main_rx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_side_rx: Option<f64>,
    pub blockage_attenuation_db: f64,
    pub min_distance_m: f64,
    pub shadowing: ShadowingProfile,

    pub sector_width_deg: f64,
    pub window_s: f64,
    pub dt_s: f64,
    pub scheduling: Scheduling,

    pub estimator: EstimatorMode,
    pub detection_threshold: f64,
    pub detection_centering: Centering,
    pub detection_noise_floor_db: f64,
    pub detection_recent_rows: usize,

    pub cooperators: usize,
    pub include_reference: bool,
    pub min_bearings: usize,

    pub blocker: bool,
    pub blocker_radius_m: f64,
    pub motion: MotionKind,
    pub speed_mps: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub raster_side_m: f64,
    /// Defaults to `grid_cell_m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raster_lane_spacing_m: Option<f64>,
    pub waypoints: Vec<[f64; 2]>,

    /// Defaults to warm-up plus one raster pass for raster motion, and to
    /// warm-up plus 1000 s otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    pub seed: u64,
    pub repetitions: usize,
    pub workers: usize,
    pub output_dir: String,
    pub trace_detections: bool,

    pub grid_cell_m: f64,
    pub central_radius_m: f64,
    pub bin_by: ErrorBinning,
    /// Score steps without a fresh estimate with the estimate still held.
    pub score_carried: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let radio = RadioParams::default();
        let dep = DeploymentParams::default();
        let det = DetectorConfig::default();
        Self {
            radius_m: dep.radius,
            bs_density: dep.bs_density,
            ue_density: dep.ue_density,
            carrier_hz: radio.carrier_hz,
            bandwidth_hz: radio.bandwidth_hz,
            tx_power_dbm: radio.tx_power_dbm,
            noise_psd_dbm_hz: radio.noise_psd_dbm_hz,
            fading: true,
            nakagami_m: radio.nakagami_m,
            tx_beamwidth_deg: radio.tx_beamwidth.to_degrees(),
            rx_beamwidth_deg: radio.rx_beamwidth.to_degrees(),
            gain_main_tx: None,
            gain_side_tx: None,
            gain_main_rx: None,
            gain_side_rx: None,
            blockage_attenuation_db: radio.blockage_attenuation_db,
            min_distance_m: radio.min_distance,
            shadowing: radio.shadowing,
            sector_width_deg: 10.0,
            window_s: 50.0,
            dt_s: 1.0,
            scheduling: Scheduling::Static,
            estimator: EstimatorMode::Svd,
            detection_threshold: det.threshold,
            detection_centering: det.centering,
            detection_noise_floor_db: det.noise_floor_db,
            detection_recent_rows: det.recent_rows,
            cooperators: 10,
            include_reference: true,
            min_bearings: 1,
            blocker: true,
            blocker_radius_m: 1.0,
            motion: MotionKind::Raster,
            speed_mps: 1.0,
            speed_min_mps: 0.5,
            speed_max_mps: 2.0,
            raster_side_m: 50.0,
            raster_lane_spacing_m: None,
            waypoints: Vec::new(),
            duration_s: None,
            seed: 0,
            repetitions: 10,
            workers: 0,
            output_dir: "out".into(),
            trace_detections: false,
            grid_cell_m: 3.0,
            central_radius_m: 15.0,
            bin_by: ErrorBinning::TruePosition,
            score_carried: true,
        }
    }
}

/// Steps per interval, rejecting intervals that are not whole multiples of `dt`.
fn whole_steps(field: &'static str, seconds: f64, dt: f64) -> Result<usize> {
    let n = seconds / dt;
    if !(n.is_finite() && n >= 0.0) || (n - n.round()).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid(field, format!("{seconds} s is not a whole number of {dt} s steps")));
    }
    Ok(n.round() as usize)
}

/// Default post-warm-up duration for non-raster motion (s).
const DEFAULT_TRACK_S: f64 = 1000.0;

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            key: "<input>".into(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: path.display().to_string(),
            message: format!("cannot read: {e}"),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { message, .. } => Error::Config {
                key: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config is always representable")
    }

    pub fn radio(&self) -> Result<RadioParams> {
        let tx_bw = self.tx_beamwidth_deg.to_radians();
        let rx_bw = self.rx_beamwidth_deg.to_radians();
        let (main_tx, side_tx) = default_tx_gains(tx_bw);
        let (main_rx, side_rx) = default_rx_gains(rx_bw);
        let radio = RadioParams {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            tx_power_dbm: self.tx_power_dbm,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            nakagami_m: self.nakagami_m,
            tx_beamwidth: tx_bw,
            rx_beamwidth: rx_bw,
            gain_main_tx: self.gain_main_tx.unwrap_or(main_tx),
            gain_side_tx: self.gain_side_tx.unwrap_or(side_tx),
            gain_main_rx: self.gain_main_rx.unwrap_or(main_rx),
            gain_side_rx: self.gain_side_rx.unwrap_or(side_rx),
            blockage_attenuation_db: self.blockage_attenuation_db,
            min_distance: self.min_distance_m,
            shadowing: self.shadowing,
        };
        radio.validate()?;
        Ok(radio)
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        let model = match self.motion {
            MotionKind::Raster => MotionModel::RasterScan {
                side: self.raster_side_m,
                speed: self.speed_mps,
                lane_spacing: self.raster_lane_spacing_m.unwrap_or(self.grid_cell_m),
            },
            MotionKind::RandomWaypoint => MotionModel::RandomWaypoint {
                min_speed: self.speed_min_mps,
                max_speed: self.speed_max_mps,
                radius: self.radius_m,
            },
            MotionKind::Waypoints => MotionModel::WaypointList {
                points: self.waypoints.iter().map(|p| Point2::new(p[0], p[1])).collect(),
                speed: self.speed_mps,
            },
            MotionKind::Stationary => MotionModel::Stationary {
                position: self
                    .waypoints
                    .first()
                    .map(|p| Point2::new(p[0], p[1]))
                    .ok_or_else(|| Error::invalid("waypoints", "stationary motion needs one waypoint"))?,
            },
        };
        model.validate(self.radius_m)?;
        Ok(model)
    }

    /// Validated simulation parameters for run seed `seed`.
    pub fn scenario(&self, seed: u64) -> Result<ScenarioConfig> {
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(Error::invalid("dt_s", "must be > 0"));
        }
        if !(self.grid_cell_m > 0.0 && self.grid_cell_m.is_finite()) {
            return Err(Error::invalid("grid_cell_m", "must be > 0"));
        }
        if !(self.central_radius_m >= 0.0) {
            return Err(Error::invalid("central_radius_m", "must be >= 0"));
        }
        let window = whole_steps("window_s", self.window_s, self.dt_s)?;
        let motion = self.motion_model()?;
        let steps = match self.duration_s {
            Some(d) => whole_steps("duration_s", d, self.dt_s)?,
            None => {
                let track = match (motion.path_length(), motion.nominal_speed()) {
                    (Some(len), Some(v)) if self.blocker => len / v,
                    _ => DEFAULT_TRACK_S,
                };
                window + (track / self.dt_s).ceil() as usize + 1
            }
        };
        let cfg = ScenarioConfig {
            deployment: DeploymentParams {
                radius: self.radius_m,
                bs_density: self.bs_density,
                ue_density: self.ue_density,
                seed,
                min_ues: 0,
            },
            radio: self.radio()?,
            fading: self.fading,
            layout: SectorLayout::from_width_degrees(self.sector_width_deg)
                .map_err(|e| Error::invalid("sector_width_deg", e.to_string()))?,
            window,
            dt: self.dt_s,
            cooperators: self.cooperators,
            include_reference: self.include_reference,
            scheduling: self.scheduling,
            blocker: self.blocker.then_some(BlockerSpec {
                radius: self.blocker_radius_m,
                motion,
            }),
            estimator: self.estimator,
            detector: DetectorConfig {
                threshold: self.detection_threshold,
                centering: self.detection_centering,
                noise_floor_db: self.detection_noise_floor_db,
                recent_rows: self.detection_recent_rows,
            },
            min_bearings: self.min_bearings,
            steps,
            seed,
            trace_detections: self.trace_detections,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every derived parameter without running anything.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be >= 1"));
        }
        self.scenario(self.seed).map(|_| ())
    }
}

/// SplitMix64 finalizer of `master + counter`: seed of repetition `counter`.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
