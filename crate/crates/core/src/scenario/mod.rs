//! End-to-end simulation: deployment, blocker motion, per-UE sensing,
//! detection and fusion, one record per post-warm-up step.

mod grid;
mod motion;

pub use grid::{accumulate_error_grid, CellStats, ErrorBinning, ErrorGrid};
pub use motion::{raster_path, step_motion, MotionModel, Mover};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{BlockerState, Fading, RadioParams};
use crate::deployment::{build_deployment, select_cooperators, DeploymentParams, NetworkDeployment};
use crate::detection::{bearing_from_sector, estimate_active_sector, oracle_bearing, BearingEstimate, DetectorConfig};
use crate::error::{Error, Result};
use crate::geometry::{Point2, SectorLayout};
use crate::localization::fuse_bearings;
use crate::sensing::{s_sinr_row, scheduled_targets, Scheduling, SensingMatrix, StepContext};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Deployment = 0,
    Motion = 1,
    Fading = 2,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// How bearings are obtained from the cooperators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Low-rank detection on each UE's sensing matrix.
    #[default]
    Svd,
    /// True blocker direction quantized to the sector center; no sensing.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockerSpec {
    pub radius: f64,
    pub motion: MotionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub deployment: DeploymentParams,
    pub radio: RadioParams,
    /// Nakagami fading on every link; off gives deterministic powers.
    pub fading: bool,
    pub layout: SectorLayout,
    /// Sensing window τ in steps; matrices hold τ + 1 rows.
    pub window: usize,
    pub dt: f64,
    pub cooperators: usize,
    pub include_reference: bool,
    pub scheduling: Scheduling,
    pub blocker: Option<BlockerSpec>,
    pub estimator: EstimatorMode,
    pub detector: DetectorConfig,
    /// Fewest bearings that trigger a fusion.
    pub min_bearings: usize,
    /// Total steps, warm-up included.
    pub steps: usize,
    pub seed: u64,
    pub trace_detections: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        self.radio.validate()?;
        self.detector.validate()?;
        if self.window == 0 {
            return Err(Error::invalid("window_s", "window must span at least one step"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt_s", "must be > 0"));
        }
        if self.min_bearings == 0 {
            return Err(Error::invalid("min_bearings", "must be >= 1"));
        }
        if self.layout.half_width() > std::f64::consts::FRAC_PI_4 {
            return Err(Error::invalid("sector_width_deg", "sectors wider than 90° are not supported"));
        }
        if let Some(b) = &self.blocker {
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(Error::invalid("blocker_radius_m", "must be > 0"));
            }
            b.motion.validate(self.deployment.radius)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    /// Too few bearings or a singular system; the previous estimate was kept.
    pub carried_forward: bool,
    /// The fusion system was singular at this step.
    pub singular: bool,
}

impl StepFlags {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.carried_forward {
            parts.push("carried");
        }
        if self.singular {
            parts.push("singular");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub blocker: Option<Point2>,
    pub estimate: Option<Point2>,
    pub bearing_count: usize,
    pub flags: StepFlags,
}

impl StepRecord {
    /// Euclidean localization error, when both positions exist.
    pub fn error(&self) -> Option<f64> {
        Some(self.blocker?.distance(self.estimate?))
    }
}

/// One detector evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionTrace {
    pub step: usize,
    pub t: f64,
    pub ue: usize,
    pub active_sector: usize,
    pub confidence: f64,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub deployment: NetworkDeployment,
    pub cooperators: Vec<usize>,
    pub records: Vec<StepRecord>,
    pub detections: Vec<DetectionTrace>,
    /// The run ended before the warm-up completed; `records` is empty.
    pub warmup_incomplete: bool,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let params = DeploymentParams {
        seed: cfg.seed,
        min_ues: cfg.deployment.min_ues.max(cfg.cooperators + 1),
        ..cfg.deployment
    };
    let deployment = build_deployment(&params, &mut stream_rng(cfg.seed, Stream::Deployment))?;
    run_on_deployment(cfg, deployment)
}

/// Run on a fixed deployment; the deployment stream is not consumed.
pub fn run_on_deployment(cfg: &ScenarioConfig, deployment: NetworkDeployment) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let cooperators = select_cooperators(&deployment, cfg.cooperators, cfg.include_reference)?;
    let mut motion_rng = stream_rng(cfg.seed, Stream::Motion);
    let mut fading_rng = stream_rng(cfg.seed, Stream::Fading);
    let fading = if cfg.fading {
        Fading::nakagami(cfg.radio.nakagami_m)?
    } else {
        Fading::none()
    };

    let (mut mover, mut blocker) = match &cfg.blocker {
        Some(spec) => {
            let mover = Mover::new(spec.motion.clone(), &mut motion_rng);
            let state = BlockerState::at(mover.start(), spec.radius);
            (Some(mover), Some(state))
        }
        None => (None, None),
    };

    let sectors = cfg.layout.sector_count();
    let mut matrices: Vec<SensingMatrix> = cooperators
        .iter()
        .map(|&u| SensingMatrix::new(u, cfg.window, sectors))
        .collect();

    let mut records = Vec::with_capacity(cfg.steps.saturating_sub(cfg.window));
    let mut detections = Vec::new();
    let mut last_estimate: Option<Point2> = None;

    for step in 0..cfg.steps {
        let t = step as f64 * cfg.dt;
        if step >= cfg.window {
            if let (Some(m), Some(b)) = (mover.as_mut(), blocker.as_ref()) {
                blocker = Some(m.step(b, cfg.dt, &mut motion_rng));
            }
        }

        if cfg.estimator == EstimatorMode::Svd {
            let targets = scheduled_targets(&deployment, cfg.scheduling, step as u64);
            let ctx = StepContext {
                dep: &deployment,
                targets: &targets,
                blocker: blocker.as_ref(),
                fading: &fading,
                radio: &cfg.radio,
            };
            for m in matrices.iter_mut() {
                let row = s_sinr_row(m.owner_ue(), &ctx, &cfg.layout, t, &mut fading_rng);
                m.push_row(row)?;
            }
        }
        if step < cfg.window {
            continue;
        }

        let bearings: Vec<BearingEstimate> = match cfg.estimator {
            EstimatorMode::Oracle => match &blocker {
                Some(b) => cooperators
                    .iter()
                    .filter_map(|&u| oracle_bearing(u, &deployment, b, &cfg.layout).ok())
                    .collect(),
                None => Vec::new(),
            },
            EstimatorMode::Svd => {
                let mut out = Vec::new();
                for m in &matrices {
                    let res = estimate_active_sector(m, &cfg.detector)?;
                    if cfg.trace_detections {
                        detections.push(DetectionTrace {
                            step,
                            t,
                            ue: m.owner_ue(),
                            active_sector: res.active_sector,
                            confidence: res.confidence,
                            detected: res.detected,
                        });
                    }
                    if res.detected {
                        out.push(bearing_from_sector(m.owner_ue(), &deployment, &res, &cfg.layout)?);
                    }
                }
                out
            }
        };

        let mut flags = StepFlags::default();
        let fresh = if bearings.len() >= cfg.min_bearings {
            match fuse_bearings(&bearings) {
                Ok(p) => Some(p),
                Err(Error::SingularSystem { .. }) => {
                    flags.singular = true;
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let estimate = match fresh {
            Some(p) => {
                last_estimate = Some(p);
                Some(p)
            }
            None => {
                flags.carried_forward = last_estimate.is_some();
                last_estimate
            }
        };
        records.push(StepRecord {
            step,
            t,
            blocker: blocker.map(|b| b.pos),
            estimate,
            bearing_count: bearings.len(),
            flags,
        });
    }

    Ok(ScenarioOutput {
        deployment,
        cooperators,
        records,
        detections,
        warmup_incomplete: cfg.steps <= cfg.window,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// `t,x_b,y_b,x_hat,y_hat,error,bearing_count,flags`.
pub fn write_trajectory_csv<W: Write>(records: &[StepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x_b", "y_b", "x_hat", "y_hat", "error", "bearing_count", "flags"])?;
    for r in records {
        w.write_record([
            format!("{:.3}", r.t),
            opt(r.blocker.map(|p| p.x)),
            opt(r.blocker.map(|p| p.y)),
            opt(r.estimate.map(|p| p.x)),
            opt(r.estimate.map(|p| p.y)),
            opt(r.error()),
            r.bearing_count.to_string(),
            r.flags.label(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `t,ue,active_sector,confidence,detected`.
pub fn write_detections_csv<W: Write>(detections: &[DetectionTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "ue", "active_sector", "confidence", "detected"])?;
    for d in detections {
        w.write_record([
            format!("{:.3}", d.t),
            d.ue.to_string(),
            d.active_sector.to_string(),
            format!("{:.6}", d.confidence),
            u8::from(d.detected).to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
