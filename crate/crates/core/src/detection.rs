//! Active-sector estimation from a sensing matrix, and conversion of the
//! active sector into a global bearing.
//!
//! The estimator works on the matrix in dB. Each column is centered on its
//! time average, which cancels the static interference level of every sector;
//! with [`Centering::Double`] each row is additionally centered on its sector
//! average, which cancels fluctuations common to all sectors (fading or
//! shadowing of the serving link). The dominant right singular vector then
//! carries the sector signature of the blocker and its largest entry names
//! the active sector. The share of energy captured by the dominant singular
//! value is reported as the detection confidence.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::channel::BlockerState;
use crate::deployment::NetworkDeployment;
use crate::error::{Error, Result};
use crate::geometry::{Angle, Point2, SectorLayout};
use crate::sensing::SensingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Subtract each column's time average.
    Columns,
    /// Subtract column averages, then row averages.
    #[default]
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Minimum confidence for a detection.
    pub threshold: f64,
    pub centering: Centering,
    /// Per-entry energy floor (dB) added to the denominator of the
    /// confidence; keeps a few noisy sectors from looking rank-one.
    pub noise_floor_db: f64,
    /// The signature's time profile must peak within this many newest rows
    /// (at least half its overall peak); 0 disables the check.
    pub recent_rows: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: 0.4,
            centering: Centering::Double,
            noise_floor_db: 1.0,
            recent_rows: 1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("detection_threshold", "must lie in [0, 1]"));
        }
        if !(self.noise_floor_db >= 0.0 && self.noise_floor_db.is_finite()) {
            return Err(Error::invalid("detection_noise_floor_db", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub active_sector: usize,
    pub confidence: f64,
    /// Peak of `|u₁|` over the newest rows relative to its overall peak.
    pub recency: f64,
    pub detected: bool,
}

impl DetectionResult {
    fn none() -> Self {
        Self {
            active_sector: 0,
            confidence: 0.0,
            recency: 0.0,
            detected: false,
        }
    }
}

/// Share of the signature peak the newest rows must reach.
const RECENT_FRACTION: f64 = 0.5;

/// Residual energy below which a centered matrix counts as constant (dB²).
const CONSTANT_ENERGY: f64 = 1e-12;

pub fn estimate_active_sector(matrix: &SensingMatrix, cfg: &DetectorConfig) -> Result<DetectionResult> {
    if !matrix.is_full() {
        return Err(Error::MatrixNotFull {
            rows: matrix.len(),
            capacity: matrix.capacity(),
        });
    }
    Ok(detect_in_db(matrix.to_db_matrix(), cfg))
}

/// Run the estimator on a `time × sector` matrix already in dB.
pub fn detect_in_db(mut x: DMatrix<f64>, cfg: &DetectorConfig) -> DetectionResult {
    let (rows, cols) = x.shape();
    if rows == 0 || cols == 0 {
        return DetectionResult::none();
    }
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    if cfg.centering == Centering::Double {
        for mut row in x.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
    }
    let energy = x.norm_squared();
    if !(energy > CONSTANT_ENERGY) {
        return DetectionResult::none();
    }
    // σ₁² and v₁ as the leading eigenpair of the sector Gram matrix XᵀX
    let eig = SymmetricEigen::new(x.transpose() * &x);
    let (lead, sigma_sq) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i, l) } else { best });
    let floor = (rows * cols) as f64 * cfg.noise_floor_db * cfg.noise_floor_db;
    let confidence = sigma_sq.max(0.0) / (energy + floor);
    let v = eig.eigenvectors.column(lead);
    let mut active_sector = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, &w) in v.iter().enumerate() {
        if w.abs() > best {
            best = w.abs();
            active_sector = k;
        }
    }
    // time profile u₁ ∝ X v₁, row 0 newest
    let u = &x * v;
    let peak = u.amax();
    let recency = if cfg.recent_rows == 0 || !(peak > 0.0) {
        1.0
    } else {
        u.rows(0, cfg.recent_rows.min(rows)).amax() / peak
    };
    DetectionResult {
        active_sector,
        confidence,
        recency,
        detected: confidence >= cfg.threshold && recency >= RECENT_FRACTION,
    }
}

/// A cooperator's position with the global orientation `theta` and
/// half-width `alpha` of the sector it believes holds the blocker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BearingEstimate {
    pub x: f64,
    pub y: f64,
    pub theta: Angle,
    pub alpha: f64,
}

impl BearingEstimate {
    pub fn new(position: Point2, theta: Angle, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::HalfWidthOutOfRange(alpha));
        }
        if !position.is_finite() {
            return Err(Error::invalid("bearing position", "non-finite coordinates"));
        }
        Ok(Self {
            x: position.x,
            y: position.y,
            theta,
            alpha,
        })
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

pub fn bearing_from_sector(
    ue: usize,
    dep: &NetworkDeployment,
    result: &DetectionResult,
    layout: &SectorLayout,
) -> Result<BearingEstimate> {
    if !result.detected {
        return Err(Error::NotDetected);
    }
    let theta = dep.ue_orientation[ue] + layout.sector_center(result.active_sector);
    BearingEstimate::new(dep.ue_positions[ue], theta, layout.half_width())
}

/// Ground-truth bearing from `ue` to the blocker, quantized to the center of
/// the UE's sector that contains it.
pub fn oracle_bearing(
    ue: usize,
    dep: &NetworkDeployment,
    blocker: &BlockerState,
    layout: &SectorLayout,
) -> Result<BearingEstimate> {
    let pos = dep.ue_positions[ue];
    if pos == blocker.pos {
        return Err(Error::BlockerAtSensor);
    }
    let orientation = dep.ue_orientation[ue];
    let local = Angle::new(pos.heading_to(blocker.pos)) - orientation;
    let k = layout.sector_index(local);
    BearingEstimate::new(pos, orientation + layout.sector_center(k), layout.half_width())
}
