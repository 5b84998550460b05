//! Cooperative localization of a moving blocker from mmWave interference
//! sensing.
//!
//! Each user equipment (UE) splits its receive plane into angular sectors
//! and tracks a rolling window of per-sector signal-to-interference-plus-noise
//! ratios. A blocker crossing an interfering link leaves a low-rank dip in
//! that window; the dominant right singular vector names the sector. Bearings
//! from several UEs are fused in closed form by minimizing the expected squared
//! distance to the uncertain bearing lines.

pub mod channel;
pub mod config;
pub mod deployment;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod localization;
pub mod quadrature;
pub mod scenario;
pub mod sensing;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{Angle, Point2, SectorLayout};
