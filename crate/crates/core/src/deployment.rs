//! Random network deployment: PPP base stations and UEs on a disk,
//! nearest-BS association and cooperator selection around the reference UE.

use std::f64::consts::TAU;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Angle, Point2};

/// Resampling budget when a draw yields no base station.
pub const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentParams {
    pub radius: f64,
    pub bs_density: f64,
    pub ue_density: f64,
    pub seed: u64,
    /// Redraw until at least this many UEs (reference included) appear.
    #[serde(default)]
    pub min_ues: usize,
}

impl Default for DeploymentParams {
    fn default() -> Self {
        Self {
            radius: 100.0,
            bs_density: 8e-4,
            ue_density: 2e-3,
            seed: 0,
            min_ues: 0,
        }
    }
}

impl DeploymentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius_m", format!("{} must be > 0", self.radius)));
        }
        if !(self.bs_density > 0.0 && self.bs_density.is_finite()) {
            return Err(Error::invalid("bs_density", format!("{} must be > 0", self.bs_density)));
        }
        if !(self.ue_density > 0.0 && self.ue_density.is_finite()) {
            return Err(Error::invalid("ue_density", format!("{} must be > 0", self.ue_density)));
        }
        Ok(())
    }

    pub fn expected_bs_count(&self) -> f64 {
        self.bs_density * std::f64::consts::PI * self.radius * self.radius
    }
}

/// Homogeneous Poisson point process on the disk of radius `radius`.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<Point2> {
    let mean = density * std::f64::consts::PI * radius * radius;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    (0..count)
        .map(|_| {
            // sqrt for uniform areal density
            let r = radius * rng.random::<f64>().sqrt();
            let phi = TAU * rng.random::<f64>();
            Point2::from_polar(r, phi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDeployment {
    pub seed: Option<u64>,
    pub radius: f64,
    pub bs_positions: Vec<Point2>,
    /// Index 0 is the reference UE at the origin.
    pub ue_positions: Vec<Point2>,
    pub association: Vec<usize>,
    /// Boresight of each UE, pointing at its serving BS.
    pub ue_orientation: Vec<Angle>,
    /// UEs served by each BS, in ascending index order.
    pub bs_schedule: Vec<Vec<usize>>,
}

impl NetworkDeployment {
    /// Associate each UE with its nearest BS (ties to the lower BS index).
    pub fn from_positions(radius: f64, bs_positions: Vec<Point2>, ue_positions: Vec<Point2>) -> Result<Self> {
        if bs_positions.is_empty() {
            return Err(Error::invalid("bs_positions", "at least one base station required"));
        }
        if ue_positions.is_empty() {
            return Err(Error::invalid("ue_positions", "at least one UE required"));
        }
        let mut association = Vec::with_capacity(ue_positions.len());
        let mut ue_orientation = Vec::with_capacity(ue_positions.len());
        let mut bs_schedule = vec![Vec::new(); bs_positions.len()];
        for (u, &pos) in ue_positions.iter().enumerate() {
            let (serving, _) = bs_positions
                .iter()
                .enumerate()
                .map(|(b, &bp)| (b, pos.distance(bp)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            association.push(serving);
            ue_orientation.push(Angle::new(pos.heading_to(bs_positions[serving])));
            bs_schedule[serving].push(u);
        }
        Ok(Self {
            seed: None,
            radius,
            bs_positions,
            ue_positions,
            association,
            ue_orientation,
            bs_schedule,
        })
    }

    pub fn bs_count(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn ue_count(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn serving_bs(&self, ue: usize) -> usize {
        self.association[ue]
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Sample a deployment, redrawing while no BS appears or while fewer than
/// `min_ues` UEs do. The reference UE is
/// placed at the origin ahead of the PPP UEs.
pub fn build_deployment<R: Rng + ?Sized>(params: &DeploymentParams, rng: &mut R) -> Result<NetworkDeployment> {
    params.validate()?;
    let mut short_of_ues = None;
    for _ in 0..MAX_RESAMPLES {
        let bs = sample_ppp(params.bs_density, params.radius, rng);
        if bs.is_empty() {
            continue;
        }
        let mut ues = vec![Point2::ORIGIN];
        ues.extend(sample_ppp(params.ue_density, params.radius, rng));
        if ues.len() < params.min_ues {
            short_of_ues = Some(ues.len());
            continue;
        }
        let mut dep = NetworkDeployment::from_positions(params.radius, bs, ues)?;
        dep.seed = Some(params.seed);
        return Ok(dep);
    }
    match short_of_ues {
        Some(got) => Err(Error::NotEnoughUes {
            requested: params.min_ues.saturating_sub(1),
            available: got.saturating_sub(1),
        }),
        None => Err(Error::NoBaseStation {
            attempts: MAX_RESAMPLES,
        }),
    }
}

/// The `n` UEs nearest to the reference UE (ties by index), optionally
/// preceded by the reference UE itself.
pub fn select_cooperators(dep: &NetworkDeployment, n: usize, include_reference: bool) -> Result<Vec<usize>> {
    let available = dep.ue_count().saturating_sub(1);
    if n > available {
        return Err(Error::NotEnoughUes { requested: n, available });
    }
    let reference = dep.ue_positions[0];
    let mut others: Vec<(f64, usize)> = (1..dep.ue_count())
        .map(|u| (dep.ue_positions[u].distance(reference), u))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut set = Vec::with_capacity(n + 1);
    if include_reference {
        set.push(0);
    }
    set.extend(others.into_iter().take(n).map(|(_, u)| u));
    Ok(set)
}
