//! Blocker trajectories.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::BlockerState;
use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MotionModel {
    Stationary {
        position: Point2,
    },
    /// Straight legs between waypoints drawn uniformly in the disk of
    /// `radius`; each leg has its own speed drawn from `[min_speed, max_speed]`.
    RandomWaypoint {
        min_speed: f64,
        max_speed: f64,
        radius: f64,
    },
    /// Boustrophedon sweep of the square of `side` centered on the origin,
    /// lanes parallel to the x axis and `lane_spacing` apart. The sweep
    /// reverses at either end.
    RasterScan {
        side: f64,
        speed: f64,
        lane_spacing: f64,
    },
    /// Piecewise-linear path through `points`, stopping at the last one.
    WaypointList {
        points: Vec<Point2>,
        speed: f64,
    },
}

impl MotionModel {
    pub fn validate(&self, disk_radius: f64) -> Result<()> {
        let speed_ok = |s: f64| s > 0.0 && s.is_finite();
        match self {
            MotionModel::Stationary { position } => {
                if !position.is_finite() || position.norm() > disk_radius {
                    return Err(Error::invalid("waypoints", "stationary position must lie inside the disk"));
                }
            }
            MotionModel::RandomWaypoint {
                min_speed,
                max_speed,
                radius,
            } => {
                if !speed_ok(*min_speed) || !speed_ok(*max_speed) || min_speed > max_speed {
                    return Err(Error::invalid("speed_min_mps", "need 0 < speed_min_mps <= speed_max_mps"));
                }
                if !(*radius > 0.0 && *radius <= disk_radius) {
                    return Err(Error::invalid("radius_m", "waypoint disk must lie inside the network"));
                }
            }
            MotionModel::RasterScan {
                side,
                speed,
                lane_spacing,
            } => {
                if !speed_ok(*speed) {
                    return Err(Error::invalid("speed_mps", "must be > 0"));
                }
                if !(*side > 0.0 && side * std::f64::consts::FRAC_1_SQRT_2 <= disk_radius) {
                    return Err(Error::invalid("raster_side_m", "square must fit inside the network disk"));
                }
                if !(*lane_spacing > 0.0 && lane_spacing <= side) {
                    return Err(Error::invalid("raster_lane_spacing_m", "must lie in (0, raster_side_m]"));
                }
            }
            MotionModel::WaypointList { points, speed } => {
                if !speed_ok(*speed) {
                    return Err(Error::invalid("speed_mps", "must be > 0"));
                }
                if points.is_empty() {
                    return Err(Error::invalid("waypoints", "at least one waypoint required"));
                }
                if points.iter().any(|p| !p.is_finite() || p.norm() > disk_radius) {
                    return Err(Error::invalid("waypoints", "waypoints must lie inside the network disk"));
                }
            }
        }
        Ok(())
    }

    /// Length of one pass of a deterministic path; `None` for random motion.
    pub fn path_length(&self) -> Option<f64> {
        match self {
            MotionModel::Stationary { .. } => Some(0.0),
            MotionModel::RandomWaypoint { .. } => None,
            MotionModel::RasterScan { .. } | MotionModel::WaypointList { .. } => {
                Some(polyline_length(&self.deterministic_path()))
            }
        }
    }

    /// Speed of a deterministic path.
    pub fn nominal_speed(&self) -> Option<f64> {
        match self {
            MotionModel::RasterScan { speed, .. } | MotionModel::WaypointList { speed, .. } => Some(*speed),
            _ => None,
        }
    }

    fn deterministic_path(&self) -> Vec<Point2> {
        match self {
            MotionModel::Stationary { position } => vec![*position],
            MotionModel::RasterScan { side, lane_spacing, .. } => raster_path(*side, *lane_spacing),
            MotionModel::WaypointList { points, .. } => points.clone(),
            MotionModel::RandomWaypoint { .. } => Vec::new(),
        }
    }
}

/// Lane centers start half a spacing inside the square's lower edge.
pub fn raster_path(side: f64, lane_spacing: f64) -> Vec<Point2> {
    let half = side / 2.0;
    let mut path = Vec::new();
    let mut k = 0usize;
    loop {
        let y = -half + lane_spacing / 2.0 + k as f64 * lane_spacing;
        if y > half + 1e-9 {
            break;
        }
        let (x0, x1) = if k % 2 == 0 { (-half, half) } else { (half, -half) };
        path.push(Point2::new(x0, y));
        path.push(Point2::new(x1, y));
        k += 1;
    }
    path
}

fn polyline_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}

fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point2 {
    let r = radius * rng.random::<f64>().sqrt();
    Point2::from_polar(r, TAU * rng.random::<f64>())
}

/// Stateful walker over a [`MotionModel`].
#[derive(Debug, Clone)]
pub struct Mover {
    model: MotionModel,
    path: Vec<Point2>,
    next: usize,
    forward: bool,
    speed: f64,
    start: Point2,
}

impl Mover {
    pub fn new<R: Rng + ?Sized>(model: MotionModel, rng: &mut R) -> Self {
        let path = model.deterministic_path();
        let (start, path, speed) = match &model {
            MotionModel::RandomWaypoint {
                min_speed,
                max_speed,
                radius,
            } => {
                let start = uniform_in_disk(*radius, rng);
                let target = uniform_in_disk(*radius, rng);
                let speed = rng.random_range(*min_speed..=*max_speed);
                (start, vec![start, target], speed)
            }
            _ => (path[0], path.clone(), model.nominal_speed().unwrap_or(0.0)),
        };
        Self {
            model,
            path,
            next: 1,
            forward: true,
            speed,
            start,
        }
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    /// Current leg speed (m/s).
    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Advance `state` by `dt` seconds.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &BlockerState, dt: f64, rng: &mut R) -> BlockerState {
        let old = state.pos;
        let mut pos = old;
        let mut budget = self.speed * dt;
        // bounded to avoid spinning on degenerate (zero-length) paths
        for _ in 0..10_000 {
            if budget <= 0.0 || self.next >= self.path.len() {
                break;
            }
            let target = self.path[self.next];
            let gap = pos.distance(target);
            if gap > budget {
                pos = pos + (target - pos) * (budget / gap);
                break;
            }
            pos = target;
            budget -= gap;
            if !self.advance(rng) {
                break;
            }
        }
        BlockerState {
            pos,
            velocity: (pos - old) * (1.0 / dt),
            radius: state.radius,
        }
    }

    /// Select the next target; `false` when motion ends.
    fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        match &self.model {
            MotionModel::Stationary { .. } => false,
            MotionModel::WaypointList { .. } => {
                self.next += 1;
                self.next < self.path.len()
            }
            MotionModel::RasterScan { .. } => {
                if self.path.len() < 2 {
                    return false;
                }
                if self.forward {
                    if self.next + 1 < self.path.len() {
                        self.next += 1;
                    } else {
                        self.forward = false;
                        self.next -= 1;
                    }
                } else if self.next > 0 {
                    self.next -= 1;
                } else {
                    self.forward = true;
                    self.next = 1;
                }
                true
            }
            MotionModel::RandomWaypoint {
                min_speed,
                max_speed,
                radius,
            } => {
                let (lo, hi, r) = (*min_speed, *max_speed, *radius);
                let here = self.path[self.next];
                let target = uniform_in_disk(r, rng);
                self.speed = rng.random_range(lo..=hi);
                self.path = vec![here, target];
                self.next = 1;
                true
            }
        }
    }
}

/// Advance `state` by `dt` seconds along `mover`'s path.
pub fn step_motion<R: Rng + ?Sized>(mover: &mut Mover, state: &BlockerState, dt: f64, rng: &mut R) -> BlockerState {
    mover.step(state, dt, rng)
}
