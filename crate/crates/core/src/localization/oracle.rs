//! Brute-force verification path for bearing fusion.
//!
//! Objectives are evaluated from the line geometry alone: every expectation
//! over the sector uncertainty is a Gauss–Legendre quadrature of exact
//! point-to-line quantities, with no use of the closed-form sector
//! coefficients. The minimizer is found by a coarse grid scan followed by
//! finite-difference Newton refinement.

use serde::{Deserialize, Serialize};

use crate::detection::BearingEstimate;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::quadrature::GaussLegendre;

/// Nodes per sector integral.
const QUAD_NODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `Σ_i ∫ dist²(p, line_i(ε)) dε` over `ε ∈ [-α_i, α_i]`: the expected
    /// squared distance to each random bearing line, weighted by the sector
    /// width `2α_i`. Equal widths give the plain expectation up to scale.
    ExpectedLineDistance,
    /// `Σ_i ‖p − E_ε[proj_i(p)]‖²`: squared distance to the expected
    /// projection, which drops the spread of the projection.
    ExpectedProjection,
}

/// Objective evaluator for one bearing set.
pub struct FusionObjective<'a> {
    bearings: &'a [BearingEstimate],
    kind: Objective,
    rule: GaussLegendre,
}

impl<'a> FusionObjective<'a> {
    pub fn new(bearings: &'a [BearingEstimate], kind: Objective) -> Self {
        Self {
            bearings,
            kind,
            rule: GaussLegendre::new(QUAD_NODES),
        }
    }

    /// Contribution of bearing `i` at `p`.
    pub fn term(&self, i: usize, p: Point2) -> f64 {
        let b = &self.bearings[i];
        let anchor = b.position();
        let rel = p - anchor;
        let theta = b.theta.radians();
        let width = 2.0 * b.alpha;
        match self.kind {
            Objective::ExpectedLineDistance => {
                self.rule.integrate(
                    |eps| {
                        let u = Point2::from_polar(1.0, theta + eps);
                        let d = u.cross(rel);
                        d * d
                    },
                    -b.alpha,
                    b.alpha,
                )
            }
            Objective::ExpectedProjection => {
                let mean_x = self.rule.integrate(|eps| projection(rel, theta + eps).x, -b.alpha, b.alpha) / width;
                let mean_y = self.rule.integrate(|eps| projection(rel, theta + eps).y, -b.alpha, b.alpha) / width;
                let e = anchor + Point2::new(mean_x, mean_y);
                let d = p - e;
                d.dot(d)
            }
        }
    }

    pub fn value(&self, p: Point2) -> f64 {
        (0..self.bearings.len()).map(|i| self.term(i, p)).sum()
    }

    /// Central-difference gradient of `f` at `p` with step `h`.
    fn fd_gradient(f: impl Fn(Point2) -> f64, p: Point2, h: f64) -> Point2 {
        let gx = (f(p + Point2::new(h, 0.0)) - f(p - Point2::new(h, 0.0))) / (2.0 * h);
        let gy = (f(p + Point2::new(0.0, h)) - f(p - Point2::new(0.0, h))) / (2.0 * h);
        Point2::new(gx, gy)
    }

    pub fn gradient(&self, p: Point2, h: f64) -> Point2 {
        Self::fd_gradient(|q| self.value(q), p, h)
    }

    /// `‖∇f‖ / Σ_i ‖∇f_i‖` at `p`: zero at a stationary point, scale-free.
    /// Returns the absolute gradient norm when every term is stationary.
    pub fn relative_gradient(&self, p: Point2, h: f64) -> f64 {
        let total = self.gradient(p, h).norm();
        let parts: f64 = (0..self.bearings.len())
            .map(|i| Self::fd_gradient(|q| self.term(i, q), p, h).norm())
            .sum();
        if parts > 0.0 {
            total / parts
        } else {
            total
        }
    }

    fn hessian(&self, p: Point2, h: f64) -> [[f64; 2]; 2] {
        let f = |dx: f64, dy: f64| self.value(p + Point2::new(dx, dy));
        let f0 = f(0.0, 0.0);
        let hxx = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
        let hyy = (f(0.0, h) - 2.0 * f0 + f(0.0, -h)) / (h * h);
        let hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        [[hxx, hxy], [hxy, hyy]]
    }
}

/// `((r·u) u)` for the unit vector at angle `phi`.
fn projection(rel: Point2, phi: f64) -> Point2 {
    let u = Point2::from_polar(1.0, phi);
    u * rel.dot(u)
}

/// Grid spacing of the coarse scan, as a fraction of the search radius.
const GRID_STEPS: usize = 60;
/// Refinement stops once the Newton step is shorter than this (m).
pub const REFINE_STEP: f64 = 1e-4;

/// Numerically minimize `kind` over the square of half-side `search_radius`
/// centered on the origin.
pub fn oracle_fuse(bearings: &[BearingEstimate], kind: Objective, search_radius: f64) -> Result<Point2> {
    if bearings.is_empty() {
        return Err(Error::EmptyBearings);
    }
    if !(search_radius > 0.0 && search_radius.is_finite()) {
        return Err(Error::invalid("search_radius", "must be > 0"));
    }
    let obj = FusionObjective::new(bearings, kind);
    let step = 2.0 * search_radius / GRID_STEPS as f64;
    let mut best = (f64::INFINITY, Point2::ORIGIN);
    for i in 0..=GRID_STEPS {
        for j in 0..=GRID_STEPS {
            let p = Point2::new(-search_radius + i as f64 * step, -search_radius + j as f64 * step);
            let v = obj.value(p);
            if v < best.0 {
                best = (v, p);
            }
        }
    }
    let mut p = best.1;
    let h = (0.01 * step).max(1e-3);
    for _ in 0..100 {
        let g = obj.gradient(p, h);
        let [[a, b], [_, d]] = obj.hessian(p, h);
        let det = a * d - b * b;
        let delta = if a > 0.0 && det > 0.0 {
            Point2::new(-(d * g.x - b * g.y) / det, -(a * g.y - b * g.x) / det)
        } else {
            // not locally convex: fall back to a short descent step
            g * (-step / g.norm().max(f64::MIN_POSITIVE))
        };
        // backtrack until the objective does not increase
        let f0 = obj.value(p);
        let mut t = 1.0;
        while obj.value(p + delta * t) > f0 && t > 1e-8 {
            t *= 0.5;
        }
        let moved = delta * t;
        p = p + moved;
        if moved.norm() < REFINE_STEP {
            break;
        }
    }
    Ok(p)
}
