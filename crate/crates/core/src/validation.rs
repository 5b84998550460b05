//! Self-checks of the closed-form geometry against brute-force references.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detection::BearingEstimate;
use crate::geometry::{Angle, Point2};
use crate::localization::oracle::{oracle_fuse, FusionObjective, Objective};
use crate::localization::{closest_point_on_line, expected_closest_point, fuse_bearings, sector_coeffs, FusionSystem};
use crate::quadrature::adaptive_simpson;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Instance counts of each check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationSizes {
    pub coefficient_pairs: usize,
    pub projections: usize,
    pub expectation_instances: usize,
    pub expectation_draws: usize,
    pub fusion_instances: usize,
}

impl ValidationSizes {
    pub fn full() -> Self {
        Self {
            coefficient_pairs: 1000,
            projections: 10_000,
            expectation_instances: 50,
            expectation_draws: 1_000_000,
            fusion_instances: 200,
        }
    }

    pub fn quick() -> Self {
        Self {
            coefficient_pairs: 100,
            projections: 1000,
            expectation_instances: 5,
            expectation_draws: 100_000,
            fusion_instances: 20,
        }
    }
}

fn random_alpha<R: Rng>(rng: &mut R) -> f64 {
    // (0, π/4]
    FRAC_PI_4 * (1.0 - rng.random::<f64>())
}

fn random_point<R: Rng>(rng: &mut R, half: f64) -> Point2 {
    Point2::new(rng.random_range(-half..half), rng.random_range(-half..half))
}

/// Slope-form integrands `1/(1+a²)`, `a/(1+a²)`, `a²/(1+a²)` with `a = tan φ`.
fn slope_integrals(theta: f64, alpha: f64) -> [f64; 3] {
    let f = |k: usize| {
        adaptive_simpson(
            |phi| {
                let a = phi.tan();
                a.powi(k as i32) / (1.0 + a * a)
            },
            theta - alpha,
            theta + alpha,
            1e-13,
        )
    };
    [f(0), f(1), f(2)]
}

pub fn check_coefficients(pairs: usize, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let theta = rng.random_range(0.0..TAU);
        let alpha = random_alpha(rng);
        let c = sector_coeffs(Angle::new(theta), alpha).expect("alpha in range");
        let q = slope_integrals(theta, alpha);
        worst = worst.max((c.a0 - q[0]).abs()).max((c.a1 - q[1]).abs()).max((c.a2 - q[2]).abs());
    }
    CheckReport {
        name: "sector coefficients vs quadrature",
        passed: worst < 1e-9,
        detail: format!("{pairs} pairs, max abs error {worst:.3e}"),
    }
}

pub fn check_projection(instances: usize, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let anchor = random_point(rng, 100.0);
        let target = random_point(rng, 100.0);
        let phi = rng.random_range(0.0..TAU);
        let p = closest_point_on_line(anchor, Angle::new(phi), target);
        let u = Point2::from_polar(1.0, phi);
        let q = anchor + u * (target - anchor).dot(u);
        worst = worst.max(p.distance(q));
    }
    CheckReport {
        name: "closest point vs vector projection",
        passed: worst < 1e-12,
        detail: format!("{instances} instances, max distance {worst:.3e} m"),
    }
}

pub fn check_expectation(instances: usize, draws: usize, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut worst_z = 0.0f64;
    for _ in 0..instances {
        let sensor = random_point(rng, 100.0);
        let target = random_point(rng, 100.0);
        let theta = Angle::new(rng.random_range(0.0..TAU));
        let alpha = random_alpha(rng);
        let b = BearingEstimate::new(sensor, theta, alpha).expect("alpha in range");
        let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..draws {
            let phi = theta.radians() + rng.random_range(-alpha..alpha);
            let u = Point2::from_polar(1.0, phi);
            let q = sensor + u * (target - sensor).dot(u);
            sx += q.x;
            sy += q.y;
            sxx += q.x * q.x;
            syy += q.y * q.y;
        }
        let n = draws as f64;
        let e = expected_closest_point(target, &b).expect("valid bearing");
        for (s, ss, want) in [(sx, sxx, e.x), (sy, syy, e.y)] {
            let mean = s / n;
            let se = ((ss / n - mean * mean).max(0.0) / n).sqrt();
            let z = if se > 0.0 { (mean - want).abs() / se } else { 0.0 };
            worst_z = worst_z.max(z);
        }
    }
    CheckReport {
        name: "expected closest point vs Monte Carlo",
        passed: worst_z <= 3.0,
        detail: format!("{instances} instances x {draws} draws, max |z| {worst_z:.2}"),
    }
}

fn random_bearings(rng: &mut ChaCha8Rng, n: usize) -> Vec<BearingEstimate> {
    (0..n)
        .map(|_| {
            BearingEstimate::new(random_point(rng, 30.0), Angle::new(rng.random_range(0.0..TAU)), random_alpha(rng))
                .expect("alpha in range")
        })
        .collect()
}

/// Fusion against a numerical minimizer of the expected squared distance to
/// the bearing lines.
pub fn check_fusion(instances: usize, rng: &mut ChaCha8Rng) -> CheckReport {
    let (mut worst_d, mut worst_g) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let n = rng.random_range(1..=20);
        let bs = random_bearings(rng, n);
        let Ok(p) = fuse_bearings(&bs) else { continue };
        let Ok(q) = oracle_fuse(&bs, Objective::ExpectedLineDistance, 100.0 + p.norm()) else {
            continue;
        };
        worst_d = worst_d.max(p.distance(q));
        let obj = FusionObjective::new(&bs, Objective::ExpectedLineDistance);
        worst_g = worst_g.max(obj.relative_gradient(p, 1e-3));
    }
    CheckReport {
        name: "fusion vs numerical minimizer",
        passed: worst_d < 1e-3 && worst_g < 1e-6,
        detail: format!("{instances} instances, max distance {worst_d:.3e} m, max relative gradient {worst_g:.3e}"),
    }
}

pub fn check_degeneracy(instances: usize, rng: &mut ChaCha8Rng) -> CheckReport {
    let mut failures = 0usize;
    for _ in 0..instances {
        let single = random_bearings(rng, 1);
        match fuse_bearings(&single) {
            Ok(p) if p == single[0].position() => {}
            _ => failures += 1,
        }
        let n = rng.random_range(1..=20);
        let bs = random_bearings(rng, n);
        if !FusionSystem::assemble(&bs).map(|s| s.is_positive_definite()).unwrap_or(false) {
            failures += 1;
        }
    }
    // vertical bearing
    let axis = BearingEstimate::new(Point2::new(3.0, -2.0), Angle::new(PI / 2.0), 0.1).expect("alpha in range");
    if fuse_bearings(&[axis]).ok() != Some(axis.position()) {
        failures += 1;
    }
    CheckReport {
        name: "single-bearing identity and positive definiteness",
        passed: failures == 0,
        detail: format!("{instances} instances, {failures} failures"),
    }
}

pub fn run_validation(sizes: ValidationSizes, seed: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_coefficients(sizes.coefficient_pairs, &mut rng),
        check_projection(sizes.projections, &mut rng),
        check_expectation(sizes.expectation_instances, sizes.expectation_draws, &mut rng),
        check_fusion(sizes.fusion_instances, &mut rng),
        check_degeneracy(sizes.fusion_instances, &mut rng),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_suite_passes() {
        let sizes = ValidationSizes {
            coefficient_pairs: 20,
            projections: 200,
            expectation_instances: 2,
            expectation_draws: 20_000,
            fusion_instances: 4,
        };
        for r in run_validation(sizes, 1) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
