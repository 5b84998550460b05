//! Cooperative least-squares fusion of sector bearings.
//!
//! Each cooperator reports `(x_i, y_i, θ_i, α_i)`: the blocker lies on a line
//! through `(x_i, y_i)` with orientation `θ_i + ε`, `ε ~ U(-α_i, α_i)`. The
//! expected squared distance from a point `p` to that random line is the
//! quadratic form `(p - p_i)ᵀ M_i (p - p_i) / 2α_i` with
//!
//! ```text
//! M_i = [ A2  -A1 ]      A0 = α + ½ cos 2θ sin 2α
//!       [ -A1  A0 ]      A1 = ½ sin 2θ sin 2α
//!                        A2 = α − ½ cos 2θ sin 2α
//! ```
//!
//! and the fused estimate solves `(Σ M_i) p = Σ M_i p_i`.

pub mod input;
pub mod oracle;

pub use input::parse_bearings;

use serde::{Deserialize, Serialize};

use crate::detection::BearingEstimate;
use crate::error::{Error, Result};
use crate::geometry::{Angle, Point2};

/// Relative determinant below which the fusion system is declared singular.
pub const SINGULAR_DET_RELATIVE: f64 = 1e-15;

/// Integrals of `cos²`, `sin·cos` and `sin²` of `θ + ε` over `ε ∈ [-α, α]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

pub fn sector_coeffs(theta: Angle, alpha: f64) -> Result<SectorCoeffs> {
    if !(alpha > 0.0 && alpha <= std::f64::consts::FRAC_PI_4) {
        return Err(Error::HalfWidthOutOfRange(alpha));
    }
    let (s2t, c2t) = (2.0 * theta.radians()).sin_cos();
    let half_s2a = 0.5 * (2.0 * alpha).sin();
    Ok(SectorCoeffs {
        a0: alpha + c2t * half_s2a,
        a1: s2t * half_s2a,
        a2: alpha - c2t * half_s2a,
    })
}

/// Point on the line through `anchor` with orientation `slope_angle` closest
/// to `target`, via the slope `a = tan(slope_angle)`.
pub fn closest_point_on_line(anchor: Point2, slope_angle: Angle, target: Point2) -> Point2 {
    let (s, c) = slope_angle.radians().sin_cos();
    if c.abs() < 1e-12 {
        // vertical line
        return Point2::new(anchor.x, target.y);
    }
    let a = s / c;
    let d = 1.0 + a * a;
    Point2::new(
        (target.x + a * target.y - a * anchor.y + a * a * anchor.x) / d,
        (a * target.x + a * a * target.y + anchor.y - a * anchor.x) / d,
    )
}

/// Mean of [`closest_point_on_line`] over the uniform sector uncertainty.
pub fn expected_closest_point(target: Point2, bearing: &BearingEstimate) -> Result<Point2> {
    let SectorCoeffs { a0, a1, a2 } = sector_coeffs(bearing.theta, bearing.alpha)?;
    let (xi, yi) = (bearing.x, bearing.y);
    let k = 1.0 / (2.0 * bearing.alpha);
    Ok(Point2::new(
        k * (a0 * target.x + a1 * target.y - a1 * yi + a2 * xi),
        k * (a1 * target.x + a2 * target.y + a0 * yi - a1 * xi),
    ))
}

/// The 2×2 normal equations of the fusion problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionSystem {
    /// `[[Σ A2, −Σ A1], [−Σ A1, Σ A0]]`
    pub matrix: [[f64; 2]; 2],
    /// `[Σ A2 x_i − A1 y_i, Σ −A1 x_i + A0 y_i]`
    pub rhs: [f64; 2],
    // The same right-hand side with sensor positions taken relative to
    // their centroid; solving in that frame avoids cancellation.
    centroid: Point2,
    centered_rhs: [f64; 2],
}

impl FusionSystem {
    pub fn assemble(bearings: &[BearingEstimate]) -> Result<Self> {
        if bearings.is_empty() {
            return Err(Error::EmptyBearings);
        }
        let n = bearings.len() as f64;
        let centroid = Point2::new(
            bearings.iter().map(|b| b.x).sum::<f64>() / n,
            bearings.iter().map(|b| b.y).sum::<f64>() / n,
        );
        let mut matrix = [[0.0; 2]; 2];
        let mut rhs = [0.0; 2];
        let mut centered_rhs = [0.0; 2];
        for b in bearings {
            let SectorCoeffs { a0, a1, a2 } = sector_coeffs(b.theta, b.alpha)?;
            matrix[0][0] += a2;
            matrix[0][1] -= a1;
            matrix[1][1] += a0;
            rhs[0] += a2 * b.x - a1 * b.y;
            rhs[1] += -a1 * b.x + a0 * b.y;
            let (dx, dy) = (b.x - centroid.x, b.y - centroid.y);
            centered_rhs[0] += a2 * dx - a1 * dy;
            centered_rhs[1] += -a1 * dx + a0 * dy;
        }
        matrix[1][0] = matrix[0][1];
        Ok(Self {
            matrix,
            rhs,
            centroid,
            centered_rhs,
        })
    }

    pub fn determinant(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix[0][0] > 0.0 && self.determinant() > 0.0
    }

    /// Closed-form inverse of the 2×2 system.
    pub fn solve(&self) -> Result<Point2> {
        let [[m00, m01], [m10, m11]] = self.matrix;
        let det = self.determinant();
        let scale = 0.25 * (m00 + m11) * (m00 + m11);
        if !(det.abs() > SINGULAR_DET_RELATIVE * scale) {
            return Err(Error::SingularSystem { det });
        }
        let [r0, r1] = self.centered_rhs;
        let dx = (m11 * r0 - m01 * r1) / det;
        let dy = (m00 * r1 - m10 * r0) / det;
        Ok(Point2::new(self.centroid.x + dx, self.centroid.y + dy))
    }
}

/// Least-squares blocker position from a set of bearings.
pub fn fuse_bearings(bearings: &[BearingEstimate]) -> Result<Point2> {
    FusionSystem::assemble(bearings)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn bearing(x: f64, y: f64, theta: f64, alpha: f64) -> BearingEstimate {
        BearingEstimate::new(Point2::new(x, y), Angle::new(theta), alpha).unwrap()
    }

    #[test]
    fn coeffs_at_zero_orientation() {
        let alpha = 5f64.to_radians();
        let c = sector_coeffs(Angle::ZERO, alpha).unwrap();
        assert_eq!(c.a1, 0.0);
        assert!((c.a0 - (alpha + 0.5 * 10f64.to_radians().sin())).abs() < 1e-15);
        assert!((c.a2 - (alpha - 0.5 * 10f64.to_radians().sin())).abs() < 1e-15);
    }

    #[test]
    fn coeffs_at_diagonal() {
        for alpha in [0.01, 0.3, FRAC_PI_4] {
            let c = sector_coeffs(Angle::new(FRAC_PI_4), alpha).unwrap();
            assert!((c.a0 - alpha).abs() < 1e-15);
            assert!((c.a2 - alpha).abs() < 1e-15);
            assert!((c.a1 - 0.5 * (2.0 * alpha).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn coeffs_reject_bad_half_width() {
        assert!(sector_coeffs(Angle::ZERO, 0.0).is_err());
        assert!(sector_coeffs(Angle::ZERO, FRAC_PI_4 + 1e-9).is_err());
        assert!(sector_coeffs(Angle::ZERO, -0.1).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = closest_point_on_line(Point2::ORIGIN, Angle::ZERO, Point2::new(3.0, 4.0));
        assert_eq!(p, Point2::new(3.0, 0.0));
        let anchor = Point2::new(1.0, 2.0);
        let theta = Angle::new(0.7);
        let on_line = anchor + Point2::from_polar(5.0, 0.7);
        let p = closest_point_on_line(anchor, theta, on_line);
        assert!(p.distance(on_line) < 1e-12);
        let p = closest_point_on_line(anchor, Angle::new(PI / 2.0), Point2::new(7.0, -3.0));
        assert!(p.distance(Point2::new(1.0, -3.0)) < 1e-12);
    }

    #[test]
    fn expected_point_of_anchor_is_anchor() {
        let b = bearing(3.0, -4.0, 1.1, 0.2);
        let e = expected_closest_point(b.position(), &b).unwrap();
        assert!(e.distance(b.position()) < 1e-14);
    }

    #[test]
    fn expected_point_closed_form_example() {
        let alpha = 5f64.to_radians();
        let b = bearing(0.0, 0.0, 0.0, alpha);
        let c = sector_coeffs(Angle::ZERO, alpha).unwrap();
        let e = expected_closest_point(Point2::new(0.0, 1.0), &b).unwrap();
        assert_eq!(e.x, 0.0);
        assert!((e.y - c.a2 / (2.0 * alpha)).abs() < 1e-16);
    }

    #[test]
    fn single_bearing_returns_sensor() {
        let b = bearing(2.0, 3.0, 0.4, 5f64.to_radians());
        assert_eq!(fuse_bearings(&[b]).unwrap(), Point2::new(2.0, 3.0));
    }

    #[test]
    fn symmetric_pair_meets_in_the_middle() {
        let alpha = 5f64.to_radians();
        let p = fuse_bearings(&[bearing(-4.0, 0.0, 0.0, alpha), bearing(4.0, 0.0, PI, alpha)]).unwrap();
        assert!(p.norm() < 1e-12);
    }

    #[test]
    fn perpendicular_pair() {
        let alpha = 5f64.to_radians();
        let p = fuse_bearings(&[bearing(0.0, 0.0, 0.0, alpha), bearing(5.0, 5.0, -PI / 2.0, alpha)]).unwrap();
        let half = 0.5 * (2.0 * alpha).sin();
        let want = Point2::new(5.0 * (alpha + half) / (2.0 * alpha), 5.0 * (alpha - half) / (2.0 * alpha));
        assert!(p.distance(want) < 1e-12);
        assert!((p.x - 4.9873).abs() < 5e-5 && (p.y - 0.0127).abs() < 5e-5, "{p:?}");
    }

    #[test]
    fn empty_set_rejected() {
        assert!(matches!(fuse_bearings(&[]), Err(Error::EmptyBearings)));
    }

    #[test]
    fn system_matches_hand_assembly() {
        let bs = [bearing(1.0, 2.0, 0.3, 0.1), bearing(-3.0, 5.0, 2.0, 0.05)];
        let sys = FusionSystem::assemble(&bs).unwrap();
        let c: Vec<_> = bs.iter().map(|b| sector_coeffs(b.theta, b.alpha).unwrap()).collect();
        assert!((sys.matrix[0][0] - (c[0].a2 + c[1].a2)).abs() < 1e-15);
        assert!((sys.matrix[1][1] - (c[0].a0 + c[1].a0)).abs() < 1e-15);
        assert_eq!(sys.matrix[0][1], sys.matrix[1][0]);
        let p = sys.solve().unwrap();
        // the solution satisfies the uncentered equations
        let r0 = sys.matrix[0][0] * p.x + sys.matrix[0][1] * p.y - sys.rhs[0];
        let r1 = sys.matrix[1][0] * p.x + sys.matrix[1][1] * p.y - sys.rhs[1];
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
    }

    fn arb_bearing() -> impl Strategy<Value = BearingEstimate> {
        (-100.0f64..100.0, -100.0f64..100.0, 0.0f64..std::f64::consts::TAU, 1e-3f64..FRAC_PI_4)
            .prop_map(|(x, y, t, a)| bearing(x, y, t, a))
    }

    proptest! {
        #[test]
        fn coeff_identities(theta in 0.0f64..std::f64::consts::TAU, alpha in 1e-4f64..FRAC_PI_4) {
            let c = sector_coeffs(Angle::new(theta), alpha).unwrap();
            prop_assert!((c.a0 + c.a2 - 2.0 * alpha).abs() < 1e-14);
            let det = c.a0 * c.a2 - c.a1 * c.a1;
            let want = alpha * alpha - 0.25 * (2.0 * alpha).sin().powi(2);
            prop_assert!((det - want).abs() < 1e-14);
            prop_assert!(want > 0.0);
        }

        #[test]
        fn system_is_positive_definite(bs in prop::collection::vec(arb_bearing(), 1..20)) {
            prop_assert!(FusionSystem::assemble(&bs).unwrap().is_positive_definite());
        }

        #[test]
        fn translation_equivariance(
            bs in prop::collection::vec(arb_bearing(), 2..12), vx in -50.0f64..50.0, vy in -50.0f64..50.0
        ) {
            let v = Point2::new(vx, vy);
            let p = fuse_bearings(&bs).unwrap();
            let moved: Vec<_> = bs.iter().map(|b| bearing(b.x + vx, b.y + vy, b.theta.radians(), b.alpha)).collect();
            let q = fuse_bearings(&moved).unwrap();
            let tol = 1e-9 * (1.0 + p.norm());
            prop_assert!(q.distance(p + v) < tol, "{:?} vs {:?}", q, p + v);
        }

        #[test]
        fn rotation_equivariance(bs in prop::collection::vec(arb_bearing(), 2..12), phi in -PI..PI) {
            let p = fuse_bearings(&bs).unwrap();
            let rotated: Vec<_> = bs
                .iter()
                .map(|b| {
                    let q = b.position().rotate(phi);
                    bearing(q.x, q.y, b.theta.radians() + phi, b.alpha)
                })
                .collect();
            let q = fuse_bearings(&rotated).unwrap();
            prop_assert!(q.distance(p.rotate(phi)) < 1e-9 * (1.0 + p.norm()));
        }

        #[test]
        fn expected_point_tends_to_projection(
            x in -50.0f64..50.0, y in -50.0f64..50.0, tx in -50.0f64..50.0, ty in -50.0f64..50.0,
            theta in 0.0f64..std::f64::consts::TAU
        ) {
            let target = Point2::new(tx, ty);
            let exact = closest_point_on_line(Point2::new(x, y), Angle::new(theta), target);
            let scale = 1.0 + target.distance(Point2::new(x, y));
            for alpha in [1e-2, 1e-3] {
                let e = expected_closest_point(target, &bearing(x, y, theta, alpha)).unwrap();
                // O(α²) convergence
                prop_assert!(e.distance(exact) <= 2.0 * alpha * alpha * scale);
            }
        }
    }
}
