//! Planar points, wrapped angles, angular sectors and the evaluation mesh.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Direction from `self` toward `other` in the global frame, unwrapped.
    pub fn heading_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn rotate(self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// An angle normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

/// Reduce `raw` radians modulo 2π into `[0, 2π)`.
pub fn wrap_angle(raw: f64) -> Result<Angle> {
    if !raw.is_finite() {
        return Err(Error::NonFiniteAngle(raw));
    }
    Ok(Angle(wrap_finite(raw)))
}

fn wrap_finite(raw: f64) -> f64 {
    let r = raw.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Panics on non-finite input; use [`wrap_angle`] for fallible construction.
    pub fn new(raw: f64) -> Self {
        wrap_angle(raw).expect("finite angle")
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    /// Equivalent angle in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    /// Smallest absolute angular separation, in `[0, π]`.
    pub fn separation(self, other: Angle) -> f64 {
        (self - other).signed().abs()
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(wrap_finite(self.0 + rhs.0))
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(wrap_finite(self.0 - rhs.0))
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;
    fn try_from(raw: f64) -> Result<Self> {
        wrap_angle(raw)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Partition of the local angular frame into equal contiguous sectors.
///
/// Sector `k` is centered on `k·2α` and spans `[k·2α − α, k·2α + α)`, so
/// sector 0 straddles the local boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorLayout {
    sector_count: usize,
    half_width: f64,
}

impl SectorLayout {
    pub fn new(sector_count: usize) -> Result<Self> {
        if sector_count < 2 {
            return Err(Error::invalid("sector_count", "need at least 2 sectors"));
        }
        Ok(Self {
            sector_count,
            half_width: PI / sector_count as f64,
        })
    }

    /// Layout whose sector width (2α) is `width_deg` degrees; the width must
    /// divide 360° into an integer number of sectors.
    pub fn from_width_degrees(width_deg: f64) -> Result<Self> {
        if !(width_deg > 0.0 && width_deg <= 180.0) {
            return Err(Error::invalid(
                "sector_width_deg",
                format!("{width_deg} not in (0, 180]"),
            ));
        }
        let count = 360.0 / width_deg;
        let rounded = count.round();
        if (count - rounded).abs() > 1e-9 {
            return Err(Error::invalid(
                "sector_width_deg",
                format!("{width_deg} does not tile 360 degrees"),
            ));
        }
        Self::new(rounded as usize)
    }

    pub fn sector_count(&self) -> usize {
        self.sector_count
    }

    /// α, half of the sector width.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn sector_center(&self, k: usize) -> Angle {
        Angle::new((k % self.sector_count) as f64 * 2.0 * self.half_width)
    }

    pub fn sector_index(&self, local_aoa: Angle) -> usize {
        let k = (local_aoa.radians() / (2.0 * self.half_width) + 0.5).floor() as usize;
        k % self.sector_count
    }
}

/// Free-function form of [`SectorLayout::sector_index`].
pub fn sector_index(layout: &SectorLayout, local_aoa: Angle) -> usize {
    layout.sector_index(local_aoa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

/// Axis-aligned square mesh used to bin localization errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshGrid {
    pub origin: Point2,
    pub cell_size: f64,
    pub width_cells: usize,
    pub height_cells: usize,
}

impl MeshGrid {
    pub fn new(origin: Point2, cell_size: f64, width_cells: usize, height_cells: usize) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::invalid("grid_cell_m", format!("{cell_size} must be > 0")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("grid_origin", "non-finite origin"));
        }
        Ok(Self {
            origin,
            cell_size,
            width_cells,
            height_cells,
        })
    }

    /// Smallest grid anchored at `(-R, -R)` covering the disk of radius `R`.
    pub fn covering_disk(radius: f64, cell_size: f64) -> Result<Self> {
        let n = (2.0 * radius / cell_size).ceil().max(1.0) as usize;
        Self::new(Point2::new(-radius, -radius), cell_size, n, n)
    }

    /// Cell containing `p`, or `None` when `p` lies outside the mesh.
    pub fn cell_index(&self, p: Point2) -> Option<CellIndex> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.width_cells && j < self.height_cells).then_some(CellIndex { i, j })
    }

    pub fn cell_center(&self, cell: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cell.i as f64 + 0.5) * self.cell_size,
            self.origin.y + (cell.j as f64 + 0.5) * self.cell_size,
        )
    }
}
