//! Per-cell aggregation of localization errors.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::StepRecord;
use crate::error::Result;
use crate::geometry::{CellIndex, MeshGrid, Point2};

/// Which position decides the cell a record is binned into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBinning {
    #[default]
    TruePosition,
    Estimate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellStats {
    /// Records binned here, with or without an estimate.
    pub visits: u64,
    /// Records binned here with an estimate fused at that step.
    pub estimates: u64,
    /// Records whose estimate was carried forward from an earlier step.
    pub carried: u64,
    /// Records contributing to `error_sum`.
    pub scored: u64,
    pub error_sum: f64,
}

impl CellStats {
    pub fn mean_error(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.error_sum / self.scored as f64)
    }
}

#[derive(Debug, Clone)]
pub struct ErrorGrid {
    pub mesh: MeshGrid,
    pub cells: BTreeMap<CellIndex, CellStats>,
    /// Records whose binning position fell outside the mesh.
    pub outside: u64,
}

/// Bin every record; records without a blocker are skipped. Carried-forward
/// records are binned by true position and, when `score_carried` is set,
/// scored with the held estimate. Coverage only counts fresh estimates.
pub fn accumulate_error_grid(
    records: &[StepRecord],
    mesh: MeshGrid,
    binning: ErrorBinning,
    score_carried: bool,
) -> ErrorGrid {
    let mut grid = ErrorGrid {
        mesh,
        cells: BTreeMap::new(),
        outside: 0,
    };
    for r in records {
        let Some(truth) = r.blocker else { continue };
        let at = match (binning, r.estimate) {
            (ErrorBinning::Estimate, Some(e)) if !r.flags.carried_forward => e,
            _ => truth,
        };
        let Some(cell) = mesh.cell_index(at) else {
            grid.outside += 1;
            continue;
        };
        let s = grid.cells.entry(cell).or_default();
        s.visits += 1;
        let Some(err) = r.error() else { continue };
        if r.flags.carried_forward {
            s.carried += 1;
            if !score_carried {
                continue;
            }
        } else {
            s.estimates += 1;
        }
        s.scored += 1;
        s.error_sum += err;
    }
    grid
}

impl ErrorGrid {
    pub fn mean_error(&self, cell: CellIndex) -> Option<f64> {
        self.cells.get(&cell).and_then(CellStats::mean_error)
    }

    /// Average of per-cell mean errors over cells centered within `radius`
    /// of `center`; `None` if no such cell has an estimate.
    pub fn region_mean(&self, center: Point2, radius: f64) -> Option<f64> {
        let means: Vec<f64> = self
            .cells
            .iter()
            .filter(|(c, _)| self.mesh.cell_center(**c).distance(center) <= radius)
            .filter_map(|(_, s)| s.mean_error())
            .collect();
        (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
    }

    pub fn visited_cells(&self) -> usize {
        self.cells.values().filter(|s| s.visits > 0).count()
    }

    pub fn covered_cells(&self) -> usize {
        self.cells.values().filter(|s| s.estimates > 0).count()
    }

    /// Fraction of visited cells holding at least one estimate.
    pub fn coverage(&self) -> f64 {
        let v = self.visited_cells();
        if v == 0 {
            0.0
        } else {
            self.covered_cells() as f64 / v as f64
        }
    }

    /// `cell_i,cell_j,center_x,center_y,mean_error,visits,estimates`; cells
    /// without a scored record leave `mean_error` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell_i", "cell_j", "center_x", "center_y", "mean_error", "visits", "estimates"])?;
        for (cell, s) in &self.cells {
            let c = self.mesh.cell_center(*cell);
            w.write_record([
                cell.i.to_string(),
                cell.j.to_string(),
                format!("{:.3}", c.x),
                format!("{:.3}", c.y),
                s.mean_error().map(|m| format!("{m:.6}")).unwrap_or_default(),
                s.visits.to_string(),
                s.estimates.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
