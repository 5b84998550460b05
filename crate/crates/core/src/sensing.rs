//! Sector-aggregated interference, S-SINR rows and the rolling sensing
//! matrix each UE maintains.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{rx_power, BlockerState, Fading, Link, RadioParams};
use crate::deployment::NetworkDeployment;
use crate::error::{Error, Result};
use crate::geometry::{Angle, SectorLayout};

/// Which of its associated UEs each BS beams toward at a given step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    /// Every BS keeps serving the first UE of its schedule.
    #[default]
    Static,
    /// Every BS cycles through its UEs, one per step.
    RoundRobin,
}

/// Scheduled UE per BS at `step`; `None` for BSs without UEs (silent).
pub fn scheduled_targets(dep: &NetworkDeployment, scheduling: Scheduling, step: u64) -> Vec<Option<usize>> {
    dep.bs_schedule
        .iter()
        .map(|ues| {
            if ues.is_empty() {
                return None;
            }
            Some(match scheduling {
                Scheduling::Static => ues[0],
                Scheduling::RoundRobin => ues[(step % ues.len() as u64) as usize],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceContribution {
    pub source_bs: usize,
    /// Arrival angle in the receiving UE's frame (0 = serving BS direction).
    pub aoa_local: Angle,
    pub power: f64,
}

/// Everything a UE needs to evaluate one time step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub dep: &'a NetworkDeployment,
    pub targets: &'a [Option<usize>],
    pub blocker: Option<&'a BlockerState>,
    pub fading: &'a Fading,
    pub radio: &'a RadioParams,
}

/// One contribution per active non-serving BS, each with its own fading draw.
pub fn interference_contributions<R: Rng + ?Sized>(
    ue: usize,
    ctx: &StepContext<'_>,
    rng: &mut R,
) -> Vec<InterferenceContribution> {
    let dep = ctx.dep;
    let ue_pos = dep.ue_positions[ue];
    let serving = dep.serving_bs(ue);
    let orientation = dep.ue_orientation[ue];
    let mut out = Vec::new();
    for (b, target) in ctx.targets.iter().enumerate() {
        let Some(target) = *target else { continue };
        if b == serving {
            continue;
        }
        let bs_pos = dep.bs_positions[b];
        let link = Link {
            tx_pos: bs_pos,
            rx_pos: ue_pos,
            tx_beam_dir: Angle::new(bs_pos.heading_to(dep.ue_positions[target])),
            rx_beam_dir: orientation,
        };
        let zeta = ctx.fading.draw(rng);
        out.push(InterferenceContribution {
            source_bs: b,
            aoa_local: Angle::new(ue_pos.heading_to(bs_pos)) - orientation,
            power: rx_power(&link, ctx.blocker, zeta, ctx.radio),
        });
    }
    out
}

/// Received power on the serving link, with the serving beam aligned on `ue`.
pub fn serving_power<R: Rng + ?Sized>(ue: usize, ctx: &StepContext<'_>, rng: &mut R) -> f64 {
    let dep = ctx.dep;
    let ue_pos = dep.ue_positions[ue];
    let bs_pos = dep.bs_positions[dep.serving_bs(ue)];
    let link = Link {
        tx_pos: bs_pos,
        rx_pos: ue_pos,
        tx_beam_dir: Angle::new(bs_pos.heading_to(ue_pos)),
        rx_beam_dir: dep.ue_orientation[ue],
    };
    let zeta = ctx.fading.draw(rng);
    rx_power(&link, ctx.blocker, zeta, ctx.radio)
}

/// Interference power summed per sector.
pub fn sector_interference(contribs: &[InterferenceContribution], layout: &SectorLayout) -> Vec<f64> {
    let mut sums = vec![0.0; layout.sector_count()];
    for c in contribs {
        sums[layout.sector_index(c.aoa_local)] += c.power;
    }
    sums
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrRow {
    /// Linear S-SINR per sector.
    pub values: Vec<f64>,
    pub timestamp: f64,
}

impl SinrRow {
    /// `γ_k = P_Rx / (I_k + N₀B)` for every sector.
    pub fn from_powers(serving: f64, sector_interference: &[f64], noise: f64, timestamp: f64) -> Self {
        Self {
            values: sector_interference.iter().map(|i| serving / (i + noise)).collect(),
            timestamp,
        }
    }
}

pub fn s_sinr_row<R: Rng + ?Sized>(
    ue: usize,
    ctx: &StepContext<'_>,
    layout: &SectorLayout,
    timestamp: f64,
    rng: &mut R,
) -> SinrRow {
    let serving = serving_power(ue, ctx, rng);
    let contribs = interference_contributions(ue, ctx, rng);
    let sectors = sector_interference(&contribs, layout);
    SinrRow::from_powers(serving, &sectors, ctx.radio.noise_watts(), timestamp)
}

/// Rolling window of the `τ + 1` most recent S-SINR rows of one UE.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    owner_ue: usize,
    sectors: usize,
    capacity: usize,
    // oldest first
    rows: VecDeque<SinrRow>,
}

impl SensingMatrix {
    /// Matrix for a window of `tau` steps, i.e. `tau + 1` rows.
    pub fn new(owner_ue: usize, tau: usize, sectors: usize) -> Self {
        Self {
            owner_ue,
            sectors,
            capacity: tau + 1,
            rows: VecDeque::with_capacity(tau + 1),
        }
    }

    pub fn owner_ue(&self) -> usize {
        self.owner_ue
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.capacity
    }

    pub fn push_row(&mut self, row: SinrRow) -> Result<()> {
        if row.values.len() != self.sectors {
            return Err(Error::RowWidthMismatch {
                expected: self.sectors,
                got: row.values.len(),
            });
        }
        if let Some(last) = self.rows.back() {
            if !(row.timestamp > last.timestamp) {
                return Err(Error::NonMonotoneTimestamp {
                    last: last.timestamp,
                    got: row.timestamp,
                });
            }
        }
        if self.rows.len() == self.capacity {
            self.rows.pop_front();
        }
        self.rows.push_back(row);
        Ok(())
    }

    /// Rows newest first: row 0 is time `t`, the last row is `t − τ`.
    pub fn rows_newest_first(&self) -> impl Iterator<Item = &SinrRow> {
        self.rows.iter().rev()
    }

    /// Linear S-SINR values, newest row first.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let rows: Vec<&SinrRow> = self.rows_newest_first().collect();
        DMatrix::from_fn(rows.len(), self.sectors, |r, c| rows[r].values[c])
    }

    /// Same layout as [`Self::to_matrix`], in dB.
    pub fn to_db_matrix(&self) -> DMatrix<f64> {
        self.to_matrix().map(|v| 10.0 * v.log10())
    }

    /// CSV with one row per time step (newest first) and one dB column per sector.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.sectors).map(|k| format!("s{k}")));
        w.write_record(&header)?;
        for row in self.rows_newest_first() {
            let mut rec = vec![format!("{:.3}", row.timestamp)];
            rec.extend(row.values.iter().map(|v| format!("{:.6}", 10.0 * v.log10())));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Fading;
    use crate::geometry::Point2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> SectorLayout {
        SectorLayout::new(36).unwrap()
    }

    fn contrib(deg: f64, power: f64) -> InterferenceContribution {
        InterferenceContribution {
            source_bs: 0,
            aoa_local: Angle::from_degrees(deg),
            power,
        }
    }

    #[test]
    fn single_bs_has_no_interferers() {
        let dep = NetworkDeployment::from_positions(100.0, vec![Point2::new(10.0, 0.0)], vec![Point2::ORIGIN]).unwrap();
        let targets = scheduled_targets(&dep, Scheduling::Static, 0);
        let radio = RadioParams::default();
        let fading = Fading::none();
        let ctx = StepContext { dep: &dep, targets: &targets, blocker: None, fading: &fading, radio: &radio };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(interference_contributions(0, &ctx, &mut rng).is_empty());
        let row = s_sinr_row(0, &ctx, &layout(), 0.0, &mut rng);
        let first = row.values[0];
        assert!(row.values.iter().all(|&v| v == first));
        let p = serving_power(0, &ctx, &mut rng);
        assert!((first - p / radio.noise_watts()).abs() <= 1e-12 * first);
    }

    #[test]
    fn interferer_in_main_lobes() {
        // interferer at (30, 10) serves a UE at (24, 8), on the ray toward u0
        let dep = NetworkDeployment::from_positions(
            100.0,
            vec![Point2::new(10.0, 0.0), Point2::new(30.0, 10.0)],
            vec![Point2::ORIGIN, Point2::new(24.0, 8.0)],
        )
        .unwrap();
        assert_eq!(dep.association, vec![0, 1]);
        let radio = RadioParams::default();
        let fading = Fading::none();
        let targets = scheduled_targets(&dep, Scheduling::Static, 0);
        let ctx = StepContext { dep: &dep, targets: &targets, blocker: None, fading: &fading, radio: &radio };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let contribs = interference_contributions(0, &ctx, &mut rng);
        assert_eq!(contribs.len(), 1);
        let d = Point2::new(30.0, 10.0).norm();
        let want = radio.tx_power_watts()
            * radio.gain_main_tx
            * crate::channel::pathloss_gain(d, 1.0)
            * radio.gain_main_rx;
        assert!((contribs[0].power / want - 1.0).abs() < 1e-12);
        let aoa = (10f64).atan2(30.0);
        assert!((contribs[0].aoa_local.radians() - aoa).abs() < 1e-12);
    }

    #[test]
    fn interferer_outside_rx_lobe_has_zero_power() {
        let dep = NetworkDeployment::from_positions(
            100.0,
            vec![Point2::new(10.0, 0.0), Point2::new(-30.0, 0.0)],
            vec![Point2::ORIGIN, Point2::new(-31.0, 0.0)],
        )
        .unwrap();
        let radio = RadioParams::default();
        let fading = Fading::none();
        let targets = scheduled_targets(&dep, Scheduling::Static, 0);
        let ctx = StepContext { dep: &dep, targets: &targets, blocker: None, fading: &fading, radio: &radio };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let contribs = interference_contributions(0, &ctx, &mut rng);
        assert_eq!(contribs.len(), 1);
        assert_eq!(contribs[0].power, 0.0);
    }

    #[test]
    fn sector_sums() {
        let l = layout();
        assert!(sector_interference(&[], &l).iter().all(|&v| v == 0.0));
        let sums = sector_interference(&[contrib(30.0, 1.0), contrib(32.0, 2.0)], &l);
        assert_eq!(sums[3], 3.0);
        assert_eq!(sums.iter().sum::<f64>(), 3.0);
        // boundary at sector 0's upper edge lands in sector 1 only
        let edge = InterferenceContribution { source_bs: 0, aoa_local: Angle::new(l.half_width()), power: 5.0 };
        let sums = sector_interference(&[edge], &l);
        assert_eq!(sums[1], 5.0);
        assert_eq!(sums.iter().filter(|&&v| v > 0.0).count(), 1);
    }

    #[test]
    fn sinr_row_monotone_in_interference() {
        let mut sectors = vec![0.0; 36];
        sectors[3] = 1e-9;
        let row = SinrRow::from_powers(1e-6, &sectors, 1e-12, 0.0);
        let ceiling = 1e-6 / 1e-12;
        assert!(row.values[3] < row.values[0]);
        assert!(row.values.iter().enumerate().filter(|(k, _)| *k != 3).all(|(_, &v)| v == ceiling));
        assert!(row.values.iter().all(|&v| v <= ceiling));
    }

    #[test]
    fn blocker_on_interferer_path_raises_sector_sinr() {
        let dep = NetworkDeployment::from_positions(
            100.0,
            vec![Point2::new(10.0, 0.0), Point2::new(30.0, 17.32)],
            vec![Point2::ORIGIN, Point2::new(31.0, 18.0)],
        )
        .unwrap();
        let radio = RadioParams::default();
        let fading = Fading::none();
        let l = layout();
        let targets = scheduled_targets(&dep, Scheduling::Static, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let free = StepContext { dep: &dep, targets: &targets, blocker: None, fading: &fading, radio: &radio };
        let before = s_sinr_row(0, &free, &l, 0.0, &mut rng);
        let sector = l.sector_index(Angle::new(17.32f64.atan2(30.0)));
        assert_eq!(sector, 3);
        let blocker = BlockerState::at(Point2::new(15.0, 8.66), 1.0);
        let blocked = StepContext { blocker: Some(&blocker), ..free };
        let after = s_sinr_row(0, &blocked, &l, 1.0, &mut rng);
        let ceiling = before.values[0];
        assert!(before.values[sector] < ceiling / 100.0);
        assert!(after.values[sector] > before.values[sector] * 1e6);
        assert!(after.values[sector] <= ceiling);
    }

    #[test]
    fn static_network_without_fading_is_constant() {
        use crate::deployment::{build_deployment, DeploymentParams};
        let params = DeploymentParams { seed: 3, ..Default::default() };
        let dep = build_deployment(&params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let radio = RadioParams::default();
        let fading = Fading::none();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = layout();
        let targets = scheduled_targets(&dep, Scheduling::Static, 0);
        let ctx = StepContext { dep: &dep, targets: &targets, blocker: None, fading: &fading, radio: &radio };
        let a = s_sinr_row(0, &ctx, &l, 0.0, &mut rng);
        let targets = scheduled_targets(&dep, Scheduling::Static, 7);
        let ctx = StepContext { targets: &targets, ..ctx };
        let b = s_sinr_row(0, &ctx, &l, 7.0, &mut rng);
        assert_eq!(a.values, b.values);
        let total: f64 = sector_interference(&interference_contributions(0, &ctx, &mut rng), &l).iter().sum();
        let direct: f64 = interference_contributions(0, &ctx, &mut rng).iter().map(|c| c.power).sum();
        assert!((total - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn round_robin_cycles() {
        let dep = NetworkDeployment::from_positions(
            100.0,
            vec![Point2::new(0.0, 0.0)],
            vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(3.0, 0.0)],
        )
        .unwrap();
        let picks: Vec<_> = (0..4).map(|s| scheduled_targets(&dep, Scheduling::RoundRobin, s)[0]).collect();
        assert_eq!(picks, vec![Some(0), Some(1), Some(2), Some(0)]);
        assert_eq!(scheduled_targets(&dep, Scheduling::Static, 5)[0], Some(0));
    }

    fn row(t: f64, v: f64) -> SinrRow {
        SinrRow { values: vec![v; 4], timestamp: t }
    }

    #[test]
    fn ring_buffer_evicts_oldest() {
        let tau = 3;
        let mut m = SensingMatrix::new(0, tau, 4);
        for k in 0..tau + 2 {
            m.push_row(row(k as f64, k as f64 + 1.0)).unwrap();
        }
        assert!(m.is_full());
        let ts: Vec<f64> = m.rows_newest_first().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn export_layout_newest_first() {
        let tau = 50;
        let mut m = SensingMatrix::new(2, tau, 4);
        for k in 0..=tau {
            m.push_row(row(k as f64, k as f64 + 1.0)).unwrap();
        }
        let x = m.to_matrix();
        assert_eq!(x.shape(), (tau + 1, 4));
        assert_eq!(x[(0, 0)], (tau + 1) as f64);
        assert_eq!(x[(tau, 3)], 1.0);
    }

    #[test]
    fn rejects_bad_rows() {
        let mut m = SensingMatrix::new(0, 3, 4);
        m.push_row(row(1.0, 1.0)).unwrap();
        assert!(matches!(m.push_row(row(1.0, 1.0)), Err(Error::NonMonotoneTimestamp { .. })));
        assert!(matches!(m.push_row(row(0.5, 1.0)), Err(Error::NonMonotoneTimestamp { .. })));
        let narrow = SinrRow { values: vec![1.0; 3], timestamp: 2.0 };
        assert!(matches!(m.push_row(narrow), Err(Error::RowWidthMismatch { .. })));
    }

    #[test]
    fn csv_export_in_db() {
        let mut m = SensingMatrix::new(0, 1, 2);
        m.push_row(SinrRow { values: vec![1.0, 10.0], timestamp: 0.0 }).unwrap();
        m.push_row(SinrRow { values: vec![100.0, 1000.0], timestamp: 1.0 }).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,s0,s1\n1.000,20.000000,30.000000\n0.000,0.000000,10.000000\n");
    }
}
