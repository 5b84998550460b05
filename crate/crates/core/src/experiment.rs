//! Single runs with on-disk artifacts, and parameter sweeps over seeds.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, MotionKind, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{MeshGrid, Point2};
use crate::scenario::{
    accumulate_error_grid, run_scenario, write_detections_csv, write_trajectory_csv, ErrorGrid, ScenarioConfig,
    ScenarioOutput,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Headline numbers of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub records: usize,
    /// Records with an estimate fused at that step.
    pub fresh_estimates: usize,
    /// Mean of per-cell mean errors within the central radius.
    pub central_mean_error: Option<f64>,
    pub coverage: f64,
    pub covered_cells: usize,
    pub visited_cells: usize,
}

pub struct RunResult {
    pub output: ScenarioOutput,
    pub grid: ErrorGrid,
    pub summary: RunSummary,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Run `cfg` with run seed `cfg.seed` and aggregate its error grid.
pub fn run_once(cfg: &RunConfig) -> Result<RunResult> {
    let scenario = cfg.scenario(cfg.seed)?;
    run_scenario_config(cfg, &scenario)
}

fn run_scenario_config(cfg: &RunConfig, scenario: &ScenarioConfig) -> Result<RunResult> {
    let output = run_scenario(scenario)?;
    let mesh = MeshGrid::covering_disk(cfg.radius_m, cfg.grid_cell_m)?;
    let grid = accumulate_error_grid(&output.records, mesh, cfg.bin_by, cfg.score_carried);
    let summary = RunSummary {
        seed: scenario.seed,
        records: output.records.len(),
        fresh_estimates: output
            .records
            .iter()
            .filter(|r| r.estimate.is_some() && !r.flags.carried_forward)
            .count(),
        central_mean_error: grid.region_mean(Point2::ORIGIN, cfg.central_radius_m),
        coverage: grid.coverage(),
        covered_cells: grid.covered_cells(),
        visited_cells: grid.visited_cells(),
    };
    Ok(RunResult { output, grid, summary })
}

/// Resolved config preceded by version and seed comments; loadable as a config.
pub fn manifest(cfg: &RunConfig) -> String {
    format!(
        "# lobesense {VERSION}\n# run seed {}\n{}",
        cfg.seed,
        cfg.to_toml_string()
    )
}

/// Write `trajectory.csv`, `grid.csv`, `deployment.json`, `manifest.toml`
/// and, when traced, `detections.csv` into `dir`.
pub fn write_artifacts(dir: &Path, cfg: &RunConfig, result: &RunResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trajectory_csv(&result.output.records, create(&dir.join("trajectory.csv"))?)?;
    result.grid.write_csv(create(&dir.join("grid.csv"))?)?;
    result.output.deployment.write_json(&dir.join("deployment.json"))?;
    if cfg.trace_detections {
        write_detections_csv(&result.output.detections, create(&dir.join("detections.csv"))?)?;
    }
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest(cfg)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    BlockerRadius,
    BlockerSpeed,
    Cooperators,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::BlockerRadius => "blocker_radius",
            SweepAxis::BlockerSpeed => "blocker_speed",
            SweepAxis::Cooperators => "cooperators",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::BlockerRadius => cfg.blocker_radius_m = value,
            SweepAxis::BlockerSpeed => match cfg.motion {
                MotionKind::RandomWaypoint => {
                    cfg.speed_min_mps = value;
                    cfg.speed_max_mps = value;
                }
                _ => cfg.speed_mps = value,
            },
            SweepAxis::Cooperators => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(Error::invalid("cooperators", format!("{value} is not a whole number")));
                }
                cfg.cooperators = value as usize;
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blocker_radius" => Ok(SweepAxis::BlockerRadius),
            "blocker_speed" => Ok(SweepAxis::BlockerSpeed),
            "cooperators" => Ok(SweepAxis::Cooperators),
            other => Err(Error::invalid(
                "axis",
                format!("unknown axis `{other}` (blocker_radius, blocker_speed, cooperators)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repetitions: usize,
}

/// Aggregate over the repetitions of one sweep value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// Repetitions with a central-region estimate.
    pub runs: usize,
    pub mean_error: Option<f64>,
    /// Standard error of `mean_error` across repetitions.
    pub std_error: Option<f64>,
    pub mean_coverage: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Per value, per repetition.
    pub runs: Vec<Vec<RunSummary>>,
    pub points: Vec<SweepPoint>,
}

/// Seed of repetition `r` under master seed `master`, shared by all sweep values.
pub fn repetition_seed(master: u64, r: usize) -> u64 {
    derive_seed(master, r as u64)
}

fn point(value: f64, runs: &[RunSummary]) -> SweepPoint {
    let errors: Vec<f64> = runs.iter().filter_map(|r| r.central_mean_error).collect();
    let n = errors.len();
    let mean = (n > 0).then(|| errors.iter().sum::<f64>() / n as f64);
    let std_error = mean.filter(|_| n > 1).map(|m| {
        let var = errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    SweepPoint {
        value,
        runs: n,
        mean_error: mean,
        std_error,
        mean_coverage: runs.iter().map(|r| r.coverage).sum::<f64>() / runs.len().max(1) as f64,
    }
}

/// Run every (value, repetition) pair on up to `workers` threads (0 = all
/// cores). With `out`, each run writes its artifacts under
/// `out/<axis>_<value>/rep_<r>/` and `summary.csv`/`runs.csv` are written
/// once all runs finish.
pub fn run_sweep(base: &RunConfig, spec: &SweepSpec, out: Option<&Path>, workers: usize) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    if spec.repetitions == 0 {
        return Err(Error::invalid("repetitions", "must be >= 1"));
    }
    let configs: Vec<RunConfig> = spec
        .values
        .iter()
        .map(|&v| spec.axis.apply(base, v))
        .collect::<Result<_>>()?;
    // every value of a repetition must see the same deployment
    let min_ues = configs.iter().map(|c| c.cooperators + 1).max().unwrap_or(1);
    let mut jobs = Vec::new();
    for (vi, cfg) in configs.iter().enumerate() {
        for r in 0..spec.repetitions {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = repetition_seed(base.seed, r);
            let mut scenario = run_cfg.scenario(run_cfg.seed)?;
            scenario.deployment.min_ues = min_ues;
            jobs.push((vi, r, run_cfg, scenario));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let summaries: Vec<RunSummary> = pool.install(|| {
        jobs.par_iter()
            .map(|(vi, r, cfg, scenario)| {
                let result = run_scenario_config(cfg, scenario)?;
                if let Some(dir) = out {
                    let sub = run_dir(dir, spec.axis, spec.values[*vi], *r);
                    write_artifacts(&sub, cfg, &result)?;
                }
                Ok(result.summary)
            })
            .collect::<Result<_>>()
    })?;

    let runs: Vec<Vec<RunSummary>> = summaries.chunks(spec.repetitions).map(<[RunSummary]>::to_vec).collect();
    let points = spec.values.iter().zip(&runs).map(|(&v, rs)| point(v, rs)).collect();
    let result = SweepResult {
        spec: spec.clone(),
        runs,
        points,
    };
    if let Some(dir) = out {
        write_sweep_tables(dir, &result)?;
        let path = dir.join("manifest.toml");
        let text = format!(
            "# sweep axis {} values {:?} repetitions {}\n{}",
            spec.axis,
            spec.values,
            spec.repetitions,
            manifest(base)
        );
        fs::write(&path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(result)
}

pub fn run_dir(out: &Path, axis: SweepAxis, value: f64, repetition: usize) -> PathBuf {
    out.join(format!("{axis}_{value}")).join(format!("rep_{repetition}"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_sweep_tables(dir: &Path, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = csv::Writer::from_writer(create(&dir.join("summary.csv"))?);
    w.write_record(["axis", "value", "runs", "mean_error", "std_error", "mean_coverage"])?;
    for p in &result.points {
        w.write_record([
            result.spec.axis.name().to_string(),
            p.value.to_string(),
            p.runs.to_string(),
            fmt_opt(p.mean_error),
            fmt_opt(p.std_error),
            format!("{:.6}", p.mean_coverage),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    let mut w = csv::Writer::from_writer(create(&dir.join("runs.csv"))?);
    w.write_record([
        "value",
        "repetition",
        "seed",
        "records",
        "fresh_estimates",
        "central_mean_error",
        "coverage",
    ])?;
    for (p, runs) in result.points.iter().zip(&result.runs) {
        for (r, s) in runs.iter().enumerate() {
            w.write_record([
                p.value.to_string(),
                r.to_string(),
                s.seed.to_string(),
                s.records.to_string(),
                s.fresh_estimates.to_string(),
                fmt_opt(s.central_mean_error),
                format!("{:.6}", s.coverage),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::EstimatorMode;

    fn quick() -> RunConfig {
        RunConfig {
            estimator: EstimatorMode::Oracle,
            duration_s: Some(120.0),
            ..RunConfig::default()
        }
    }

    #[test]
    fn axis_parsing_and_application() {
        assert_eq!("cooperators".parse::<SweepAxis>().unwrap(), SweepAxis::Cooperators);
        assert!("size".parse::<SweepAxis>().is_err());
        let c = SweepAxis::BlockerSpeed.apply(&quick(), 2.0).unwrap();
        assert_eq!(c.speed_mps, 2.0);
        assert!(SweepAxis::Cooperators.apply(&quick(), 2.5).is_err());
    }

    #[test]
    fn sweep_is_ordered_and_reproducible() {
        let spec = SweepSpec {
            axis: SweepAxis::Cooperators,
            values: vec![3.0, 6.0],
            repetitions: 2,
        };
        let a = run_sweep(&quick(), &spec, None, 2).unwrap();
        let b = run_sweep(&quick(), &spec, None, 1).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.runs.len(), 2);
        // repetitions share seeds across values
        assert_eq!(a.runs[0][1].seed, a.runs[1][1].seed);
        assert_ne!(a.runs[0][0].seed, a.runs[0][1].seed);
    }

    #[test]
    fn artifacts_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { seed: 77, ..quick() };
        let res = run_once(&cfg).unwrap();
        write_artifacts(dir.path(), &cfg, &res).unwrap();
        for f in ["trajectory.csv", "grid.csv", "deployment.json", "manifest.toml"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let again = RunConfig::load(&dir.path().join("manifest.toml")).unwrap();
        assert_eq!(again, cfg);
    }
}
