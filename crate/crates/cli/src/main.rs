use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lobesense::config::RunConfig;
use lobesense::experiment::{run_once, run_sweep, write_artifacts, SweepAxis, SweepSpec};
use lobesense::localization::{fuse_bearings, parse_bearings};
use lobesense::scenario::EstimatorMode;
use lobesense::validation::{run_validation, ValidationSizes};
use lobesense::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "lobesense", version, about = "Blocker localization from mmWave interference sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, grid, deployment and manifest files.
    Simulate(RunArgs),
    /// Repeat a scenario over values of one parameter and several seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// blocker_radius, blocker_speed or cooperators
        #[arg(long)]
        axis: String,
        /// Comma-separated values of the swept parameter.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        /// Seeds per value (defaults to `repetitions` from the config).
        #[arg(long)]
        repetitions: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fuse bearings read from FILE (`x y theta_deg alpha_deg` per line).
    Localize { file: PathBuf },
    /// Check the closed-form geometry against numerical references.
    Validate {
        /// Smaller instance counts.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed (simulate) or master seed (sweep).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `output_dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Svd,
    Oracle,
}

impl RunArgs {
    fn resolve(&self) -> Result<(RunConfig, PathBuf), Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.estimator = match mode {
                Mode::Svd => EstimatorMode::Svd,
                Mode::Oracle => EstimatorMode::Oracle,
            };
        }
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
        cfg.output_dir = out.display().to_string();
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

fn simulate(args: &RunArgs) -> Result<(), Error> {
    let (cfg, out) = args.resolve()?;
    let result = run_once(&cfg)?;
    write_artifacts(&out, &cfg, &result)?;
    let s = &result.summary;
    if result.output.warmup_incomplete {
        eprintln!("warning: duration does not exceed the sensing window; no steps were recorded");
    }
    println!("seed {}", s.seed);
    println!("records {} (fresh estimates {})", s.records, s.fresh_estimates);
    println!("central mean error {} m (radius {} m)", fmt_opt(s.central_mean_error), cfg.central_radius_m);
    println!("coverage {:.3} ({} of {} visited cells)", s.coverage, s.covered_cells, s.visited_cells);
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(
    args: &RunArgs,
    axis: &str,
    values: &[f64],
    repetitions: Option<usize>,
    workers: Option<usize>,
) -> Result<(), Error> {
    let (cfg, out) = args.resolve()?;
    let spec = SweepSpec {
        axis: axis.parse::<SweepAxis>()?,
        values: values.to_vec(),
        repetitions: repetitions.unwrap_or(cfg.repetitions),
    };
    let result = run_sweep(&cfg, &spec, Some(&out), workers.unwrap_or(cfg.workers))?;
    println!("{:>10} {:>5} {:>12} {:>10} {:>9}", spec.axis.name(), "runs", "mean_error", "std_error", "coverage");
    for p in &result.points {
        println!(
            "{:>10} {:>5} {:>12} {:>10} {:>9.3}",
            p.value,
            p.runs,
            fmt_opt(p.mean_error),
            fmt_opt(p.std_error),
            p.mean_coverage
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn localize(path: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let p = fuse_bearings(&parse_bearings(&text)?)?;
    println!("{:.4} {:.4}", p.x, p.y);
    Ok(())
}

fn validate(quick: bool, seed: u64) -> Result<bool, Error> {
    let sizes = if quick { ValidationSizes::quick() } else { ValidationSizes::full() };
    let mut ok = true;
    for r in run_validation(sizes, seed) {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => simulate(args).map(|_| true),
        Command::Sweep {
            run,
            axis,
            values,
            repetitions,
            workers,
        } => sweep(run, axis, values, *repetitions, *workers).map(|_| true),
        Command::Localize { file } => localize(file).map(|_| true),
        Command::Validate { quick, seed } => validate(*quick, *seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUNTIME),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}
