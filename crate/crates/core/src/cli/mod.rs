//! Command-line front end: `run`, `sweep`, `cluster` and `check`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! divergence of a single run.

pub mod check;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dynamics::ExtendedState;
use crate::error::{Error, Result};
use crate::experiments::{
    axis_grid, cluster_batch, default_fixture_dir, sweep, write_cluster_csv, write_json,
    write_sweep_csv, ClusterExperimentSpec, ClusterSystem, IcSet, Metadata, Method, MomentumPolicy,
    OptimizerSpec, Plane, SweepSpec,
};
use crate::integrators::{integrate, RunStatus, SchemeKind, StoppingRule, DEFAULT_MTS_SUBSTEPS};
use crate::potentials::xyz::{read_xyz, write_xyz};
use crate::potentials::{Harmonic, Objective, Rosenbrock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fadopt",
    version,
    about = "Friction-adaptive descent optimizers and benchmarks"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// INI file (section per subcommand) or a metadata.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for sweeps and cluster batches.
    #[arg(long, global = true, env = "FADOPT_JOBS")]
    pub jobs: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single optimization run; writes trace.csv and metadata.json.
    Run(RunArgs),
    /// Parameter-plane sweep over an initialization set.
    Sweep(SweepArgs),
    /// Seeded cluster-minimization batch.
    Cluster(ClusterArgs),
    /// Verification suites.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialName {
    Harmonic,
    Rosenbrock,
    Lj38,
    Lj75,
    Morse64,
}

impl PotentialName {
    fn cluster(self) -> Option<ClusterSystem> {
        match self {
            PotentialName::Lj38 => Some(ClusterSystem::Lj38),
            PotentialName::Lj75 => Some(ClusterSystem::Lj75),
            PotentialName::Morse64 => Some(ClusterSystem::Morse64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Ldhd,
    Kfad,
    Ffad,
    Mcfad,
    Adam,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OptimizerArgs {
    #[arg(long, value_enum)]
    pub method: MethodName,
    /// Mixture weight on the identity (mcfad).
    #[arg(long, default_value_t = 0.1)]
    pub lambda1: f64,
    /// Mixture weight on the force-direction projector (mcfad).
    #[arg(long, default_value_t = 0.9)]
    pub lambda2: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Friction relaxation rate; the moment decay rate for adam.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

impl OptimizerArgs {
    fn method(&self) -> Method {
        match self.method {
            MethodName::Ldhd => Method::Ldhd,
            MethodName::Kfad => Method::Kfad,
            MethodName::Ffad => Method::Ffad,
            MethodName::Mcfad => Method::Mcfad {
                lambda1: self.lambda1,
                lambda2: self.lambda2,
            },
            MethodName::Adam => Method::Adam,
        }
    }

    fn required(v: Option<f64>, name: &str) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
    }

    fn spec(&self) -> Result<OptimizerSpec> {
        Ok(OptimizerSpec::new(
            self.method(),
            Self::required(self.dt, "dt")?,
            Self::required(self.gamma, "gamma")?,
            self.alpha,
            self.mu,
        ))
    }

    /// Like `spec`, with placeholders for the two values a sweep varies.
    fn spec_for_plane(&self, plane: Plane) -> Result<OptimizerSpec> {
        let (dt, gamma) = match plane {
            Plane::GammaDt => (self.dt.unwrap_or(0.01), self.gamma.unwrap_or(1.0)),
            Plane::MuAlpha => (
                Self::required(self.dt, "dt")?,
                Self::required(self.gamma, "gamma")?,
            ),
        };
        Ok(OptimizerSpec::new(
            self.method(),
            dt,
            gamma,
            self.alpha,
            self.mu,
        ))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub potential: PotentialName,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptimizerArgs,
    /// Override the method's default scheme.
    #[arg(long)]
    pub scheme: Option<SchemeKind>,
    #[arg(long, default_value_t = DEFAULT_MTS_SUBSTEPS)]
    pub mts_substeps: usize,
    /// Initial position, comma separated. Clusters default to their
    /// reference or lattice structure.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Initial cluster structure as an XYZ file.
    #[arg(long)]
    pub x0_file: Option<PathBuf>,
    /// Distance to the minimizer, or gradient norm when the minimizer is unknown.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
    /// Trace recording stride; defaults to 1 for d <= 10 and 10 otherwise.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub fixture_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPotential {
    Harmonic,
    Rosenbrock,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "rosenbrock")]
    pub potential: SweepPotential,
    /// gamma-dt or mu-alpha.
    #[arg(long, default_value = "gamma-dt")]
    pub plane: Plane,
    /// First axis as `lo,hi,n`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub axis1: Vec<f64>,
    /// Second axis as `lo,hi,n`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub axis2: Vec<f64>,
    /// Log-spaced axes (1, 2 or both).
    #[arg(long, value_delimiter = ',')]
    pub log_axis: Vec<u8>,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptimizerArgs,
    /// Points per side of the initialization grid.
    #[arg(long, default_value_t = 40)]
    pub ic_grid: usize,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-2,2"
    )]
    pub x_range: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-1,3"
    )]
    pub y_range: Vec<f64>,
    /// Single initial point instead of the grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 1500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ClusterArgs {
    #[arg(long)]
    pub system: ClusterSystem,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptimizerArgs,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// thermalized or zeroed.
    #[arg(long, default_value = "zeroed")]
    pub momenta: MomentumPolicy,
    /// Relative energy tolerance for a success.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub energy_stride: usize,
    #[arg(long)]
    pub fixture_dir: Option<PathBuf>,
    /// Write each run's final structure to `<out>/structures/`.
    #[arg(long)]
    pub dump_xyz: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Grad,
    Order,
    Lyapunov,
    Limit,
    Invariant,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CheckArgs {
    #[arg(value_enum, default_value = "all")]
    pub suites: Vec<Suite>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn prepare_out(out: &Option<PathBuf>) -> Result<Option<&Path>> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
    }
    Ok(out.as_deref())
}

fn create_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_axis(v: &[f64], name: &str, log: bool) -> Result<Vec<f64>> {
    match v {
        [lo, hi, n] if *n >= 0.0 && n.fract() == 0.0 => {
            if log && !(*lo > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "--{name}: log axis needs lo > 0"
                )));
            }
            Ok(axis_grid(*lo, *hi, *n as usize, log))
        }
        _ => Err(Error::InvalidParameter(format!(
            "--{name} expects lo,hi,n with integer n"
        ))),
    }
}

fn range2(v: &[f64], name: &str) -> Result<(f64, f64)> {
    match v {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(Error::InvalidParameter(format!(
            "--{name} expects lo,hi with lo < hi"
        ))),
    }
}

fn objective_for(name: PotentialName) -> Result<Box<dyn Objective>> {
    Ok(match name {
        PotentialName::Harmonic => Box::new(Harmonic::diagonal(&[1.0, 10.0])?),
        PotentialName::Rosenbrock => Box::new(Rosenbrock::default()),
        other => Box::new(other.cluster().expect("cluster potential").objective()?),
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<i32> {
    let obj = objective_for(args.potential)?;
    let opt = args.opt.spec()?;
    let mut cfg = opt.scheme_config()?;
    if let Some(kind) = args.scheme {
        cfg = cfg.with_scheme(kind);
    }
    cfg = cfg.with_mts_substeps(args.mts_substeps);
    cfg.validate()?;

    let x0 = match (&args.x0, &args.x0_file, args.potential.cluster()) {
        (Some(x0), _, _) => x0.clone(),
        (None, Some(path), _) => read_xyz(path)?.coords,
        (None, None, Some(system)) => {
            let mut spec = ClusterExperimentSpec::new(system, opt, 0, 1);
            spec.fixture_dir = args.fixture_dir.clone().unwrap_or_else(default_fixture_dir);
            spec.initial_structure()?
        }
        (None, None, None) => {
            return Err(Error::InvalidParameter("--x0 is required".into()));
        }
    };
    if x0.len() != obj.dim() {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    let stop = if obj.minimizer().is_some() {
        StoppingRule::DistanceToMinimizer { tol: args.tol }
    } else {
        StoppingRule::GradientNorm { tol: args.tol }
    };
    let s0 = ExtendedState::at_rest(x0);
    let trace = integrate(&s0, obj.as_ref(), &cfg, &stop, args.max_steps, args.stride)?;
    let last = trace.records.last().expect("trace has a final record");
    println!(
        "{} {} on {}: {} after {} steps, f = {:e}, |grad f| = {:e}",
        opt.method,
        cfg.scheme,
        obj.name(),
        trace.status.as_str(),
        trace.iterations,
        last.f,
        last.grad_norm
    );
    if let Some(dir) = prepare_out(&args.out)? {
        trace.save_csv(&dir.join("trace.csv"))?;
        let mut meta = Metadata::new("run", config::echo_args(args)?, serde_json::to_value(&cfg)?);
        meta.notes.push(format!("scheme {}", cfg.scheme));
        meta.notes.push(format!(
            "H_tilde and G columns use the {} centering",
            if trace.lyapunov_centered {
                "f - f*"
            } else {
                "uncentered f"
            }
        ));
        meta.summary = Some(serde_json::json!({
            "status": trace.status.as_str(),
            "iterations": trace.iterations,
            "gradient_evaluations": trace.gradient_evaluations,
            "final_f": last.f,
            "final_grad_norm": last.grad_norm,
        }));
        write_json(&dir.join("metadata.json"), &meta)?;
    }
    Ok(match trace.status {
        RunStatus::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_OK,
    })
}

pub fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec> {
    for a in &args.log_axis {
        if !(1..=2).contains(a) {
            return Err(Error::InvalidParameter(format!(
                "--log-axis takes 1 or 2, got {a}"
            )));
        }
    }
    let log_axes = [args.log_axis.contains(&1), args.log_axis.contains(&2)];
    let ics = match &args.x0 {
        Some(x0) => IcSet::Single { x0: x0.clone() },
        None => IcSet::Grid {
            x_range: range2(&args.x_range, "x-range")?,
            y_range: range2(&args.y_range, "y-range")?,
            n: args.ic_grid,
        },
    };
    let spec = SweepSpec {
        plane: args.plane,
        axis1: parse_axis(&args.axis1, "axis1", log_axes[0])?,
        axis2: parse_axis(&args.axis2, "axis2", log_axes[1])?,
        base: args.opt.spec_for_plane(args.plane)?,
        ics,
        tol: args.tol,
        max_iter: args.max_iter,
        log_axes,
        base_seed: args.seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let spec = sweep_spec(args)?;
    let res = match args.potential {
        SweepPotential::Rosenbrock => sweep(&spec, &Rosenbrock::default())?,
        SweepPotential::Harmonic => sweep(&spec, &Harmonic::diagonal(&[1.0, 10.0])?)?,
    };
    let diverged: usize = res.cells.iter().map(|c| c.n_diverged).sum();
    println!(
        "{} sweep over {}x{} cells: {:.3} of cells average below {} iterations ({} diverged runs)",
        spec.base.method,
        res.n1,
        res.n2,
        res.fraction_below_cap(),
        res.max_iter,
        diverged
    );
    if let Some(dir) = prepare_out(&args.out)? {
        write_sweep_csv(create_file(&dir.join("sweep.csv"))?, &res)?;
        let mut meta = Metadata::new(
            "sweep",
            config::echo_args(args)?,
            serde_json::to_value(&spec)?,
        );
        meta.notes
            .push(format!("scheme {}", spec.base.method.scheme()));
        meta.notes
            .push("runs hitting the cap count as max-iter in the mean".into());
        meta.summary = Some(serde_json::json!({
            "fraction_below_cap": res.fraction_below_cap(),
            "diverged_runs": diverged,
        }));
        write_json(&dir.join("metadata.json"), &meta)?;
    }
    Ok(EXIT_OK)
}

pub fn cluster_spec(args: &ClusterArgs) -> Result<ClusterExperimentSpec> {
    let mut spec = ClusterExperimentSpec::new(args.system, args.opt.spec()?, args.steps, args.runs);
    spec.base_seed = args.seed;
    spec.momenta = args.momenta;
    spec.success_threshold = args.threshold;
    spec.energy_stride = args.energy_stride;
    if let Some(dir) = &args.fixture_dir {
        spec.fixture_dir = dir.clone();
    }
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<i32> {
    let spec = cluster_spec(args)?;
    if args.dump_xyz && args.out.is_none() {
        return Err(Error::InvalidParameter("--dump-xyz needs --out".into()));
    }
    let batch = cluster_batch(&spec)?;
    println!(
        "{} on {}: median final energy {:.6}, success fraction {:.3} over {} runs",
        spec.optimizer.method,
        spec.system.name(),
        batch.median_final_energy(),
        batch.success_fraction,
        batch.runs.len()
    );
    if let Some(dir) = prepare_out(&args.out)? {
        write_cluster_csv(create_file(&dir.join("cluster.csv"))?, &batch)?;
        if args.dump_xyz {
            let sdir = dir.join("structures");
            std::fs::create_dir_all(&sdir).map_err(|source| Error::Io {
                path: sdir.clone(),
                source,
            })?;
            for r in &batch.runs {
                let comment = format!("run {} seed {} energy {:?}", r.run, r.seed, r.final_energy);
                write_xyz(
                    &sdir.join(format!("run_{:04}.xyz", r.run)),
                    &r.final_coords,
                    &comment,
                )?;
            }
        }
        let mut meta = Metadata::new(
            "cluster",
            config::echo_args(args)?,
            serde_json::to_value(&spec)?,
        );
        meta.notes
            .push(format!("scheme {}", spec.optimizer.method.scheme()));
        meta.notes
            .push("initialization by BAOAB Langevin; seed = base seed + run index".into());
        meta.summary = Some(serde_json::json!({
            "median_final_energy": batch.median_final_energy(),
            "success_fraction": batch.success_fraction,
        }));
        write_json(&dir.join("metadata.json"), &meta)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let suites: Vec<Suite> = if args.suites.contains(&Suite::All) {
        vec![
            Suite::Grad,
            Suite::Order,
            Suite::Lyapunov,
            Suite::Limit,
            Suite::Invariant,
        ]
    } else {
        args.suites.clone()
    };
    let mut rows = Vec::new();
    for s in suites {
        rows.extend(check::run_suite(s)?);
    }
    print!("{}", check::format_table(&rows));
    let all_pass = rows.iter().all(|r| r.pass);
    if let Some(dir) = prepare_out(&args.out)? {
        write_json(&dir.join("check.json"), &rows)?;
        let meta = Metadata::new("check", config::echo_args(args)?, serde_json::Value::Null);
        write_json(&dir.join("metadata.json"), &meta)?;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_USAGE })
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn usage_for(argv: &[String]) -> String {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    cmd.build();
    let sub = argv
        .iter()
        .find(|a| config::SUBCOMMANDS.contains(&a.as_str()));
    match sub.and_then(|s| cmd.find_subcommand_mut(s)) {
        Some(sc) => sc.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let verbose = argv
        .iter()
        .filter(|a| *a == "-v" || *a == "--verbose")
        .count() as u8;
    init_logging(verbose);
    let merged = match config::merge_argv(argv) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&merged) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(&merged));
            }
            return EXIT_USAGE;
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be >= 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
