//! Experiment harness: single runs, parameter sweeps over initialization
//! grids, and seeded cluster-minimization batches.

mod cluster;
mod output;
mod sweep;

pub use cluster::{
    cluster_batch, default_fixture_dir, init_cluster, ClusterBatch, ClusterExperimentSpec,
    ClusterRun, ClusterSystem, InitProtocol, MomentumPolicy,
};
pub use output::{write_cluster_csv, write_json, write_sweep_csv, Metadata};
pub use sweep::{
    axis_grid, cell_seed, ratio_map, sweep, IcSet, Plane, RatioCell, RatioMap, SweepCell,
    SweepResult, SweepSpec,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, DynamicsParams, ExtendedState};
use crate::error::{Error, Result};
use crate::integrators::{run, RunStatus, SchemeConfig, SchemeKind, StoppingRule};
use crate::linalg::norm;
use crate::potentials::Objective;

/// Optimizer family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Ldhd,
    Kfad,
    Ffad,
    /// Mixture coupling `lambda1 I + lambda2 Pi^F` (normalized projector).
    Mcfad {
        lambda1: f64,
        lambda2: f64,
    },
    Adam,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ldhd => "ldhd",
            Method::Kfad => "kfad",
            Method::Ffad => "ffad",
            Method::Mcfad { .. } => "mcfad",
            Method::Adam => "adam",
        }
    }

    pub fn scheme(&self) -> SchemeKind {
        match self {
            Method::Ldhd => SchemeKind::LdhdBadab,
            Method::Kfad | Method::Ffad | Method::Mcfad { .. } => SchemeKind::FadDabcbad,
            Method::Adam => SchemeKind::AdamOde,
        }
    }

    pub fn coupling(&self) -> Result<Coupling> {
        match *self {
            Method::Ffad => Ok(Coupling::ForceOuter),
            Method::Mcfad { lambda1, lambda2 } => Coupling::mixture(lambda1, lambda2, true),
            _ => Ok(Coupling::Identity),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mcfad { lambda1, lambda2 } => write!(f, "mcfad[{lambda1},{lambda2}]"),
            m => f.write_str(m.name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Parses `ldhd|kfad|ffad|adam`; `mcfad` defaults to `[0.1, 0.9]`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ldhd" => Ok(Method::Ldhd),
            "kfad" => Ok(Method::Kfad),
            "ffad" => Ok(Method::Ffad),
            "mcfad" => Ok(Method::Mcfad {
                lambda1: 0.1,
                lambda2: 0.9,
            }),
            "adam" => Ok(Method::Adam),
            _ => Err(Error::InvalidParameter(format!(
                "unknown method {s:?} (expected ldhd, kfad, ffad, mcfad or adam)"
            ))),
        }
    }
}

/// Optimizer choice plus step size and dynamics parameters.
///
/// For Adam, `alpha` is the moment decay rate and `mu` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub method: Method,
    pub dt: f64,
    pub params: DynamicsParams,
}

impl OptimizerSpec {
    pub fn new(method: Method, dt: f64, gamma: f64, alpha: f64, mu: f64) -> Self {
        Self {
            method,
            dt,
            params: DynamicsParams { gamma, alpha, mu },
        }
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let cfg = SchemeConfig::new(
            self.method.scheme(),
            self.dt,
            self.params,
            self.method.coupling()?,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl From<RunStatus> for RecordStatus {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Converged => RecordStatus::Converged,
            RunStatus::MaxSteps => RecordStatus::MaxIter,
            RunStatus::Diverged { .. } => RecordStatus::Diverged,
        }
    }
}

/// Summary of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub ic: Vec<f64>,
    pub optimizer: OptimizerSpec,
    pub iterations: usize,
    pub status: RecordStatus,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub steps_per_second: f64,
}

/// Runs from `(ic, 0, 0)` until `|x - x*| <= tol` or `max_iter` steps.
///
/// Objectives without a known minimizer run the full budget.
pub fn run_to_convergence<O: Objective + ?Sized>(
    opt: &OptimizerSpec,
    obj: &O,
    ic: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<RunRecord> {
    let cfg = opt.scheme_config()?;
    let stop = if obj.minimizer().is_some() {
        StoppingRule::DistanceToMinimizer { tol }
    } else {
        StoppingRule::Never
    };
    let s0 = ExtendedState::at_rest(ic.to_vec());
    let start = Instant::now();
    let out = run(&s0, obj, &cfg, &stop, max_iter)?;
    let elapsed = start.elapsed().as_secs_f64();
    let (final_f, final_grad_norm) = if out.final_state.is_finite() {
        let mut g = vec![0.0; obj.dim()];
        let f = obj.value_gradient(&out.final_state.x, &mut g)?;
        (f, norm(&g))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(RunRecord {
        seed: cfg.seed,
        ic: ic.to_vec(),
        optimizer: *opt,
        iterations: out.iterations,
        status: out.status.into(),
        final_f,
        final_grad_norm,
        steps_per_second: if elapsed > 0.0 {
            out.iterations as f64 / elapsed
        } else {
            0.0
        },
    })
}
