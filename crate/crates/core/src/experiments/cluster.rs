use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizerSpec, RecordStatus};
use crate::dynamics::ExtendedState;
use crate::error::{Error, Result};
use crate::integrators::{Integrator, SchemeConfig, SchemeKind};
use crate::potentials::xyz::read_xyz;
use crate::potentials::{
    simple_cubic_lattice, Cluster, ClusterSpec, Objective, LJ38_MIN_ENERGY, LJ75_MIN_ENERGY,
    MORSE64_MIN_ENERGY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterSystem {
    Lj38,
    Lj75,
    Morse64,
}

impl std::str::FromStr for ClusterSystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lj38" => Ok(ClusterSystem::Lj38),
            "lj75" => Ok(ClusterSystem::Lj75),
            "morse64" => Ok(ClusterSystem::Morse64),
            _ => Err(Error::InvalidParameter(format!(
                "unknown cluster system {s:?} (expected lj38, lj75 or morse64)"
            ))),
        }
    }
}

impl ClusterSystem {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterSystem::Lj38 => "lj38",
            ClusterSystem::Lj75 => "lj75",
            ClusterSystem::Morse64 => "morse64",
        }
    }

    pub fn reference_energy(&self) -> f64 {
        match self {
            ClusterSystem::Lj38 => LJ38_MIN_ENERGY,
            ClusterSystem::Lj75 => LJ75_MIN_ENERGY,
            ClusterSystem::Morse64 => MORSE64_MIN_ENERGY,
        }
    }

    /// Morse-64 uses `a = 3`, `r0 = 1` and the well-depth energy scale.
    pub fn objective(&self) -> Result<Cluster> {
        let spec = match self {
            ClusterSystem::Lj38 => ClusterSpec::lennard_jones(38),
            ClusterSystem::Lj75 => ClusterSpec::lennard_jones(75),
            ClusterSystem::Morse64 => ClusterSpec::morse(64, 3.0, 1.0).with_pair_offset(-1.0),
        };
        Cluster::new(spec.with_reference(self.reference_energy()))
    }

    /// Reference-structure file name for the Lennard-Jones systems.
    pub fn fixture_name(&self) -> Option<&'static str> {
        match self {
            ClusterSystem::Lj38 => Some("lj38.xyz"),
            ClusterSystem::Lj75 => Some("lj75.xyz"),
            ClusterSystem::Morse64 => None,
        }
    }

    /// Langevin friction 1 for LJ38 and Morse-64, 20 for LJ75; `beta^-1` 2, 2, 10.
    pub fn default_init(&self) -> InitProtocol {
        match self {
            ClusterSystem::Lj38 => InitProtocol::LangevinFromMin {
                steps: 400,
                dt: 0.001,
                beta_inv: 2.0,
                gamma: 1.0,
            },
            ClusterSystem::Lj75 => InitProtocol::LangevinFromMin {
                steps: 400,
                dt: 0.001,
                beta_inv: 2.0,
                gamma: 20.0,
            },
            ClusterSystem::Morse64 => InitProtocol::LatticeThenLangevin {
                lattice_n: 4,
                steps: 1000,
                dt: 0.001,
                beta_inv: 10.0,
                gamma: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum InitProtocol {
    LangevinFromMin {
        steps: usize,
        dt: f64,
        beta_inv: f64,
        gamma: f64,
    },
    LatticeThenLangevin {
        lattice_n: usize,
        steps: usize,
        dt: f64,
        beta_inv: f64,
        gamma: f64,
    },
}

impl InitProtocol {
    fn langevin(&self) -> (usize, f64, f64, f64) {
        match *self {
            InitProtocol::LangevinFromMin {
                steps,
                dt,
                beta_inv,
                gamma,
            }
            | InitProtocol::LatticeThenLangevin {
                steps,
                dt,
                beta_inv,
                gamma,
                ..
            } => (steps, dt, beta_inv, gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumPolicy {
    Thermalized,
    Zeroed,
}

impl std::str::FromStr for MomentumPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thermalized" => Ok(MomentumPolicy::Thermalized),
            "zeroed" => Ok(MomentumPolicy::Zeroed),
            _ => Err(Error::InvalidParameter(format!(
                "unknown momentum policy {s:?} (expected thermalized or zeroed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterExperimentSpec {
    pub system: ClusterSystem,
    pub init: InitProtocol,
    pub momenta: MomentumPolicy,
    pub optimizer: OptimizerSpec,
    pub opt_steps: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Relative energy tolerance against the reference minimum.
    pub success_threshold: f64,
    /// Energy is sampled every this many steps to track the running minimum.
    pub energy_stride: usize,
    pub fixture_dir: PathBuf,
}

impl ClusterExperimentSpec {
    pub fn new(
        system: ClusterSystem,
        optimizer: OptimizerSpec,
        opt_steps: usize,
        n_runs: usize,
    ) -> Self {
        Self {
            system,
            init: system.default_init(),
            momenta: MomentumPolicy::Zeroed,
            optimizer,
            opt_steps,
            n_runs,
            base_seed: 0,
            success_threshold: 0.01,
            energy_stride: 10,
            fixture_dir: default_fixture_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs < 1 {
            return Err(Error::InvalidParameter("n-runs must be >= 1".into()));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 0.1) {
            return Err(Error::InvalidParameter(format!(
                "success threshold must lie in (0, 0.1], got {}",
                self.success_threshold
            )));
        }
        if self.energy_stride < 1 {
            return Err(Error::InvalidParameter("energy stride must be >= 1".into()));
        }
        self.optimizer.scheme_config()?;
        Ok(())
    }

    /// Starting structure before equilibration.
    pub fn initial_structure(&self) -> Result<Vec<f64>> {
        match self.init {
            InitProtocol::LatticeThenLangevin { lattice_n, .. } => {
                let q = simple_cubic_lattice(lattice_n, 1.0);
                let expected = self.system.objective()?.dim();
                if q.len() != expected {
                    return Err(Error::Dimension {
                        expected,
                        got: q.len(),
                    });
                }
                Ok(q)
            }
            InitProtocol::LangevinFromMin { .. } => {
                let name = self.system.fixture_name().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "{} has no reference structure; use a lattice start",
                        self.system.name()
                    ))
                })?;
                let frame = read_xyz(&self.fixture_dir.join(name))?;
                let expected = self.system.objective()?.dim();
                if frame.coords.len() != expected {
                    return Err(Error::Dimension {
                        expected,
                        got: frame.coords.len(),
                    });
                }
                Ok(frame.coords)
            }
        }
    }
}

/// `<crate>/fixtures`, where the reference structures ship.
pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn equilibrate(
    spec: &ClusterExperimentSpec,
    obj: &Cluster,
    q0: &[f64],
    run: usize,
) -> Result<(ExtendedState, u64)> {
    let seed = spec.base_seed.wrapping_add(run as u64);
    let (steps, dt, beta_inv, gamma) = spec.init.langevin();
    let mut cfg = SchemeConfig::ldhd(dt, gamma).with_scheme(SchemeKind::Baoab);
    cfg.beta_inv = beta_inv;
    cfg.seed = seed;
    let mut integ = Integrator::new(obj, cfg)?;
    let mut s = ExtendedState::at_rest(q0.to_vec());
    for _ in 0..steps {
        integ.step(&mut s)?;
    }
    if spec.momenta == MomentumPolicy::Zeroed {
        s.p.iter_mut().for_each(|p| *p = 0.0);
    }
    s.xi = 0.0;
    Ok((s, seed))
}

/// Equilibrated starting state for run `run` (seed `base_seed + run`).
pub fn init_cluster(spec: &ClusterExperimentSpec, run: usize) -> Result<ExtendedState> {
    let obj = spec.system.objective()?;
    let q0 = spec.initial_structure()?;
    Ok(equilibrate(spec, &obj, &q0, run)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub run: usize,
    pub seed: u64,
    pub init_energy: f64,
    pub final_energy: f64,
    /// Lowest sampled energy along the run (initial and final included).
    pub min_energy: f64,
    pub success: bool,
    pub status: RecordStatus,
    #[serde(skip)]
    pub final_coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBatch {
    pub runs: Vec<ClusterRun>,
    /// Final energies in increasing order.
    pub sorted_final_energies: Vec<f64>,
    pub success_fraction: f64,
}

impl ClusterBatch {
    pub fn median_final_energy(&self) -> f64 {
        let e = &self.sorted_final_energies;
        let n = e.len();
        if n % 2 == 1 {
            e[n / 2]
        } else {
            0.5 * (e[n / 2 - 1] + e[n / 2])
        }
    }
}

fn optimize_one(
    spec: &ClusterExperimentSpec,
    obj: &Cluster,
    cfg: &SchemeConfig,
    q0: &[f64],
    run: usize,
) -> Result<ClusterRun> {
    let (mut s, seed) = equilibrate(spec, obj, q0, run)?;
    let init_energy = obj.value(&s.x)?;
    let mut integ = Integrator::new(obj, cfg.clone())?;
    let mut min_energy = init_energy;
    let mut status = RecordStatus::MaxIter;
    for n in 1..=spec.opt_steps {
        integ.step(&mut s)?;
        if !s.is_finite() {
            status = RecordStatus::Diverged;
            break;
        }
        if n % spec.energy_stride == 0 {
            min_energy = min_energy.min(obj.value(&s.x)?);
        }
    }
    let final_energy = if status == RecordStatus::Diverged {
        f64::NAN
    } else {
        let e = obj.value(&s.x)?;
        min_energy = min_energy.min(e);
        e
    };
    let reference = spec.system.reference_energy();
    let success = ((final_energy - reference) / reference).abs() <= spec.success_threshold;
    Ok(ClusterRun {
        run,
        seed,
        init_energy,
        final_energy,
        min_energy,
        success,
        status,
        final_coords: s.x,
    })
}

/// `n_runs` seeded equilibrate-then-optimize runs, in parallel on the
/// current rayon pool. Results are ordered by run index.
pub fn cluster_batch(spec: &ClusterExperimentSpec) -> Result<ClusterBatch> {
    spec.validate()?;
    let obj = spec.system.objective()?;
    let q0 = spec.initial_structure()?;
    let cfg = spec.optimizer.scheme_config()?;
    let runs = (0..spec.n_runs)
        .into_par_iter()
        .map(|run| optimize_one(spec, &obj, &cfg, &q0, run))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<f64> = runs.iter().map(|r| r.final_energy).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let success_fraction = runs.iter().filter(|r| r.success).count() as f64 / runs.len() as f64;
    Ok(ClusterBatch {
        runs,
        sorted_final_energies: sorted,
        success_fraction,
    })
}
