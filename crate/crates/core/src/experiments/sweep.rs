use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_to_convergence, OptimizerSpec, RecordStatus};
use crate::error::{Error, Result};
use crate::potentials::Objective;

/// Which pair of parameters the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    /// axis 1 = gamma, axis 2 = dt
    GammaDt,
    /// axis 1 = mu, axis 2 = alpha
    MuAlpha,
}

impl std::str::FromStr for Plane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma-dt" => Ok(Plane::GammaDt),
            "mu-alpha" => Ok(Plane::MuAlpha),
            _ => Err(Error::InvalidParameter(format!(
                "unknown plane {s:?} (expected gamma-dt or mu-alpha)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IcSet {
    Single {
        x0: Vec<f64>,
    },
    /// `n x n` points on `[x_lo, x_hi] x [y_lo, y_hi]`, endpoints included.
    Grid {
        x_range: (f64, f64),
        y_range: (f64, f64),
        n: usize,
    },
}

impl IcSet {
    /// The 2-d initialization grid used for the Rosenbrock studies.
    pub fn rosenbrock_grid(n: usize) -> Self {
        IcSet::Grid {
            x_range: (-2.0, 2.0),
            y_range: (-1.0, 3.0),
            n,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            IcSet::Single { x0 } => vec![x0.clone()],
            IcSet::Grid {
                x_range,
                y_range,
                n,
            } => {
                let xs = axis_grid(x_range.0, x_range.1, *n, false);
                let ys = axis_grid(y_range.0, y_range.1, *n, false);
                xs.iter()
                    .flat_map(|x| ys.iter().map(move |y| vec![*x, *y]))
                    .collect()
            }
        }
    }
}

/// `n` points from `lo` to `hi` inclusive, linearly or log-spaced.
pub fn axis_grid(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    hi
                } else if log {
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + u * (hi - lo)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub plane: Plane,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Method and the parameters not varied by the plane.
    pub base: OptimizerSpec,
    pub ics: IcSet,
    pub tol: f64,
    pub max_iter: usize,
    pub log_axes: [bool; 2],
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("axis 1", &self.axis1), ("axis 2", &self.axis2)] {
            if axis.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} grid is empty")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidParameter(format!(
                    "{name} grid must be strictly increasing"
                )));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if let IcSet::Grid { n: 0, .. } = self.ics {
            return Err(Error::InvalidParameter("IC grid is empty".into()));
        }
        Ok(())
    }

    fn cell_optimizer(&self, a1: f64, a2: f64) -> OptimizerSpec {
        let mut o = self.base;
        match self.plane {
            Plane::GammaDt => {
                o.params.gamma = a1;
                o.dt = a2;
            }
            Plane::MuAlpha => {
                o.params.mu = a1;
                o.params.alpha = a2;
            }
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub i: usize,
    pub j: usize,
    pub axis1: f64,
    pub axis2: f64,
    /// Mean over ICs, non-converged runs counted as `max_iter`.
    pub mean_iters: f64,
    pub converged_frac: f64,
    pub n_ics: usize,
    pub n_diverged: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub n1: usize,
    pub n2: usize,
    pub max_iter: usize,
    /// Row-major over (axis 1, axis 2).
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.n2 + j]
    }

    /// Fraction of cells whose mean iteration count is below the cap.
    pub fn fraction_below_cap(&self) -> f64 {
        let below = self
            .cells
            .iter()
            .filter(|c| c.mean_iters < self.max_iter as f64)
            .count();
        below as f64 / self.cells.len() as f64
    }
}

/// Seed for cell `(i, j)`, independent of evaluation order.
pub fn cell_seed(base: u64, i: usize, j: usize) -> u64 {
    // splitmix64 finalizer over a combination of the inputs
    let mut z = base
        .wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_cell<O: Objective + ?Sized>(
    spec: &SweepSpec,
    obj: &O,
    ics: &[Vec<f64>],
    i: usize,
    j: usize,
) -> Result<SweepCell> {
    let (a1, a2) = (spec.axis1[i], spec.axis2[j]);
    let opt = spec.cell_optimizer(a1, a2);
    let (mut total, mut converged, mut diverged) = (0.0, 0usize, 0usize);
    for ic in ics {
        let rec = run_to_convergence(&opt, obj, ic, spec.tol, spec.max_iter)?;
        match rec.status {
            RecordStatus::Converged => {
                converged += 1;
                total += rec.iterations as f64;
            }
            RecordStatus::MaxIter => total += spec.max_iter as f64,
            RecordStatus::Diverged => {
                diverged += 1;
                total += spec.max_iter as f64;
            }
        }
    }
    let n = ics.len();
    Ok(SweepCell {
        i,
        j,
        axis1: a1,
        axis2: a2,
        mean_iters: total / n as f64,
        converged_frac: converged as f64 / n as f64,
        n_ics: n,
        n_diverged: diverged,
        seed: cell_seed(spec.base_seed, i, j),
    })
}

/// Evaluates every cell of the sweep in parallel on the current rayon pool.
pub fn sweep<O: Objective + ?Sized>(spec: &SweepSpec, obj: &O) -> Result<SweepResult> {
    spec.validate()?;
    let ics = spec.ics.points();
    if let Some(bad) = ics.iter().find(|ic| ic.len() != obj.dim()) {
        return Err(Error::Dimension {
            expected: obj.dim(),
            got: bad.len(),
        });
    }
    let (n1, n2) = (spec.axis1.len(), spec.axis2.len());
    let cells = (0..n1 * n2)
        .into_par_iter()
        .map(|k| run_cell(spec, obj, &ics, k / n2, k % n2))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        n1,
        n2,
        max_iter: spec.max_iter,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub axis1: f64,
    pub axis2: f64,
    /// `None` where the denominator is 0.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMap {
    pub n1: usize,
    pub n2: usize,
    pub cells: Vec<RatioCell>,
}

/// Elementwise `a / b` of mean iteration counts.
pub fn ratio_map(a: &SweepResult, b: &SweepResult) -> Result<RatioMap> {
    if a.n1 != b.n1 || a.n2 != b.n2 {
        return Err(Error::InvalidParameter(format!(
            "grids are not congruent: {}x{} vs {}x{}",
            a.n1, a.n2, b.n1, b.n2
        )));
    }
    let cells = a
        .cells
        .iter()
        .zip(&b.cells)
        .map(|(ca, cb)| {
            if ca.axis1 != cb.axis1 || ca.axis2 != cb.axis2 {
                return Err(Error::InvalidParameter(format!(
                    "axis values differ at cell ({}, {})",
                    ca.i, ca.j
                )));
            }
            Ok(RatioCell {
                axis1: ca.axis1,
                axis2: ca.axis2,
                ratio: (cb.mean_iters != 0.0).then(|| ca.mean_iters / cb.mean_iters),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioMap {
        n1: a.n1,
        n2: a.n2,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Method;
    use crate::potentials::Rosenbrock;

    fn small_spec(method: Method) -> SweepSpec {
        SweepSpec {
            plane: Plane::GammaDt,
            axis1: vec![0.5, 1.0],
            axis2: vec![0.01, 0.05],
            base: OptimizerSpec::new(method, 0.01, 1.0, 1.0, 1.0),
            ics: IcSet::rosenbrock_grid(3),
            tol: 1e-4,
            max_iter: 1500,
            log_axes: [false, false],
            base_seed: 3,
        }
    }

    #[test]
    fn grid_endpoints_included() {
        let g = axis_grid(-2.0, 2.0, 40, false);
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[39], 2.0);
        let l = axis_grid(1e-3, 1.0, 4, true);
        assert!((l[1] - 1e-2).abs() < 1e-15);
        assert_eq!(IcSet::rosenbrock_grid(40).points().len(), 1600);
    }

    #[test]
    fn degenerate_sweep_equals_single_run() {
        let r = Rosenbrock::default();
        let spec = SweepSpec {
            axis1: vec![1.0],
            axis2: vec![0.01],
            ics: IcSet::Single { x0: vec![1.0, 2.0] },
            ..small_spec(Method::Kfad)
        };
        let res = sweep(&spec, &r).unwrap();
        let rec = run_to_convergence(&spec.base, &r, &[1.0, 2.0], 1e-4, 1500).unwrap();
        assert_eq!(res.cells[0].mean_iters, rec.iterations as f64);
    }

    #[test]
    fn ratio_of_identical_grids_is_one() {
        let r = Rosenbrock::default();
        let res = sweep(&small_spec(Method::Ldhd), &r).unwrap();
        let map = ratio_map(&res, &res).unwrap();
        assert!(map.cells.iter().all(|c| c.ratio == Some(1.0)));
        let mut doubled = res.clone();
        doubled.cells.iter_mut().for_each(|c| c.mean_iters *= 2.0);
        let map = ratio_map(&doubled, &res).unwrap();
        assert!(map.cells.iter().all(|c| c.ratio == Some(2.0)));
    }

    #[test]
    fn invalid_specs() {
        let r = Rosenbrock::default();
        let mut s = small_spec(Method::Kfad);
        s.axis1.clear();
        assert!(sweep(&s, &r).is_err());
        let mut s = small_spec(Method::Kfad);
        s.axis2 = vec![0.05, 0.01];
        assert!(sweep(&s, &r).is_err());
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(1, 0, 1), cell_seed(1, 1, 0));
        assert_eq!(cell_seed(9, 4, 2), cell_seed(9, 4, 2));
    }
}
