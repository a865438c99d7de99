//! Pairwise atomic cluster energies (Lennard-Jones and Morse).

use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};

/// Tabulated global minimum of the 38-atom Lennard-Jones cluster.
pub const LJ38_MIN_ENERGY: f64 = -173.928427;
/// Tabulated global minimum of the 75-atom Lennard-Jones cluster.
pub const LJ75_MIN_ENERGY: f64 = -397.492331;
/// Global minimum of the 64-atom Morse cluster (a = 3, r0 = 1), well-depth convention.
pub const MORSE64_MIN_ENERGY: f64 = -512.83;

const COINCIDENCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PairKind {
    LennardJones,
    Morse { a: f64, r0: f64 },
}

impl PairKind {
    /// Pair energy and `phi'(r) / r`.
    #[inline(always)]
    fn eval(&self, r2: f64) -> (f64, f64) {
        match *self {
            PairKind::LennardJones => {
                let s2 = 1.0 / r2;
                let s6 = s2 * s2 * s2;
                (4.0 * s6 * (s6 - 1.0), (24.0 * s6 - 48.0 * s6 * s6) * s2)
            }
            PairKind::Morse { a, r0 } => {
                let r = r2.sqrt();
                let e = (-a * (r - r0)).exp();
                let one_minus = 1.0 - e;
                (one_minus * one_minus, 2.0 * a * e * one_minus / r)
            }
        }
    }
}

/// Description of a cluster objective.
///
/// `pair_offset` is added once per pair; `-1` turns the Morse form
/// `(1 - e^{-a(r - r0)})^2` into the well-depth convention with minimum `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub n_atoms: usize,
    pub pair: PairKind,
    #[serde(default)]
    pub pair_offset: f64,
    pub reference_min_energy: Option<f64>,
}

impl ClusterSpec {
    pub fn lennard_jones(n_atoms: usize) -> Self {
        Self {
            n_atoms,
            pair: PairKind::LennardJones,
            pair_offset: 0.0,
            reference_min_energy: None,
        }
    }

    pub fn morse(n_atoms: usize, a: f64, r0: f64) -> Self {
        Self {
            n_atoms,
            pair: PairKind::Morse { a, r0 },
            pair_offset: 0.0,
            reference_min_energy: None,
        }
    }

    pub fn with_reference(mut self, energy: f64) -> Self {
        self.reference_min_energy = Some(energy);
        self
    }

    pub fn with_pair_offset(mut self, offset: f64) -> Self {
        self.pair_offset = offset;
        self
    }

    pub fn dim(&self) -> usize {
        3 * self.n_atoms
    }

    pub fn n_pairs(&self) -> usize {
        self.n_atoms * self.n_atoms.saturating_sub(1) / 2
    }
}

/// Cluster objective over flattened coordinates `[x0, y0, z0, x1, ...]`.
#[derive(Debug, Clone)]
pub struct Cluster {
    spec: ClusterSpec,
    name: String,
}

impl Cluster {
    pub fn new(spec: ClusterSpec) -> Result<Self> {
        if spec.n_atoms < 2 {
            return Err(Error::InvalidParameter(format!(
                "a cluster needs at least 2 atoms, got {}",
                spec.n_atoms
            )));
        }
        if let PairKind::Morse { a, r0 } = spec.pair {
            if !(a > 0.0 && r0 > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "morse parameters must be positive (a={a}, r0={r0})"
                )));
            }
        }
        let name = match spec.pair {
            PairKind::LennardJones => format!("lj{}", spec.n_atoms),
            PairKind::Morse { .. } => format!("morse{}", spec.n_atoms),
        };
        Ok(Self { spec, name })
    }

    pub fn spec(&self) -> &ClusterSpec {
        &self.spec
    }
}

impl Objective for Cluster {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let e = pair_sum(x, grad, self.spec.pair)?;
        Ok(e + self.spec.pair_offset * self.spec.n_pairs() as f64)
    }

    fn min_value(&self) -> Option<f64> {
        self.spec.reference_min_energy
    }

    fn name(&self) -> &str {
        &self.name
    }
}

fn pair_sum(q: &[f64], grad: &mut [f64], pair: PairKind) -> Result<f64> {
    if q.len() % 3 != 0 || q.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "cluster coordinates must hold at least two 3-vectors, got length {}",
            q.len()
        )));
    }
    crate::error::check_dim(q.len(), grad.len())?;
    let n = q.len() / 3;
    grad.fill(0.0);
    let mut energy = 0.0;
    for i in 0..n - 1 {
        let (xi, yi, zi) = (q[3 * i], q[3 * i + 1], q[3 * i + 2]);
        let (mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0);
        for j in i + 1..n {
            let dx = xi - q[3 * j];
            let dy = yi - q[3 * j + 1];
            let dz = zi - q[3 * j + 2];
            let r2 = dx * dx + dy * dy + dz * dz;
            if r2 < COINCIDENCE * COINCIDENCE {
                return Err(Error::Singularity {
                    i,
                    j,
                    distance: r2.sqrt(),
                });
            }
            let (phi, dphi_over_r) = pair.eval(r2);
            energy += phi;
            let (fx, fy, fz) = (dphi_over_r * dx, dphi_over_r * dy, dphi_over_r * dz);
            gx += fx;
            gy += fy;
            gz += fz;
            grad[3 * j] -= fx;
            grad[3 * j + 1] -= fy;
            grad[3 * j + 2] -= fz;
        }
        grad[3 * i] += gx;
        grad[3 * i + 1] += gy;
        grad[3 * i + 2] += gz;
    }
    Ok(energy)
}

/// Lennard-Jones cluster energy `sum_{i<j} 4 (r^-12 - r^-6)` and its gradient.
pub fn lj_cluster(q: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; q.len()];
    let e = pair_sum(q, &mut g, PairKind::LennardJones)?;
    Ok((e, g))
}

/// Morse cluster energy `sum_{i<j} (1 - e^{-a (r - r0)})^2` and its gradient.
pub fn morse_cluster(q: &[f64], a: f64, r0: f64) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; q.len()];
    let e = pair_sum(q, &mut g, PairKind::Morse { a, r0 })?;
    Ok((e, g))
}

/// Atoms on the vertices of `{0, .., n-1}^3` (times `spacing`), flattened.
pub fn simple_cubic_lattice(n_per_side: usize, spacing: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(3 * n_per_side.pow(3));
    for i in 0..n_per_side {
        for j in 0..n_per_side {
            for k in 0..n_per_side {
                q.extend_from_slice(&[i as f64 * spacing, j as f64 * spacing, k as f64 * spacing]);
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(q: &[f64], phi: impl Fn(f64) -> f64) -> f64 {
        let n = q.len() / 3;
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    let r = ((q[3 * i] - q[3 * j]).powi(2)
                        + (q[3 * i + 1] - q[3 * j + 1]).powi(2)
                        + (q[3 * i + 2] - q[3 * j + 2]).powi(2))
                    .sqrt();
                    e += phi(r);
                }
            }
        }
        e
    }

    #[test]
    fn lj_unit_distance_is_zero() {
        let (e, _) = lj_cluster(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn lj_pair_minimum() {
        let r = 2f64.powf(1.0 / 6.0);
        let (e, g) = lj_cluster(&[0.0, 0.0, 0.0, r, 0.0, 0.0]).unwrap();
        assert!((e + 1.0).abs() < 1e-14);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10);
    }

    #[test]
    fn lj_equilateral_triangle() {
        let r = 2f64.powf(1.0 / 6.0);
        let q = [
            0.0,
            0.0,
            0.0,
            r,
            0.0,
            0.0,
            0.5 * r,
            0.5 * 3f64.sqrt() * r,
            0.0,
        ];
        let (e, _) = lj_cluster(&q).unwrap();
        let oracle = brute_force(&q, |r| 4.0 * (r.powi(-12) - r.powi(-6)));
        assert!((e + 3.0).abs() < 1e-12);
        assert!((e - oracle).abs() < 1e-12);
    }

    #[test]
    fn morse_pair_values() {
        let (e, g) = morse_cluster(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 3.0, 1.0).unwrap();
        assert_eq!(e, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
        let r = 1.0 + 2f64.ln() / 3.0;
        let (e, _) = morse_cluster(&[0.0, 0.0, 0.0, 0.0, r, 0.0], 3.0, 1.0).unwrap();
        assert!((e - 0.25).abs() < 1e-15);
    }

    #[test]
    fn morse_square_matches_double_loop() {
        let q = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let (e, _) = morse_cluster(&q, 3.0, 1.0).unwrap();
        let oracle = brute_force(&q, |r| (1.0 - (-3.0 * (r - 1.0)).exp()).powi(2));
        assert!((e - oracle).abs() < 1e-12);
    }

    #[test]
    fn coincident_atoms_error() {
        let q = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 2.0, 0.0, 0.0];
        assert!(matches!(
            lj_cluster(&q),
            Err(Error::Singularity { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn needs_two_atoms() {
        assert!(lj_cluster(&[0.0, 0.0, 0.0]).is_err());
        assert!(Cluster::new(ClusterSpec::lennard_jones(1)).is_err());
    }

    #[test]
    fn pair_offset_shifts_energy() {
        let lattice = simple_cubic_lattice(4, 1.0);
        assert_eq!(lattice.len(), 192);
        let plain = Cluster::new(ClusterSpec::morse(64, 3.0, 1.0)).unwrap();
        let shifted =
            Cluster::new(ClusterSpec::morse(64, 3.0, 1.0).with_pair_offset(-1.0)).unwrap();
        let e0 = plain.value(&lattice).unwrap();
        let e1 = shifted.value(&lattice).unwrap();
        assert!((e0 - e1 - 2016.0).abs() < 1e-9);
    }
}
