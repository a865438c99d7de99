//! Continuous-time friction-adaptive dynamics
//!
//! ```text
//! x' = p
//! p' = F(x) - xi A(x) p - gamma p
//! xi' = p^T A(x) p / mu - alpha xi
//! ```
//!
//! together with the energy-like functionals used to monitor it.

mod coupling;
pub(crate) mod functionals;

pub use coupling::{Coupling, CustomCoupling, LowRank, ProjectorForm, DEGENERATE_FORCE_NORM};
pub use functionals::{
    effective_force, extended_hamiltonian, lyapunov_g, lyapunov_w, rayleigh_dissipation,
    RayleighKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::potentials::Objective;

/// Positions, momenta and the adaptive friction scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
}

impl ExtendedState {
    pub fn new(x: Vec<f64>, p: Vec<f64>, xi: f64) -> Result<Self> {
        check_dim(x.len(), p.len())?;
        Ok(Self { x, p, xi })
    }

    /// `p = 0`, `xi = 0` at the given position.
    pub fn at_rest(x: Vec<f64>) -> Self {
        let p = vec![0.0; x.len()];
        Self { x, p, xi: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.xi.is_finite()
            && crate::linalg::all_finite(&self.x)
            && crate::linalg::all_finite(&self.p)
    }
}

/// Linear friction `gamma`, auxiliary friction `alpha` and coupling mass `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub gamma: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl DynamicsParams {
    pub fn new(gamma: f64, alpha: f64, mu: f64) -> Result<Self> {
        let p = Self { gamma, alpha, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be > 0, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha: 1.0,
            mu: 1.0,
        }
    }
}

/// Time derivative of an [`ExtendedState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
}

impl Derivative {
    pub fn is_zero(&self) -> bool {
        self.xi == 0.0 && self.x.iter().chain(&self.p).all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.p)
            .fold(self.xi.abs(), |m, v| m.max(v.abs()))
    }
}

/// Right-hand side of the friction-adaptive dynamics at `s`.
pub fn fad_rhs<O: Objective + ?Sized>(
    s: &ExtendedState,
    obj: &O,
    coupling: &Coupling,
    params: &DynamicsParams,
) -> Result<Derivative> {
    check_dim(obj.dim(), s.x.len())?;
    check_dim(obj.dim(), s.p.len())?;
    let mut force = obj.gradient(&s.x)?;
    force.iter_mut().for_each(|g| *g = -*g);
    let ap = coupling.apply(&s.x, &force, &s.p)?;
    let p_dot = force
        .iter()
        .zip(&ap)
        .zip(&s.p)
        .map(|((f, a), p)| f - s.xi * a - params.gamma * p)
        .collect();
    let xi_dot = crate::linalg::dot(&s.p, &ap) / params.mu - params.alpha * s.xi;
    Ok(Derivative {
        x: s.p.clone(),
        p: p_dot,
        xi: xi_dot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Harmonic, Rosenbrock};

    #[test]
    fn critical_point_is_stationary() {
        let r = Rosenbrock::default();
        let s = ExtendedState::at_rest(vec![1.0, 1.0]);
        let d = fad_rhs(&s, &r, &Coupling::Identity, &DynamicsParams::default()).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn reduces_to_hamiltonian() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let s = ExtendedState::new(vec![0.5, -0.2], vec![0.3, 0.1], 0.0).unwrap();
        let params = DynamicsParams::new(0.0, 1.0, 1.0).unwrap();
        let d = fad_rhs(&s, &h, &Coupling::Identity, &params).unwrap();
        assert_eq!(d.x, s.p);
        assert_eq!(d.p, vec![-0.5, 2.0]);
    }

    #[test]
    fn harmonic_example() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let s = ExtendedState::at_rest(vec![1.0, 2.0]);
        let params = DynamicsParams::new(1.0, 1.0, 1.0).unwrap();
        let d = fad_rhs(&s, &h, &Coupling::Identity, &params).unwrap();
        assert_eq!(d.x, vec![0.0, 0.0]);
        assert_eq!(d.p, vec![-1.0, -20.0]);
        assert_eq!(d.xi, 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(DynamicsParams::new(1.0, 1.0, 0.0).is_err());
        assert!(DynamicsParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(DynamicsParams::new(0.0, 0.0, 1e-3).is_ok());
    }

    #[test]
    fn mismatched_state() {
        assert!(ExtendedState::new(vec![0.0; 2], vec![0.0; 3], 0.0).is_err());
    }
}
