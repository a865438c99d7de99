//! Benchmark objectives with analytic gradients.
//!
//! Every objective implements [`Objective`]; the free functions
//! ([`harmonic`], [`rosenbrock`], [`lj_cluster`], [`morse_cluster`]) are thin
//! wrappers returning `(value, gradient)` pairs.

mod cluster;
mod fd;
mod harmonic;
mod rosenbrock;
pub mod xyz;

pub use cluster::{
    lj_cluster, morse_cluster, simple_cubic_lattice, Cluster, ClusterSpec, PairKind,
    LJ38_MIN_ENERGY, LJ75_MIN_ENERGY, MORSE64_MIN_ENERGY,
};
pub use fd::fd_gradient_check;
pub use harmonic::{harmonic, Harmonic};
pub use rosenbrock::{rosenbrock, Rosenbrock};

use crate::error::Result;

/// A smooth function `f: R^d -> R` with an analytic gradient.
///
/// Implementations must be deterministic: the same input gives bit-identical
/// output.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `grad f(x)` into `grad` and returns `f(x)`.
    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_gradient(x, &mut g)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        self.value_gradient(x, &mut g)?;
        Ok(g)
    }

    /// Location of the global minimizer, when it is unique and known.
    fn minimizer(&self) -> Option<&[f64]> {
        None
    }

    /// Value at the global minimum, when known.
    fn min_value(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &str;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        (**self).value_gradient(x, grad)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn minimizer(&self) -> Option<&[f64]> {
        (**self).minimizer()
    }
    fn min_value(&self) -> Option<f64> {
        (**self).min_value()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        (**self).value_gradient(x, grad)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn minimizer(&self) -> Option<&[f64]> {
        (**self).minimizer()
    }
    fn min_value(&self) -> Option<f64> {
        (**self).min_value()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}
