use nalgebra::DMatrix;

use super::Objective;
use crate::error::{check_dim, Error, Result};

/// Quadratic bowl `f(x) = x^T C x / 2` with `C` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Harmonic {
    c: DMatrix<f64>,
    origin: Vec<f64>,
}

impl Harmonic {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if !c.is_square() || c.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "harmonic matrix must be square and nonempty, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let asym = (&c - c.transpose()).amax();
        if asym > 1e-12 * c.amax().max(1.0) {
            return Err(Error::InvalidParameter(
                "harmonic matrix is not symmetric".into(),
            ));
        }
        if c.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "harmonic matrix is not positive definite".into(),
            ));
        }
        let origin = vec![0.0; c.nrows()];
        Ok(Self { c, origin })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(diag),
        ))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }
}

impl Objective for Harmonic {
    fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), grad.len())?;
        let n = self.dim();
        let mut value = 0.0;
        for i in 0..n {
            let mut ci = 0.0;
            for j in 0..n {
                ci += self.c[(i, j)] * x[j];
            }
            grad[i] = ci;
            value += x[i] * ci;
        }
        Ok(0.5 * value)
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.origin)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &str {
        "harmonic"
    }
}

/// Returns `(x^T C x / 2, C x)`.
pub fn harmonic(x: &[f64], c: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    if !c.is_square() {
        return Err(Error::InvalidParameter(
            "harmonic matrix must be square".into(),
        ));
    }
    check_dim(c.nrows(), x.len())?;
    let mut g = vec![0.0; x.len()];
    let mut value = 0.0;
    for i in 0..x.len() {
        g[i] = (0..x.len()).map(|j| c[(i, j)] * x[j]).sum();
        value += x[i] * g[i];
    }
    Ok((0.5 * value, g))
}
