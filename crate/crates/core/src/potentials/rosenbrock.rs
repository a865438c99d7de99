use super::Objective;
use crate::error::{check_dim, Result};

/// Two-dimensional Rosenbrock valley `(a - x1)^2 + b (x2 - x1^2)^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    pub a: f64,
    pub b: f64,
    minimizer: [f64; 2],
}

impl Rosenbrock {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            minimizer: [a, a * a],
        }
    }
}

impl Default for Rosenbrock {
    fn default() -> Self {
        Self::new(1.0, 100.0)
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }

    fn value_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_dim(2, x.len())?;
        check_dim(2, grad.len())?;
        let (f, g) = eval(x[0], x[1], self.a, self.b);
        grad.copy_from_slice(&g);
        Ok(f)
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.minimizer)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> &str {
        "rosenbrock"
    }
}

#[inline]
fn eval(x1: f64, x2: f64, a: f64, b: f64) -> (f64, [f64; 2]) {
    let u = a - x1;
    let v = x2 - x1 * x1;
    let f = u * u + b * v * v;
    let g = [-2.0 * u - 4.0 * b * x1 * v, 2.0 * b * v];
    (f, g)
}

/// Returns the Rosenbrock value and its analytic gradient at a 2-vector.
pub fn rosenbrock(x: &[f64], a: f64, b: f64) -> Result<(f64, Vec<f64>)> {
    check_dim(2, x.len())?;
    let (f, g) = eval(x[0], x[1], a, b);
    Ok((f, g.to_vec()))
}
