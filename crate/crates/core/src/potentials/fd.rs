use super::Objective;
use crate::error::{check_dim, Error, Result};

/// Compares the analytic gradient against central differences.
///
/// Returns the largest per-component error, each scaled by
/// `max(1, |analytic component|)`.
pub fn fd_gradient_check<O: Objective + ?Sized>(obj: &O, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h must be > 0, got {h}"
        )));
    }
    check_dim(obj.dim(), x.len())?;
    let analytic = obj.gradient(x)?;
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = obj.value(&probe)?;
        probe[i] = x[i] - h;
        let fm = obj.value(&probe)?;
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        let err = (fd - analytic[i]).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
