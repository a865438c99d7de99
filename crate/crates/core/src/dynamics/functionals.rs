use super::ExtendedState;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::potentials::Objective;

/// `|p|^2 / 2 + f(x) + xi^2 / 2`.
pub fn extended_hamiltonian<O: Objective + ?Sized>(s: &ExtendedState, obj: &O) -> Result<f64> {
    Ok(0.5 * norm_sq(&s.p) + obj.value(&s.x)? + 0.5 * s.xi * s.xi)
}

/// `f(x) - f(x*) + |p|^2 / 2 + mu xi^2 / 2`.
///
/// When the objective has no known minimum value, `f(x*)` is taken as 0 and
/// the result is uncentered.
pub fn lyapunov_g<O: Objective + ?Sized>(s: &ExtendedState, obj: &O, mu: f64) -> Result<f64> {
    let f = obj.value(&s.x)?;
    Ok(g_from_parts(
        f,
        obj.min_value().unwrap_or(0.0),
        &s.p,
        s.xi,
        mu,
    ))
}

#[inline]
pub(crate) fn g_from_parts(f: f64, f_star: f64, p: &[f64], xi: f64, mu: f64) -> f64 {
    f - f_star + 0.5 * norm_sq(p) + 0.5 * mu * xi * xi
}

/// `G + eps (x - x*) . p + eps |x - x*|^2`, for `eps` in `[0, 1/2]`.
pub fn lyapunov_w<O: Objective + ?Sized>(
    s: &ExtendedState,
    obj: &O,
    mu: f64,
    eps: f64,
) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [0, 1/2], got {eps}"
        )));
    }
    let x_star = obj.minimizer().ok_or(Error::MissingMinimizer)?;
    check_dim(x_star.len(), s.x.len())?;
    let f = obj.value(&s.x)?;
    let f_star = obj.min_value().unwrap_or(0.0);
    let dx: Vec<f64> = s.x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    Ok(g_from_parts(f, f_star, &s.p, s.xi, mu) + eps * dot(&dx, &s.p) + eps * norm_sq(&dx))
}

/// `(1 - (p . F)^3 / (alpha mu)) F`.
pub fn effective_force(p: &[f64], force: &[f64], alpha: f64, mu: f64) -> Result<Vec<f64>> {
    check_dim(force.len(), p.len())?;
    let am = alpha * mu;
    if !(am > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha * mu must be > 0, got {am}"
        )));
    }
    let a = 1.0 - dot(p, force).powi(3) / am;
    Ok(force.iter().map(|f| a * f).collect())
}

#[derive(Debug, Clone, Copy)]
pub enum RayleighKind<'a> {
    /// `|p|^4 / (4 alpha mu) + gamma |p|^2 / 2`
    Kinetic,
    /// `(p . F)^4 / (4 alpha mu) + gamma |p|^2 / 2`
    Force(&'a [f64]),
}

/// Quartic-plus-quadratic Rayleigh dissipation function.
pub fn rayleigh_dissipation(
    p: &[f64],
    kind: RayleighKind<'_>,
    gamma: f64,
    alpha: f64,
    mu: f64,
) -> Result<f64> {
    let am = alpha * mu;
    if !(am > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha * mu must be > 0, got {am}"
        )));
    }
    let p2 = norm_sq(p);
    let quartic = match kind {
        RayleighKind::Kinetic => p2 * p2,
        RayleighKind::Force(f) => {
            check_dim(p.len(), f.len())?;
            dot(p, f).powi(4)
        }
    };
    Ok(quartic / (4.0 * am) + 0.5 * gamma * p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Harmonic;

    #[test]
    fn hamiltonian_values() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let s = ExtendedState::at_rest(vec![0.0, 0.0]);
        assert_eq!(extended_hamiltonian(&s, &h).unwrap(), 0.0);
        let s = ExtendedState::new(vec![0.0, 0.0], vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(extended_hamiltonian(&s, &h).unwrap(), 2.5);
    }

    #[test]
    fn g_values() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        assert_eq!(
            lyapunov_g(&ExtendedState::at_rest(vec![0.0, 0.0]), &h, 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            lyapunov_g(&ExtendedState::at_rest(vec![1.0, 2.0]), &h, 1.0).unwrap(),
            20.5
        );
    }

    #[test]
    fn w_values() {
        let h = Harmonic::diagonal(&[1.0, 1.0]).unwrap();
        let s = ExtendedState::new(vec![1.0, 0.0], vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(lyapunov_w(&s, &h, 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(
            lyapunov_w(&s, &h, 1.0, 0.0).unwrap(),
            lyapunov_g(&s, &h, 1.0).unwrap()
        );
        assert!(lyapunov_w(&s, &h, 1.0, 0.6).is_err());
    }

    #[test]
    fn effective_force_values() {
        assert_eq!(
            effective_force(&[0.0, 1.0], &[2.0, 0.0], 1.0, 1.0).unwrap(),
            vec![2.0, 0.0]
        );
        assert_eq!(
            effective_force(&[1.0, 0.0], &[2.0, 0.0], 1.0, 1.0).unwrap(),
            vec![-14.0, 0.0]
        );
        assert!(effective_force(&[1.0], &[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn rayleigh_values() {
        assert_eq!(
            rayleigh_dissipation(&[0.0, 0.0], RayleighKind::Kinetic, 1.0, 1.0, 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            rayleigh_dissipation(&[1.0, 0.0], RayleighKind::Kinetic, 0.0, 1.0, 1.0).unwrap(),
            0.25
        );
    }
}
