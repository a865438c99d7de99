//! Exactly (or near-exactly) solvable pieces of the splitting schemes.
//!
//! Letters follow the usual convention: A drift, B kick, C friction coupling,
//! D linear damping, O Ornstein-Uhlenbeck.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{Coupling, ExtendedState};
use crate::error::{Error, Result};
use crate::linalg::{axpy, relaxation_weight, scale};

/// A: `x <- x + dt p`.
pub fn step_a(s: &mut ExtendedState, dt: f64) {
    for (x, p) in s.x.iter_mut().zip(&s.p) {
        *x += dt * p;
    }
}

/// B: `p <- p + dt F`, with `F` evaluated at the current `x`.
pub fn step_b(s: &mut ExtendedState, force: &[f64], dt: f64) {
    axpy(dt, force, &mut s.p);
}

/// D: `p <- e^{-gamma dt} p`; with `also_xi`, also `xi <- e^{-alpha dt} xi`.
pub fn step_d(s: &mut ExtendedState, gamma: f64, dt: f64, also_xi: bool, alpha: f64) {
    if gamma != 0.0 {
        scale((-gamma * dt).exp(), &mut s.p);
    }
    if also_xi && alpha != 0.0 {
        s.xi *= (-alpha * dt).exp();
    }
}

/// C step for the built-in couplings: exponential half-kicks around an
/// exact relaxation of `xi`, with `A` frozen at the current position.
pub fn step_c_leapfrog(
    s: &mut ExtendedState,
    coupling: &Coupling,
    force: &[f64],
    dt: f64,
    alpha: f64,
    mu: f64,
) -> Result<()> {
    let a = coupling.low_rank(force).ok_or_else(|| {
        Error::UnsupportedScheme(
            "the leapfrog C step needs a built-in coupling; use step_c_implicit".into(),
        )
    })?;
    a.exp_apply(-0.5 * dt * s.xi, &mut s.p);
    s.xi = (-alpha * dt).exp() * s.xi + relaxation_weight(alpha, dt) / mu * a.quadratic_form(&s.p);
    a.exp_apply(-0.5 * dt * s.xi, &mut s.p);
    Ok(())
}

/// C step for a general symmetric `A`: linearly implicit half-steps.
pub fn step_c_implicit(
    s: &mut ExtendedState,
    a: &DMatrix<f64>,
    dt: f64,
    alpha: f64,
    mu: f64,
) -> Result<()> {
    crate::error::check_dim(s.dim(), a.nrows())?;
    let d = s.dim();
    let p = DVector::from_column_slice(&s.p);
    let p_half = if s.xi == 0.0 {
        p
    } else {
        let m = DMatrix::identity(d, d) + a * (0.5 * dt * s.xi);
        let solved = m.clone().lu().solve(&p);
        match solved {
            Some(v) if v.iter().all(|x| x.is_finite()) => v,
            _ => {
                let sv = m.singular_values();
                let condition = sv.max() / sv.min();
                return Err(Error::SingularSystem { condition });
            }
        }
    };
    let ap = a * &p_half;
    s.xi = (-alpha * dt).exp() * s.xi + relaxation_weight(alpha, dt) / mu * p_half.dot(&ap);
    let p_new = &p_half - ap * (0.5 * dt * s.xi);
    s.p.copy_from_slice(p_new.as_slice());
    Ok(())
}

/// C' step (no `alpha`) for `A = I` or a projector.
///
/// Integrates `omega' = -2 omega xi`, `xi' = omega / mu` with `n_sub` Strang
/// substeps, accumulating `eta = -int xi`, then sets `p <- exp(eta A) p`.
pub fn step_cprime_mts(
    s: &mut ExtendedState,
    coupling: &Coupling,
    force: &[f64],
    dt: f64,
    mu: f64,
    n_sub: usize,
) -> Result<()> {
    if n_sub == 0 {
        return Err(Error::InvalidParameter("mts substeps must be >= 1".into()));
    }
    let form = coupling.projector_form(&s.x)?;
    let (xi, eta) = cprime_scalar_flow(form.omega(force, &s.p), s.xi, dt, mu, n_sub);
    form.exp_apply(eta, force, &mut s.p);
    s.xi = xi;
    Ok(())
}

/// C' update of the C'D'BA scheme: `p <- exp(-A xi dt) p`, then `xi` is
/// rescaled so that `|p|^2 + mu xi^2` is unchanged. Needs `xi >= 0`.
pub fn step_cprime_exact(
    s: &mut ExtendedState,
    coupling: &Coupling,
    force: &[f64],
    dt: f64,
    mu: f64,
) {
    let tau = s.xi * dt;
    let gain = match coupling.low_rank(force) {
        Some(a) => {
            let gain = a.one_minus_exp_quad(tau, &s.p);
            a.exp_apply(-tau, &mut s.p);
            gain
        }
        None => {
            let a = coupling.matrix(&s.x, force);
            let gain = dense_one_minus_exp_quad(&a, tau, &s.p);
            dense_exp_apply(&a, -tau, &mut s.p);
            gain
        }
    };
    s.xi = (s.xi * s.xi + gain / mu).sqrt();
}

/// Returns `(xi(dt), -int_0^dt xi)` for the `(omega, xi)` subsystem.
pub(crate) fn cprime_scalar_flow(
    omega0: f64,
    xi0: f64,
    dt: f64,
    mu: f64,
    n_sub: usize,
) -> (f64, f64) {
    let h = dt / n_sub as f64;
    let (mut omega, mut xi, mut eta) = (omega0, xi0, 0.0);
    if omega == 0.0 {
        return (xi, -xi * dt);
    }
    for _ in 0..n_sub {
        xi += 0.5 * h * omega / mu;
        eta -= h * xi;
        omega *= (-2.0 * h * xi).exp();
        xi += 0.5 * h * omega / mu;
    }
    (xi, eta)
}

/// O: exact Ornstein-Uhlenbeck update of the momenta.
pub fn step_o<R: Rng + ?Sized>(
    s: &mut ExtendedState,
    gamma: f64,
    beta_inv: f64,
    dt: f64,
    rng: &mut R,
) {
    let c1 = (-gamma * dt).exp();
    let c2 = (-(-2.0 * gamma * dt).exp_m1() * beta_inv).sqrt();
    for p in s.p.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *p = c1 * *p + c2 * g;
    }
}

/// `v <- exp(tau A) v` for a dense symmetric `A`.
pub(crate) fn dense_exp_apply(a: &DMatrix<f64>, tau: f64, v: &mut [f64]) {
    let eig = a.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut coeff = q.transpose() * DVector::from_column_slice(v);
    for (c, l) in coeff.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= (tau * l).exp();
    }
    v.copy_from_slice((q * coeff).as_slice());
}

/// `p^T (I - exp(-2 tau A)) p` for a dense symmetric `A`.
pub(crate) fn dense_one_minus_exp_quad(a: &DMatrix<f64>, tau: f64, p: &[f64]) -> f64 {
    let eig = a.clone().symmetric_eigen();
    let coeff = eig.eigenvectors.transpose() * DVector::from_column_slice(p);
    coeff
        .iter()
        .zip(eig.eigenvalues.iter())
        .map(|(c, l)| c * c * -(-2.0 * tau * l).exp_m1())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn state(x: &[f64], p: &[f64], xi: f64) -> ExtendedState {
        ExtendedState::new(x.to_vec(), p.to_vec(), xi).unwrap()
    }

    #[test]
    fn drift() {
        let mut s = state(&[0.0], &[1.0], 0.0);
        step_a(&mut s, 0.5);
        assert_eq!(s.x, vec![0.5]);
        let mut s = state(&[0.3], &[0.0], 0.0);
        step_a(&mut s, 0.5);
        assert_eq!(s.x, vec![0.3]);
    }

    #[test]
    fn drift_halves_compose() {
        let mut a = state(&[0.1, -0.7], &[0.25, 1.5], 0.0);
        let mut b = a.clone();
        step_a(&mut a, 0.25);
        step_a(&mut a, 0.25);
        step_a(&mut b, 0.5);
        assert_eq!(a, b);
    }

    #[test]
    fn kick() {
        let mut s = state(&[0.0, 0.0], &[0.0, 0.0], 0.0);
        step_b(&mut s, &[1.0, -1.0], 0.5);
        assert_eq!(s.p, vec![0.5, -0.5]);
        step_b(&mut s, &[0.0, 0.0], 0.5);
        assert_eq!(s.p, vec![0.5, -0.5]);
        let mut a = state(&[0.0], &[0.0], 0.0);
        let mut b = a.clone();
        step_b(&mut a, &[0.5], 0.25);
        step_b(&mut a, &[0.5], 0.25);
        step_b(&mut b, &[0.5], 0.5);
        assert_eq!(a, b);
    }

    #[test]
    fn damping() {
        let mut s = state(&[0.0], &[1.0], 1.0);
        step_d(&mut s, 0.0, 0.3, false, 1.0);
        assert_eq!(s.p, vec![1.0]);
        step_d(&mut s, 1.0, 0.01, false, 1.0);
        assert_eq!(s.p, vec![(-0.01f64).exp()]);
        assert_eq!(s.xi, 1.0);
        let mut s = state(&[0.0], &[0.0], 1.0);
        step_d(&mut s, 1.0, 1.0, true, 1.0);
        assert!((s.xi - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn leapfrog_c_example() {
        let mut s = state(&[0.0, 0.0], &[1.0, 0.0], 0.0);
        step_c_leapfrog(&mut s, &Coupling::Identity, &[0.0, 0.0], 0.1, 1.0, 1.0).unwrap();
        let xi1 = 1.0 - (-0.1f64).exp();
        assert!((s.xi - xi1).abs() < 1e-15);
        assert!((s.xi - 0.0951626).abs() < 1e-7);
        assert!((s.p[0] - (-0.05 * xi1).exp()).abs() < 1e-15);
        assert!((s.p[0] - 0.9952526).abs() < 1e-6);
        assert_eq!(s.p[1], 0.0);
    }

    #[test]
    fn leapfrog_c_zero_momentum_decays_xi() {
        let mut s = state(&[0.0], &[0.0], 0.8);
        step_c_leapfrog(&mut s, &Coupling::Identity, &[1.0], 0.2, 0.5, 1.0).unwrap();
        assert_eq!(s.p, vec![0.0]);
        assert_eq!(s.xi, (-0.1f64).exp() * 0.8);
    }

    #[test]
    fn leapfrog_c_alpha_zero_limit() {
        let mut s = state(&[0.0], &[2.0], 0.0);
        step_c_leapfrog(&mut s, &Coupling::Identity, &[0.0], 0.1, 0.0, 2.0).unwrap();
        assert!((s.xi - 0.1 / 2.0 * 4.0).abs() < 1e-15);
    }

    #[test]
    fn implicit_c_special_cases() {
        let a = DMatrix::<f64>::identity(2, 2);
        let mut s = state(&[0.0, 0.0], &[0.4, -0.2], 0.0);
        let p0 = s.p.clone();
        step_c_implicit(&mut s, &a, 0.1, 1.0, 1.0).unwrap();
        // xi_n = 0: the first half step leaves p unchanged, so xi_{n+1} sees p_n
        let expected_xi = (1.0 - (-0.1f64).exp()) * dot(&p0, &p0);
        assert!((s.xi - expected_xi).abs() < 1e-15);

        let zero = DMatrix::<f64>::zeros(2, 2);
        let mut s = state(&[0.0, 0.0], &[0.4, -0.2], 0.7);
        step_c_implicit(&mut s, &zero, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(s.p, vec![0.4, -0.2]);
        assert!((s.xi - 0.7 * (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn implicit_c_reports_singular_system() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[-20.0, 1.0]));
        let mut s = state(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        let err = step_c_implicit(&mut s, &a, 0.1, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn cprime_zero_omega_is_inert() {
        let c = Coupling::mixture(0.0, 1.0, true).unwrap();
        let mut s = state(&[0.0, 0.0], &[0.0, 3.0], 0.4);
        step_cprime_mts(&mut s, &c, &[1.0, 0.0], 0.1, 1.0, 16).unwrap();
        assert_eq!(s.p, vec![0.0, 3.0]);
        assert_eq!(s.xi, 0.4);
    }

    #[test]
    fn cprime_rejects_non_projector() {
        let mut s = state(&[0.0, 0.0], &[1.0, 0.0], 0.0);
        let err = step_cprime_mts(&mut s, &Coupling::ForceOuter, &[1.0, 0.0], 0.1, 1.0, 4);
        assert!(matches!(err, Err(Error::UnsupportedScheme(_))));
    }

    #[test]
    fn o_step_without_noise_is_damping() {
        let mut rng = rand::thread_rng();
        let mut s = state(&[0.0], &[2.0], 0.0);
        step_o(&mut s, 3.0, 0.0, 0.1, &mut rng);
        assert_eq!(s.p, vec![2.0 * (-0.3f64).exp()]);
    }

    #[test]
    fn dense_exponential_helpers() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let mut v = [1.0, -1.0];
        dense_exp_apply(&a, 0.0, &mut v);
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
        assert!(dense_one_minus_exp_quad(&a, 0.0, &v).abs() < 1e-14);
    }
}
