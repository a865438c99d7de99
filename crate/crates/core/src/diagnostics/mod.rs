//! Runtime checks on traces: Lyapunov monotonicity, equilibria, decay-rate
//! fits, observed order of accuracy and the large-`alpha` limit.

mod order;

pub use order::{ldhd_limit_deviation, measure_order, LimitPoint, OrderPoint, OrderStudy};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsParams, ExtendedState};
use crate::error::{check_dim, Error, Result};
use crate::integrators::Trace;
use crate::linalg::{dot, norm, norm_sq};
use crate::potentials::Objective;

/// Scalar functional evaluated on every trace record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "kebab-case")]
pub enum Functional {
    /// `|p|^2/2 + f + xi^2/2`
    HTilde,
    /// `f - f* + |p|^2/2 + mu xi^2/2`
    G,
    /// `G + eps (x - x*) . p + eps |x - x*|^2`
    WEps { eps: f64 },
    /// `f - f* + |p| + |xi|`, the quantity bounded by `C e^{-kappa t}`.
    Residual,
}

/// Values of `functional` along the trace, one per record.
pub fn functional_values<O: Objective + ?Sized>(
    trace: &Trace,
    functional: Functional,
    obj: &O,
) -> Result<Vec<f64>> {
    match functional {
        Functional::HTilde => Ok(trace.records.iter().map(|r| r.h_tilde).collect()),
        Functional::G => Ok(trace.records.iter().map(|r| r.g).collect()),
        Functional::Residual => {
            let f_star = obj.min_value().unwrap_or(0.0);
            Ok(trace
                .records
                .iter()
                .map(|r| r.f - f_star + norm(&r.p) + r.xi.abs())
                .collect())
        }
        Functional::WEps { eps } => {
            if !(0.0..=0.5).contains(&eps) {
                return Err(Error::InvalidParameter(format!(
                    "eps must lie in [0, 1/2], got {eps}"
                )));
            }
            let x_star = obj.minimizer().ok_or(Error::MissingMinimizer)?;
            trace
                .records
                .iter()
                .map(|r| {
                    check_dim(x_star.len(), r.x.len())?;
                    let dx: Vec<f64> = r.x.iter().zip(x_star).map(|(a, b)| a - b).collect();
                    Ok(r.g + eps * dot(&dx, &r.p) + eps * norm_sq(&dx))
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub n_violations: usize,
    /// Largest positive increment between consecutive values (0 if none).
    pub max_violation: f64,
    pub first_violation_step: Option<usize>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.n_violations == 0
    }
}

/// Counts increments larger than `tol` in `values`; `steps[i]` labels `values[i]`.
pub fn monotonicity_of(values: &[f64], steps: &[usize], tol: f64) -> MonotonicityReport {
    let mut report = MonotonicityReport {
        n_violations: 0,
        max_violation: 0.0,
        first_violation_step: None,
    };
    for (i, w) in values.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc > report.max_violation || inc.is_nan() {
            report.max_violation = if inc.is_nan() { f64::INFINITY } else { inc };
        }
        if inc > tol || inc.is_nan() {
            report.n_violations += 1;
            report.first_violation_step.get_or_insert(steps[i + 1]);
        }
    }
    report
}

/// Checks that `functional` never increases by more than `tol` between
/// consecutive records. The trace must be recorded with stride 1.
pub fn check_monotone<O: Objective + ?Sized>(
    trace: &Trace,
    functional: Functional,
    tol: f64,
    obj: &O,
) -> Result<MonotonicityReport> {
    if trace.stride != 1 {
        return Err(Error::InvalidParameter(format!(
            "monotonicity checks need a stride-1 trace, got stride {}",
            trace.stride
        )));
    }
    let values = functional_values(trace, functional, obj)?;
    let steps: Vec<usize> = trace.records.iter().map(|r| r.step).collect();
    Ok(monotonicity_of(&values, &steps, tol))
}

/// `|p| <= tol`, `|grad f(x)| <= tol` and `|xi| <= tol`.
pub fn is_equilibrium<O: Objective + ?Sized>(s: &ExtendedState, obj: &O, tol: f64) -> Result<bool> {
    let g = obj.gradient(&s.x)?;
    Ok(norm(&s.p) <= tol && norm(&g) <= tol && s.xi.abs() <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub kappa: f64,
    pub r_squared: f64,
    /// Inclusive range of step indices used in the fit.
    pub window: (usize, usize),
}

/// Least-squares line through `(t, ln v)`; `kappa` is minus the slope.
///
/// A constant series gets `kappa = 0`, `r_squared = 1`.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    check_dim(times.len(), values.len())?;
    if times.len() < 2 {
        return Err(Error::InvalidParameter(
            "rate fit needs at least two points".into(),
        ));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs positive finite values, found {v}"
        )));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok((0.0, 1.0));
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in times.iter().zip(&ys) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    if stt == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit needs distinct times".into(),
        ));
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    };
    Ok((-slope, r2))
}

/// Fits `functional ~ C e^{-kappa t}` over `window` (inclusive step range);
/// defaults to the last half of the records.
pub fn fit_rate<O: Objective + ?Sized>(
    trace: &Trace,
    functional: Functional,
    obj: &O,
    window: Option<(usize, usize)>,
) -> Result<RateFit> {
    let values = functional_values(trace, functional, obj)?;
    let recs = &trace.records;
    if recs.len() < 2 {
        return Err(Error::InvalidParameter(
            "trace too short for a rate fit".into(),
        ));
    }
    let window = window.unwrap_or_else(|| {
        let start = recs[recs.len() / 2].step;
        (start, recs[recs.len() - 1].step)
    });
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (r, v) in recs.iter().zip(&values) {
        if (window.0..=window.1).contains(&r.step) {
            ts.push(r.time);
            vs.push(*v);
        }
    }
    if ts.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "rate-fit window {window:?} contains no records"
        )));
    }
    let (kappa, r_squared) = fit_log_linear(&ts, &vs)?;
    Ok(RateFit {
        kappa,
        r_squared,
        window,
    })
}

/// Discrete Lyapunov function
/// `f - f* + |p|^2/2 + a mu xi^2 + eps |x - x*|^2 + eps (x - x*) . p`
/// with `a = e^{2 (alpha - gamma) dt} / 2`.
pub fn discrete_lyapunov<O: Objective + ?Sized>(
    s: &ExtendedState,
    obj: &O,
    params: &DynamicsParams,
    dt: f64,
    eps: f64,
) -> Result<f64> {
    let x_star = obj.minimizer().ok_or(Error::MissingMinimizer)?;
    check_dim(x_star.len(), s.x.len())?;
    let f = obj.value(&s.x)? - obj.min_value().unwrap_or(0.0);
    let a = 0.5 * (2.0 * (params.alpha - params.gamma) * dt).exp();
    let dx: Vec<f64> = s.x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    Ok(f + 0.5 * norm_sq(&s.p)
        + a * params.mu * s.xi * s.xi
        + eps * norm_sq(&dx)
        + eps * dot(&dx, &s.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{integrate, SchemeConfig, StoppingRule};
    use crate::potentials::{Harmonic, Rosenbrock};

    fn harmonic_trace(cfg: &SchemeConfig, steps: usize) -> (Harmonic, Trace) {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let t = integrate(
            &ExtendedState::at_rest(vec![1.0, 2.0]),
            &h,
            cfg,
            &StoppingRule::Never,
            steps,
            Some(1),
        )
        .unwrap();
        (h, t)
    }

    #[test]
    fn equilibrium_trace_has_no_violations() {
        let r = Rosenbrock::default();
        let t = integrate(
            &ExtendedState::at_rest(vec![1.0, 1.0]),
            &r,
            &SchemeConfig::kfad(0.01, 1.0, 1.0, 1.0),
            &StoppingRule::Never,
            50,
            Some(1),
        )
        .unwrap();
        for func in [
            Functional::HTilde,
            Functional::G,
            Functional::WEps { eps: 0.25 },
        ] {
            let rep = check_monotone(&t, func, 0.0, &r).unwrap();
            assert!(rep.is_monotone());
            assert_eq!(rep.max_violation, 0.0);
            assert_eq!(rep.first_violation_step, None);
        }
    }

    #[test]
    fn undamped_verlet_is_flagged() {
        let (h, t) = harmonic_trace(&SchemeConfig::ldhd(0.1, 0.0), 500);
        let rep = check_monotone(&t, Functional::HTilde, 0.0, &h).unwrap();
        assert!(!rep.is_monotone());
        assert!(rep.first_violation_step.is_some());
        let vals = functional_values(&t, Functional::HTilde, &h).unwrap();
        let band = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(band < 0.1 * vals[0]);
    }

    #[test]
    fn strided_trace_rejected() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let t = integrate(
            &ExtendedState::at_rest(vec![1.0, 2.0]),
            &h,
            &SchemeConfig::ldhd(0.1, 1.0),
            &StoppingRule::Never,
            20,
            Some(3),
        )
        .unwrap();
        assert!(check_monotone(&t, Functional::G, 0.0, &h).is_err());
    }

    #[test]
    fn equilibrium_predicate() {
        let r = Rosenbrock::default();
        assert!(is_equilibrium(&ExtendedState::at_rest(vec![1.0, 1.0]), &r, 1e-8).unwrap());
        let s = ExtendedState::new(vec![1.0, 1.0], vec![0.0, 0.0], 1.0).unwrap();
        assert!(!is_equilibrium(&s, &r, 1e-8).unwrap());
    }

    #[test]
    fn exact_exponential_fit() {
        let ts: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (-2.0 * t).exp()).collect();
        let (k, r2) = fit_log_linear(&ts, &vs).unwrap();
        assert!((k - 2.0).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-10);
        let scaled: Vec<f64> = vs.iter().map(|v| 37.5 * v).collect();
        let (k2, _) = fit_log_linear(&ts, &scaled).unwrap();
        assert!((k - k2).abs() < 1e-12);
        let (k0, r0) = fit_log_linear(&ts, &vec![3.0; 100]).unwrap();
        assert_eq!(k0, 0.0);
        assert_eq!(r0, 1.0);
        assert!(fit_log_linear(&ts[..2], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn discrete_lyapunov_reduces_to_energy() {
        let h = Harmonic::diagonal(&[1.0, 10.0]).unwrap();
        let s = ExtendedState::at_rest(vec![1.0, 2.0]);
        let params = DynamicsParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(discrete_lyapunov(&s, &h, &params, 0.01, 0.0).unwrap(), 20.5);
    }
}
