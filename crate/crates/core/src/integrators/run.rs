//! Time stepping loop, stopping rules and recorded traces.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schemes::{Integrator, SchemeConfig};
use crate::dynamics::{functionals::g_from_parts, ExtendedState};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{distance, norm, norm_sq};
use crate::potentials::Objective;

/// Stride used when none is given: 1 for `d <= 10`, else 10.
pub fn default_stride(dim: usize) -> usize {
    if dim <= 10 {
        1
    } else {
        10
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StoppingRule {
    /// `|x - x*| <= tol`; needs a known minimizer.
    DistanceToMinimizer { tol: f64 },
    /// `|grad f(x)| <= tol`.
    GradientNorm { tol: f64 },
    /// Run the full step budget.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxSteps,
    Diverged { step: usize },
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxSteps => "max-steps",
            RunStatus::Diverged { .. } => "diverged",
        }
    }
}

/// Result of a run without per-step recording.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub iterations: usize,
    pub status: RunStatus,
    pub final_state: ExtendedState,
    pub gradient_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
    pub f: f64,
    pub grad_norm: f64,
    pub h_tilde: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub stride: usize,
    pub iterations: usize,
    pub status: RunStatus,
    pub final_state: ExtendedState,
    pub gradient_evaluations: usize,
    /// False when the objective has no known minimum value and `G` is
    /// reported relative to 0.
    pub lyapunov_centered: bool,
}

impl Trace {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    /// Writes the trace CSV; per-component `x`/`p` columns are added when `d <= 6`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let dim = self.final_state.dim();
        let with_coords = dim <= 6;
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["step", "time", "f", "grad_norm", "xi", "H_tilde", "G"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if with_coords {
            header.extend((1..=dim).map(|i| format!("x{i}")));
            header.extend((1..=dim).map(|i| format!("p{i}")));
        }
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                fmt_f64(r.time),
                fmt_f64(r.f),
                fmt_f64(r.grad_norm),
                fmt_f64(r.xi),
                fmt_f64(r.h_tilde),
                fmt_f64(r.g),
            ];
            if with_coords {
                row.extend(r.x.iter().chain(&r.p).map(|v| fmt_f64(*v)));
            }
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest representation that round-trips.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn record<O: Objective + ?Sized>(
    s: &ExtendedState,
    step: usize,
    dt: f64,
    obj: &O,
    mu: f64,
    grad: &mut [f64],
) -> Result<TraceRecord> {
    let f = obj.value_gradient(&s.x, grad)?;
    let f_star = obj.min_value().unwrap_or(0.0);
    Ok(TraceRecord {
        step,
        time: step as f64 * dt,
        x: s.x.clone(),
        p: s.p.clone(),
        xi: s.xi,
        f,
        grad_norm: norm(grad),
        h_tilde: 0.5 * norm_sq(&s.p) + f + 0.5 * s.xi * s.xi,
        g: g_from_parts(f, f_star, &s.p, s.xi, mu),
    })
}

fn stop_fired<O: Objective + ?Sized>(
    rule: &StoppingRule,
    s: &ExtendedState,
    obj: &O,
    grad: &mut [f64],
) -> Result<bool> {
    Ok(match *rule {
        StoppingRule::DistanceToMinimizer { tol } => {
            let x_star = obj.minimizer().ok_or(Error::MissingMinimizer)?;
            distance(&s.x, x_star) <= tol
        }
        StoppingRule::GradientNorm { tol } => {
            obj.value_gradient(&s.x, grad)?;
            norm(grad) <= tol
        }
        StoppingRule::Never => false,
    })
}

fn drive<O, F>(
    s0: &ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    stop: &StoppingRule,
    max_steps: usize,
    mut after_step: F,
) -> Result<RunOutcome>
where
    O: Objective + ?Sized,
    F: FnMut(usize, &ExtendedState, bool) -> Result<()>,
{
    check_dim(obj.dim(), s0.x.len())?;
    check_dim(obj.dim(), s0.p.len())?;
    if let StoppingRule::DistanceToMinimizer { .. } = stop {
        let x_star = obj.minimizer().ok_or(Error::MissingMinimizer)?;
        check_dim(obj.dim(), x_star.len())?;
    }
    let mut integ = Integrator::new(obj, cfg.clone())?;
    let mut s = s0.clone();
    let mut grad = vec![0.0; obj.dim()];
    let finish = |status, iterations, s: ExtendedState, integ: &Integrator<'_, O>| RunOutcome {
        iterations,
        status,
        final_state: s,
        gradient_evaluations: integ.gradient_evaluations(),
    };

    if stop_fired(stop, &s, obj, &mut grad)? {
        after_step(0, &s, true)?;
        return Ok(finish(RunStatus::Converged, 0, s, &integ));
    }
    after_step(0, &s, false)?;
    for n in 1..=max_steps {
        integ.step(&mut s)?;
        if !s.is_finite() {
            return Ok(finish(RunStatus::Diverged { step: n }, n, s, &integ));
        }
        let converged = stop_fired(stop, &s, obj, &mut grad)?;
        after_step(n, &s, converged || n == max_steps)?;
        if converged {
            return Ok(finish(RunStatus::Converged, n, s, &integ));
        }
    }
    Ok(finish(RunStatus::MaxSteps, max_steps, s, &integ))
}

/// Steps until `stop` fires or `max_steps` is reached, without recording.
pub fn run<O: Objective + ?Sized>(
    s0: &ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    stop: &StoppingRule,
    max_steps: usize,
) -> Result<RunOutcome> {
    drive(s0, obj, cfg, stop, max_steps, |_, _, _| Ok(()))
}

/// Like [`run`], but records observables every `stride` steps (default per
/// [`default_stride`]) and always at the final state.
pub fn integrate<O: Objective + ?Sized>(
    s0: &ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    stop: &StoppingRule,
    max_steps: usize,
    stride: Option<usize>,
) -> Result<Trace> {
    let stride = stride.unwrap_or_else(|| default_stride(obj.dim()));
    if stride == 0 {
        return Err(Error::InvalidParameter("trace stride must be >= 1".into()));
    }
    let mut records = Vec::new();
    let mut grad = vec![0.0; obj.dim()];
    let mu = cfg.params.mu;
    let outcome = drive(s0, obj, cfg, stop, max_steps, |n, s, last| {
        if n % stride == 0 || last {
            records.push(record(s, n, cfg.dt, obj, mu, &mut grad)?);
        }
        Ok(())
    })?;
    if let RunStatus::Diverged { .. } = outcome.status {
        // Record the offending state as-is; observables may be non-finite.
        let s = &outcome.final_state;
        let f = obj.value(&s.x).unwrap_or(f64::NAN);
        records.push(TraceRecord {
            step: outcome.iterations,
            time: outcome.iterations as f64 * cfg.dt,
            x: s.x.clone(),
            p: s.p.clone(),
            xi: s.xi,
            f,
            grad_norm: f64::NAN,
            h_tilde: f64::NAN,
            g: f64::NAN,
        });
    }
    Ok(Trace {
        records,
        stride,
        iterations: outcome.iterations,
        status: outcome.status,
        final_state: outcome.final_state,
        gradient_evaluations: outcome.gradient_evaluations,
        lyapunov_centered: obj.min_value().is_some(),
    })
}
