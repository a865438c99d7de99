//! Verification suites behind `fadopt check`.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use super::Suite;
use crate::diagnostics::{
    check_monotone, fit_rate, ldhd_limit_deviation, measure_order, Functional,
};
use crate::dynamics::{Coupling, DynamicsParams, ExtendedState};
use crate::error::Result;
use crate::experiments::{default_fixture_dir, ClusterSystem};
use crate::integrators::{
    integrate, step_cprime_exact, step_cprime_mts, SchemeConfig, SchemeKind, StoppingRule,
    DEFAULT_MTS_SUBSTEPS,
};
use crate::linalg::norm_sq;
use crate::potentials::xyz::read_xyz;
use crate::potentials::{fd_gradient_check, simple_cubic_lattice, Harmonic, Objective, Rosenbrock};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub criterion: String,
    pub pass: bool,
}

fn row(
    suite: &'static str,
    name: impl Into<String>,
    value: f64,
    criterion: &str,
    pass: bool,
) -> CheckRow {
    CheckRow {
        suite,
        name: name.into(),
        value,
        criterion: criterion.to_string(),
        pass,
    }
}

pub fn run_suite(s: Suite) -> Result<Vec<CheckRow>> {
    match s {
        Suite::Grad => grad(),
        Suite::Order => order(),
        Suite::Lyapunov => lyapunov(),
        Suite::Limit => limit(),
        Suite::Invariant => invariant(),
        Suite::All => {
            let mut rows = Vec::new();
            for s in [
                Suite::Grad,
                Suite::Order,
                Suite::Lyapunov,
                Suite::Limit,
                Suite::Invariant,
            ] {
                rows.extend(run_suite(s)?);
            }
            Ok(rows)
        }
    }
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:<10} {:<w$} {:>13}  {:<22} result\n",
        "suite", "name", "value", "criterion"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:<w$} {:>13.6e}  {:<22} {}\n",
            r.suite,
            r.name,
            r.value,
            r.criterion,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}

fn jitter(q: &[f64], amp: f64, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    q.iter()
        .map(|v| v + amp * (2.0 * rng.gen::<f64>() - 1.0))
        .collect()
}

fn grad() -> Result<Vec<CheckRow>> {
    const TOL: f64 = 1e-5;
    let crit = "max rel err < 1e-5";
    let mut rows = Vec::new();
    let mut push = |name: String, obj: &dyn Objective, x: &[f64]| -> Result<()> {
        let e = fd_gradient_check(obj, x, 1e-6)?;
        rows.push(row("grad", name, e, crit, e < TOL));
        Ok(())
    };
    let h = Harmonic::diagonal(&[1.0, 10.0])?;
    for x in [[1.0, 2.0], [-0.7, 0.3]] {
        push(format!("harmonic {x:?}"), &h, &x)?;
    }
    let r = Rosenbrock::default();
    for x in [[1.0, 2.0], [-1.2, 1.0], [0.3, -0.4]] {
        push(format!("rosenbrock {x:?}"), &r, &x)?;
    }
    for system in [ClusterSystem::Lj38, ClusterSystem::Lj75] {
        let obj = system.objective()?;
        let name = system.fixture_name().expect("LJ fixture");
        let q = read_xyz(&default_fixture_dir().join(name))?.coords;
        push(
            format!("{} perturbed", system.name()),
            &obj,
            &jitter(&q, 0.05, 1),
        )?;
    }
    let morse = ClusterSystem::Morse64.objective()?;
    let q = jitter(&simple_cubic_lattice(4, 1.0), 0.05, 2);
    push("morse64 perturbed lattice".into(), &morse, &q)?;
    Ok(rows)
}

fn order() -> Result<Vec<CheckRow>> {
    let h = Harmonic::diagonal(&[1.0, 10.0])?;
    let s0 = ExtendedState::at_rest(vec![1.0, 2.0]);
    let params = DynamicsParams::new(1.0, 1.0, 1.0)?;
    let dts = [0.02, 0.01, 0.005];
    let cases = [
        (SchemeKind::LdhdBadab, 1.8, 2.2),
        (SchemeKind::FadDabcbad, 1.8, 2.2),
        (SchemeKind::FadAltCprime, 1.8, 2.2),
        (SchemeKind::AdamOde, 0.8, 1.2),
    ];
    let mut rows = Vec::new();
    for (kind, lo, hi) in cases {
        let cfg = SchemeConfig::new(kind, dts[0], params, Coupling::Identity);
        let study = measure_order(&cfg, &h, &s0, 1.0, &dts)?;
        let p = study.observed_order;
        rows.push(row(
            "order",
            kind.as_str(),
            p,
            &format!("in [{lo}, {hi}]"),
            (lo..=hi).contains(&p),
        ));
    }
    Ok(rows)
}

fn lyapunov() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let params = DynamicsParams::new(1.0, 1.0, 1.0)?;
    let cfg = SchemeConfig::new(SchemeKind::FadDabcbad, 0.001, params, Coupling::Identity);
    let h = Harmonic::diagonal(&[1.0, 10.0])?;
    let r = Rosenbrock::default();
    let cases: [(&str, &dyn Objective, [f64; 2]); 2] = [
        ("harmonic", &h, [1.0, 2.0]),
        ("rosenbrock", &r, [-1.0, 2.0]),
    ];
    for (name, obj, x0) in cases {
        let s0 = ExtendedState::at_rest(x0.to_vec());
        let t = integrate(&s0, obj, &cfg, &StoppingRule::Never, 10_000, Some(1))?;
        let rep = check_monotone(&t, Functional::G, 1e-9, obj)?;
        rows.push(row(
            "lyapunov",
            format!("G non-increasing, kfad {name}"),
            rep.max_violation,
            "violation < 1e-9",
            rep.is_monotone(),
        ));
    }
    let cfg = SchemeConfig::new(SchemeKind::FadDabcbad, 0.01, params, Coupling::Identity);
    let s0 = ExtendedState::at_rest(vec![1.0, 2.0]);
    let t = integrate(&s0, &h, &cfg, &StoppingRule::Never, 2000, Some(1))?;
    let fit = fit_rate(&t, Functional::G, &h, None)?;
    rows.push(row(
        "lyapunov",
        "G decay rate, kfad harmonic",
        fit.kappa,
        "kappa > 0",
        fit.kappa > 0.0,
    ));
    rows.push(row(
        "lyapunov",
        "G log-linear fit r^2",
        fit.r_squared,
        "r^2 > 0.9",
        fit.r_squared > 0.9,
    ));
    Ok(rows)
}

fn limit() -> Result<Vec<CheckRow>> {
    let h = Harmonic::diagonal(&[1.0, 10.0])?;
    let s0 = ExtendedState::at_rest(vec![1.0, 2.0]);
    let pts = ldhd_limit_deviation(&h, &s0, &[1e2, 1e3, 1e4], 1.0, 1.0, 1.0, 1e-5)?;
    let mut rows: Vec<CheckRow> = pts
        .iter()
        .map(|p| {
            row(
                "limit",
                format!("sup deviation, alpha {:e}", p.alpha),
                p.sup_deviation,
                "reported",
                true,
            )
        })
        .collect();
    let decreasing = pts
        .windows(2)
        .all(|w| w[1].sup_deviation < w[0].sup_deviation);
    rows.push(row(
        "limit",
        "deviation decreasing in alpha",
        pts.last().map_or(f64::NAN, |p| p.sup_deviation),
        "strictly decreasing",
        decreasing,
    ));
    Ok(rows)
}

fn random_state(rng: &mut Xoshiro256PlusPlus, d: usize) -> Result<(ExtendedState, Vec<f64>)> {
    let mut v = || -> Vec<f64> { (0..d).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect() };
    let (x, p, force) = (v(), v(), v());
    let xi = 2.0 * rng.gen::<f64>();
    Ok((ExtendedState::new(x, p, xi)?, force))
}

/// Worst relative change of `|p|^2 + mu xi^2` over one exact C' update.
pub fn cprime_exact_drift(coupling: &Coupling, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (mu, dt) = (0.7, 0.05);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (mut s, force) = random_state(&mut rng, 4)?;
        let before = norm_sq(&s.p) + mu * s.xi * s.xi;
        step_cprime_exact(&mut s, coupling, &force, dt, mu);
        let after = norm_sq(&s.p) + mu * s.xi * s.xi;
        worst = worst.max((after - before).abs() / before.max(1.0));
    }
    Ok(worst)
}

/// Worst relative change of `omega + mu xi^2` over one multiple-time-stepping
/// C' step with `n_sub` substeps.
pub fn cprime_mts_drift(
    coupling: &Coupling,
    n_sub: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (mu, dt) = (0.7, 0.05);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (mut s, force) = random_state(&mut rng, 4)?;
        let form = coupling.projector_form(&s.x)?;
        let before = form.omega(&force, &s.p) + mu * s.xi * s.xi;
        step_cprime_mts(&mut s, coupling, &force, dt, mu, n_sub)?;
        let after = form.omega(&force, &s.p) + mu * s.xi * s.xi;
        worst = worst.max((after - before).abs() / before.max(1.0));
    }
    Ok(worst)
}

fn invariant() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let couplings = [
        ("identity", Coupling::Identity),
        ("force projector", Coupling::mixture(0.0, 1.0, true)?),
        ("ffad", Coupling::ForceOuter),
    ];
    for (name, c) in &couplings {
        let drift = cprime_exact_drift(c, 200, 11)?;
        rows.push(row(
            "invariant",
            format!("C'D'BA |p|^2 + mu xi^2, {name}"),
            drift,
            "rel change <= 1e-12",
            drift <= 1e-12,
        ));
    }
    for (name, c) in &couplings[..2] {
        let coarse = cprime_mts_drift(c, DEFAULT_MTS_SUBSTEPS, 200, 12)?;
        let fine = cprime_mts_drift(c, 16 * DEFAULT_MTS_SUBSTEPS, 200, 12)?;
        rows.push(row(
            "invariant",
            format!("MTS omega + mu xi^2 drift shrinks 16x substeps, {name}"),
            fine / coarse,
            "ratio < 1/64",
            fine < coarse / 64.0,
        ));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_marks_failures() {
        let t = format_table(&[row("grad", "x", 1.0, "c", false)]);
        assert!(t.contains("FAIL"));
    }
}
