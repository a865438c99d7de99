use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, DynamicsParams, ExtendedState};
use crate::error::{Error, Result};
use crate::integrators::{Integrator, SchemeConfig, SchemeKind};
use crate::linalg::distance;
use crate::potentials::Objective;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderPoint {
    pub dt: f64,
    pub global_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub points: Vec<OrderPoint>,
    pub observed_order: f64,
    /// How the reference solution was produced.
    pub reference: String,
}

fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    let n = t_end / dt;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "step {dt} does not divide the horizon {t_end}"
        )));
    }
    Ok(rounded as usize)
}

fn advance<O: Objective + ?Sized>(
    s0: &ExtendedState,
    obj: &O,
    cfg: SchemeConfig,
    steps: usize,
) -> Result<ExtendedState> {
    let mut integ = Integrator::new(obj, cfg)?;
    let mut s = s0.clone();
    for _ in 0..steps {
        integ.step(&mut s)?;
    }
    Ok(s)
}

fn state_error(a: &ExtendedState, b: &ExtendedState, with_xi: bool) -> f64 {
    let dx = distance(&a.x, &b.x);
    let dp = distance(&a.p, &b.p);
    let dxi = if with_xi { (a.xi - b.xi).abs() } else { 0.0 };
    (dx * dx + dp * dp + dxi * dxi).sqrt()
}

/// Reference configuration for an order study.
///
/// Projector-compatible FAD and LDHD runs use the multiple-time-stepping
/// scheme with 1024 inner steps at `dt_min / 16`; LDHD is recovered with the
/// zero coupling. Other cases fall back to the scheme itself at a finer step
/// (`/16` for symmetric schemes, `/64` for the first-order Adam splitting).
fn reference_config(cfg: &SchemeConfig, dt_min: f64) -> (SchemeConfig, String) {
    let coupling = match cfg.scheme {
        SchemeKind::LdhdBadab => Some(Coupling::Mixture {
            lambda1: 0.0,
            lambda2: 0.0,
            normalized: true,
        }),
        SchemeKind::FadDabcbad | SchemeKind::FadAltCprime => match &cfg.coupling {
            Coupling::Identity => Some(Coupling::Identity),
            c @ Coupling::Mixture {
                lambda1,
                lambda2,
                normalized,
            } if (*lambda1 == 0.0 && *lambda2 == 0.0)
                || (*lambda1 == 1.0 && *lambda2 == 0.0)
                || (*lambda1 == 0.0 && *lambda2 == 1.0 && *normalized) =>
            {
                Some(c.clone())
            }
            _ => None,
        },
        _ => None,
    };
    match coupling {
        Some(c) => {
            let mut r = cfg
                .clone()
                .with_scheme(SchemeKind::FadAltCprime)
                .with_coupling(c);
            r.dt = dt_min / 16.0;
            r.mts_substeps = 1024;
            let desc = format!("fad-alt-cprime, mts 1024, dt {}", r.dt);
            (r, desc)
        }
        None => {
            let factor = if cfg.scheme == SchemeKind::AdamOde {
                64.0
            } else {
                16.0
            };
            let mut r = cfg.clone();
            r.dt = dt_min / factor;
            let desc = format!("{} at dt {}", r.scheme, r.dt);
            (r, desc)
        }
    }
}

/// Global error at `t_end` for each step in `dts` and the mean observed order.
pub fn measure_order<O: Objective + ?Sized>(
    cfg: &SchemeConfig,
    obj: &O,
    s0: &ExtendedState,
    t_end: f64,
    dts: &[f64],
) -> Result<OrderStudy> {
    if dts.len() < 2 {
        return Err(Error::InvalidParameter(
            "order study needs at least two steps".into(),
        ));
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "step list must be strictly decreasing".into(),
        ));
    }
    if cfg.scheme == SchemeKind::Baoab {
        return Err(Error::UnsupportedScheme(
            "order studies are deterministic only".into(),
        ));
    }
    let dt_min = dts[dts.len() - 1];
    let (ref_cfg, reference) = reference_config(cfg, dt_min);
    let reference_state = advance(s0, obj, ref_cfg.clone(), steps_for(t_end, ref_cfg.dt)?)?;
    let with_xi = cfg.scheme.is_fad();
    let mut points = Vec::with_capacity(dts.len());
    for &dt in dts {
        let mut c = cfg.clone();
        c.dt = dt;
        let s = advance(s0, obj, c, steps_for(t_end, dt)?)?;
        points.push(OrderPoint {
            dt,
            global_error: state_error(&s, &reference_state, with_xi),
        });
    }
    let orders: Vec<f64> = points
        .windows(2)
        .map(|w| (w[0].global_error / w[1].global_error).ln() / (w[0].dt / w[1].dt).ln())
        .collect();
    let observed_order = orders.iter().sum::<f64>() / orders.len() as f64;
    Ok(OrderStudy {
        points,
        observed_order,
        reference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub alpha: f64,
    pub sup_deviation: f64,
}

/// `sup_{t <= t_end} |x_FAD(t) - x_LDHD(t)|` for KFAD runs at each `alpha`.
///
/// Requires `alpha * dt <= 0.1` so the stiff `xi` relaxation stays resolved.
pub fn ldhd_limit_deviation<O: Objective + ?Sized>(
    obj: &O,
    s0: &ExtendedState,
    alphas: &[f64],
    mu: f64,
    gamma: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<LimitPoint>> {
    let steps = steps_for(t_end, dt)?;
    let ldhd_cfg = SchemeConfig::ldhd(dt, gamma);
    let mut ldhd = Integrator::new(obj, ldhd_cfg)?;
    let mut s = s0.clone();
    let mut ldhd_path = Vec::with_capacity(steps + 1);
    ldhd_path.push(s.x.clone());
    for _ in 0..steps {
        ldhd.step(&mut s)?;
        ldhd_path.push(s.x.clone());
    }
    alphas
        .iter()
        .map(|&alpha| {
            if alpha * dt > 0.1 {
                return Err(Error::InvalidParameter(format!(
                    "alpha * dt = {} exceeds 0.1; reduce dt",
                    alpha * dt
                )));
            }
            let params = DynamicsParams::new(gamma, alpha, mu)?;
            let cfg = SchemeConfig::new(SchemeKind::FadDabcbad, dt, params, Coupling::Identity);
            let mut fad = Integrator::new(obj, cfg)?;
            let mut s = s0.clone();
            let mut sup = distance(&s.x, &ldhd_path[0]);
            for x_ref in &ldhd_path[1..] {
                fad.step(&mut s)?;
                sup = sup.max(distance(&s.x, x_ref));
            }
            Ok(LimitPoint {
                alpha,
                sup_deviation: sup,
            })
        })
        .collect()
}
