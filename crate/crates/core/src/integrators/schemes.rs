//! Full one-step maps built from the sub-steps.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::substeps::{
    step_a, step_b, step_c_implicit, step_c_leapfrog, step_cprime_exact, step_cprime_mts, step_d,
    step_o,
};
use crate::dynamics::{Coupling, DynamicsParams, ExtendedState};
use crate::error::{check_dim, Error, Result};
use crate::potentials::Objective;

/// Identifier of the random stream used by the Langevin initializer.
pub const RNG_ALGORITHM: &str =
    "xoshiro256++ seeded via splitmix64 (rand_xoshiro 0.6); normals by ziggurat (rand_distr 0.4 StandardNormal)";

/// Composition order of the ODE-Adam splitting (first-order Lie composition).
pub const ADAM_COMPOSITION: &str = "C,D,B,A";

pub const DEFAULT_MTS_SUBSTEPS: usize = 16;
pub const DEFAULT_ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// B A D A B for linearly dissipated Hamiltonian dynamics.
    LdhdBadab,
    /// D A B C B A D for friction-adaptive descent.
    FadDabcbad,
    /// D' A B C' B A D' with a multiple-time-stepping C'.
    FadAltCprime,
    /// First-order C' D' B A analysis scheme.
    FadCdba,
    /// ODE form of Adam, Lie splitting C D B A.
    AdamOde,
    /// B A O A B Langevin dynamics.
    Baoab,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::LdhdBadab,
        SchemeKind::FadDabcbad,
        SchemeKind::FadAltCprime,
        SchemeKind::FadCdba,
        SchemeKind::AdamOde,
        SchemeKind::Baoab,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::LdhdBadab => "ldhd-badab",
            SchemeKind::FadDabcbad => "fad-dabcbad",
            SchemeKind::FadAltCprime => "fad-alt-cprime",
            SchemeKind::FadCdba => "fad-cdba",
            SchemeKind::AdamOde => "adam-ode",
            SchemeKind::Baoab => "baoab",
        }
    }

    /// Schemes that evolve the adaptive friction `xi`.
    pub fn is_fad(&self) -> bool {
        matches!(
            self,
            SchemeKind::FadDabcbad | SchemeKind::FadAltCprime | SchemeKind::FadCdba
        )
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme {s:?}")))
    }
}

/// Integrator selection and parameters.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub params: DynamicsParams,
    pub coupling: Coupling,
    pub mts_substeps: usize,
    pub adam_eps: f64,
    pub beta_inv: f64,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, dt: f64, params: DynamicsParams, coupling: Coupling) -> Self {
        Self {
            scheme,
            dt,
            params,
            coupling,
            mts_substeps: DEFAULT_MTS_SUBSTEPS,
            adam_eps: DEFAULT_ADAM_EPS,
            beta_inv: 0.0,
            seed: 0,
        }
    }

    pub fn ldhd(dt: f64, gamma: f64) -> Self {
        Self::new(
            SchemeKind::LdhdBadab,
            dt,
            DynamicsParams {
                gamma,
                ..DynamicsParams::default()
            },
            Coupling::Identity,
        )
    }

    pub fn kfad(dt: f64, gamma: f64, alpha: f64, mu: f64) -> Self {
        Self::new(
            SchemeKind::FadDabcbad,
            dt,
            DynamicsParams { gamma, alpha, mu },
            Coupling::Identity,
        )
    }

    pub fn with_scheme(mut self, scheme: SchemeKind) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_mts_substeps(mut self, n: usize) -> Self {
        self.mts_substeps = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if self.mts_substeps < 1 {
            return Err(Error::InvalidParameter("mts substeps must be >= 1".into()));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "adam eps must be > 0, got {}",
                self.adam_eps
            )));
        }
        if !(self.beta_inv >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta^-1 must be >= 0, got {}",
                self.beta_inv
            )));
        }
        // Custom couplings can only be checked at a concrete x.
        if self.scheme == SchemeKind::FadAltCprime && self.coupling.is_builtin() {
            self.coupling.projector_form(&[])?;
        }
        self.params.validate()
    }
}

/// Holds the force at the most recently evaluated position so consecutive
/// sub-steps at an unchanged `x` share one gradient evaluation.
#[derive(Debug, Clone, Default)]
pub struct ForceCache {
    x: Vec<f64>,
    force: Vec<f64>,
    energy: f64,
    valid: bool,
    evaluations: usize,
}

impl ForceCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh<O: Objective + ?Sized>(&mut self, obj: &O, x: &[f64]) -> Result<()> {
        if self.valid && self.x == x {
            return Ok(());
        }
        self.force.resize(x.len(), 0.0);
        self.energy = obj.value_gradient(x, &mut self.force)?;
        self.force.iter_mut().for_each(|g| *g = -*g);
        self.x.clear();
        self.x.extend_from_slice(x);
        self.valid = true;
        self.evaluations += 1;
        Ok(())
    }

    /// `F(x) = -grad f(x)`, evaluated only when `x` differs from the cached point.
    pub fn force<O: Objective + ?Sized>(&mut self, obj: &O, x: &[f64]) -> Result<&[f64]> {
        self.refresh(obj, x)?;
        Ok(&self.force)
    }

    pub fn energy<O: Objective + ?Sized>(&mut self, obj: &O, x: &[f64]) -> Result<f64> {
        self.refresh(obj, x)?;
        Ok(self.energy)
    }

    /// Number of gradient evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn invalidate(&mut self) {
        self.valid = false;
    }
}

fn check_state<O: Objective + ?Sized>(s: &ExtendedState, obj: &O) -> Result<()> {
    check_dim(obj.dim(), s.x.len())?;
    check_dim(obj.dim(), s.p.len())
}

/// `B(dt/2) A(dt/2) D(dt) A(dt/2) B(dt/2)`.
pub fn ldhd_step<O: Objective + ?Sized>(
    s: &mut ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    let h = 0.5 * cfg.dt;
    step_b(s, cache.force(obj, &s.x)?, h);
    step_a(s, h);
    step_d(s, cfg.params.gamma, cfg.dt, false, 0.0);
    step_a(s, h);
    step_b(s, cache.force(obj, &s.x)?, h);
    Ok(())
}

/// C step at a frozen position: closed-form leapfrog for built-in couplings,
/// linearly implicit otherwise.
fn c_step(s: &mut ExtendedState, cfg: &SchemeConfig, force: &[f64]) -> Result<()> {
    let DynamicsParams { alpha, mu, .. } = cfg.params;
    if cfg.coupling.is_builtin() {
        step_c_leapfrog(s, &cfg.coupling, force, cfg.dt, alpha, mu)
    } else {
        let a = cfg.coupling.matrix(&s.x, force);
        step_c_implicit(s, &a, cfg.dt, alpha, mu)
    }
}

/// `D(dt/2) A(dt/2) B(dt/2) C(dt) B(dt/2) A(dt/2) D(dt/2)`.
pub fn fad_step<O: Objective + ?Sized>(
    s: &mut ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    let h = 0.5 * cfg.dt;
    let gamma = cfg.params.gamma;
    step_d(s, gamma, h, false, 0.0);
    step_a(s, h);
    let force = cache.force(obj, &s.x)?;
    step_b(s, force, h);
    c_step(s, cfg, force)?;
    step_b(s, force, h);
    step_a(s, h);
    step_d(s, gamma, h, false, 0.0);
    Ok(())
}

/// `D'(dt/2) A(dt/2) B(dt/2) C'(dt) B(dt/2) A(dt/2) D'(dt/2)`.
pub fn fad_alt_step<O: Objective + ?Sized>(
    s: &mut ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    let h = 0.5 * cfg.dt;
    let DynamicsParams { gamma, alpha, mu } = cfg.params;
    step_d(s, gamma, h, true, alpha);
    step_a(s, h);
    let force = cache.force(obj, &s.x)?;
    step_b(s, force, h);
    step_cprime_mts(s, &cfg.coupling, force, cfg.dt, mu, cfg.mts_substeps)?;
    step_b(s, force, h);
    step_a(s, h);
    step_d(s, gamma, h, true, alpha);
    Ok(())
}

/// First-order C' D' B A scheme.
///
/// The C' part rotates `p` by `exp(-A xi dt)` and re-adjusts `xi` so that
/// `|p|^2 + mu xi^2` is preserved exactly.
pub fn cdba_step<O: Objective + ?Sized>(
    s: &mut ExtendedState,
    obj: &O,
    cfg: &SchemeConfig,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    if s.xi < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "the C'D'BA scheme needs xi >= 0, got {}",
            s.xi
        )));
    }
    let DynamicsParams { gamma, alpha, mu } = cfg.params;
    let dt = cfg.dt;
    let force = cache.force(obj, &s.x)?;
    step_cprime_exact(s, &cfg.coupling, force, dt, mu);
    step_d(s, gamma, dt, false, 0.0);
    s.xi *= (-alpha * dt).exp();
    step_b(s, force, dt);
    step_a(s, dt);
    Ok(())
}

/// One step of the ODE-Adam splitting in the order C, D, B, A (full steps).
///
/// `zeta` holds the running second-moment estimate, one entry per coordinate.
pub fn adam_step<O: Objective + ?Sized>(
    s: &mut ExtendedState,
    zeta: &mut [f64],
    obj: &O,
    cfg: &SchemeConfig,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    check_dim(s.dim(), zeta.len())?;
    let dt = cfg.dt;
    let DynamicsParams { gamma, alpha, .. } = cfg.params;
    let force = cache.force(obj, &s.x)?;
    let decay = (-alpha * dt).exp();
    let weight = crate::linalg::relaxation_weight(alpha, dt);
    for (z, f) in zeta.iter_mut().zip(force) {
        *z = decay * *z + f * f * weight;
    }
    step_d(s, gamma, dt, false, 0.0);
    step_b(s, force, dt);
    for ((x, p), z) in s.x.iter_mut().zip(&s.p).zip(zeta.iter()) {
        *x += dt * p / (z.sqrt() + cfg.adam_eps);
    }
    Ok(())
}

/// `B(dt/2) A(dt/2) O(dt) A(dt/2) B(dt/2)`; `xi` is left untouched.
#[allow(clippy::too_many_arguments)]
pub fn baoab_step<O: Objective + ?Sized, R: rand::Rng + ?Sized>(
    s: &mut ExtendedState,
    obj: &O,
    gamma: f64,
    beta_inv: f64,
    dt: f64,
    rng: &mut R,
    cache: &mut ForceCache,
) -> Result<()> {
    check_state(s, obj)?;
    let h = 0.5 * dt;
    step_b(s, cache.force(obj, &s.x)?, h);
    step_a(s, h);
    step_o(s, gamma, beta_inv, dt, rng);
    step_a(s, h);
    step_b(s, cache.force(obj, &s.x)?, h);
    Ok(())
}

/// Owns the per-run scratch state (force cache, Adam moments, RNG) and
/// dispatches on the configured scheme.
pub struct Integrator<'o, O: Objective + ?Sized> {
    obj: &'o O,
    cfg: SchemeConfig,
    cache: ForceCache,
    zeta: Vec<f64>,
    rng: Xoshiro256PlusPlus,
}

impl<'o, O: Objective + ?Sized> Integrator<'o, O> {
    pub fn new(obj: &'o O, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
        Ok(Self {
            zeta: vec![0.0; obj.dim()],
            obj,
            cfg,
            cache: ForceCache::new(),
            rng,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn objective(&self) -> &'o O {
        self.obj
    }

    /// Adam second-moment estimate (all zeros for other schemes).
    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn gradient_evaluations(&self) -> usize {
        self.cache.evaluations()
    }

    pub fn step(&mut self, s: &mut ExtendedState) -> Result<()> {
        let cfg = &self.cfg;
        match cfg.scheme {
            SchemeKind::LdhdBadab => ldhd_step(s, self.obj, cfg, &mut self.cache),
            SchemeKind::FadDabcbad => fad_step(s, self.obj, cfg, &mut self.cache),
            SchemeKind::FadAltCprime => fad_alt_step(s, self.obj, cfg, &mut self.cache),
            SchemeKind::FadCdba => cdba_step(s, self.obj, cfg, &mut self.cache),
            SchemeKind::AdamOde => adam_step(s, &mut self.zeta, self.obj, cfg, &mut self.cache),
            SchemeKind::Baoab => baoab_step(
                s,
                self.obj,
                cfg.params.gamma,
                cfg.beta_inv,
                cfg.dt,
                &mut self.rng,
                &mut self.cache,
            ),
        }
    }
}
