//! Splitting integrators for the dissipative dynamics and the Langevin
//! initializer, plus the stepping loop that records traces.

mod run;
mod schemes;
mod substeps;

pub use run::{
    default_stride, integrate, run, RunOutcome, RunStatus, StoppingRule, Trace, TraceRecord,
};
pub use schemes::{
    adam_step, baoab_step, cdba_step, fad_alt_step, fad_step, ldhd_step, ForceCache, Integrator,
    SchemeConfig, SchemeKind, ADAM_COMPOSITION, DEFAULT_ADAM_EPS, DEFAULT_MTS_SUBSTEPS,
    RNG_ALGORITHM,
};
pub use substeps::{
    step_a, step_b, step_c_implicit, step_c_leapfrog, step_cprime_exact, step_cprime_mts, step_d,
    step_o,
};
