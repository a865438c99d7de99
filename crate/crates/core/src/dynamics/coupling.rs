//! Coupling matrices `A(x)` between momenta and the adaptive friction.
//!
//! Built-in couplings all have the form `A = l1 I + k Pi`, where `Pi` is the
//! orthogonal projector onto the force direction. They are applied
//! matrix-free through [`LowRank`]; only [`Coupling::Custom`] materializes a
//! dense matrix.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm_sq};

/// Below this force norm the force-direction projector is taken to be zero.
pub const DEGENERATE_FORCE_NORM: f64 = 1e-14;

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
pub struct CustomCoupling {
    pub name: String,
    matrix_at: Arc<MatrixFn>,
}

impl CustomCoupling {
    pub fn new(
        name: impl Into<String>,
        matrix_at: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            matrix_at: Arc::new(matrix_at),
        }
    }

    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        (self.matrix_at)(x)
    }
}

/// Selects the friction-adaptive variant.
#[derive(Clone)]
pub enum Coupling {
    /// `A = I` (kinetic coupling).
    Identity,
    /// `A = F F^T` with `F = -grad f`.
    ForceOuter,
    /// `A = l1 I + l2 Pi^F` (normalized) or `l1 I + l2 F F^T` (raw).
    Mixture {
        lambda1: f64,
        lambda2: f64,
        normalized: bool,
    },
    /// User-supplied symmetric matrix field.
    Custom(CustomCoupling),
}

impl fmt::Debug for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Identity => write!(f, "Identity"),
            Coupling::ForceOuter => write!(f, "ForceOuter"),
            Coupling::Mixture {
                lambda1,
                lambda2,
                normalized,
            } => f
                .debug_struct("Mixture")
                .field("lambda1", lambda1)
                .field("lambda2", lambda2)
                .field("normalized", normalized)
                .finish(),
            Coupling::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl Serialize for Coupling {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            Coupling::Identity => map.serialize_entry("kind", "identity")?,
            Coupling::ForceOuter => map.serialize_entry("kind", "force-outer")?,
            Coupling::Mixture {
                lambda1,
                lambda2,
                normalized,
            } => {
                map.serialize_entry("kind", "projective-mixture")?;
                map.serialize_entry("lambda1", lambda1)?;
                map.serialize_entry("lambda2", lambda2)?;
                map.serialize_entry("normalized", normalized)?;
            }
            Coupling::Custom(c) => {
                map.serialize_entry("kind", "custom")?;
                map.serialize_entry("name", &c.name)?;
            }
        }
        map.end()
    }
}

impl Coupling {
    pub fn mixture(lambda1: f64, lambda2: f64, normalized: bool) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must be >= 0, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(Coupling::Mixture {
            lambda1,
            lambda2,
            normalized,
        })
    }

    pub fn custom(
        name: impl Into<String>,
        matrix_at: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Coupling::Custom(CustomCoupling::new(name, matrix_at))
    }

    /// True when every built-in sub-step can use the rank-one closed forms.
    pub fn is_builtin(&self) -> bool {
        !matches!(self, Coupling::Custom(_))
    }

    /// Whether `A` depends on the force (and hence on `x` through `F(x)`).
    pub fn needs_force(&self) -> bool {
        match self {
            Coupling::Identity => false,
            Coupling::ForceOuter | Coupling::Custom(_) => true,
            Coupling::Mixture { lambda2, .. } => *lambda2 != 0.0,
        }
    }

    /// Matrix-free view of a built-in coupling at force `F`.
    pub fn low_rank<'a>(&self, force: &'a [f64]) -> Option<LowRank<'a>> {
        let f2 = norm_sq(force);
        let live = f2.sqrt() >= DEGENERATE_FORCE_NORM;
        let (lambda1, kappa) = match *self {
            Coupling::Identity => (1.0, 0.0),
            Coupling::ForceOuter => (0.0, f2),
            Coupling::Mixture {
                lambda1,
                lambda2,
                normalized: true,
            } => (lambda1, lambda2),
            Coupling::Mixture {
                lambda1,
                lambda2,
                normalized: false,
            } => (lambda1, lambda2 * f2),
            Coupling::Custom(_) => return None,
        };
        Some(LowRank {
            lambda1,
            kappa: if live { kappa } else { 0.0 },
            force,
            f2: if live { f2 } else { 0.0 },
        })
    }

    /// Dense `A(x)`; used by the implicit C step and by custom couplings.
    pub fn matrix(&self, x: &[f64], force: &[f64]) -> DMatrix<f64> {
        match self {
            Coupling::Custom(c) => c.matrix_at(x),
            _ => {
                let lr = self.low_rank(force).expect("built-in coupling");
                let d = force.len();
                let mut a = DMatrix::identity(d, d) * lr.lambda1;
                if lr.kappa != 0.0 {
                    let f = DVector::from_column_slice(force);
                    a += (&f * f.transpose()) * (lr.kappa / lr.f2);
                }
                a
            }
        }
    }

    /// `A(x) v`, computed matrix-free for built-in kinds.
    pub fn apply(&self, x: &[f64], force: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), force.len())?;
        check_dim(x.len(), v.len())?;
        match self.low_rank(force) {
            Some(lr) => {
                let mut out = vec![0.0; v.len()];
                lr.apply(v, &mut out);
                Ok(out)
            }
            None => {
                let a = self.matrix(x, force);
                check_dim(v.len(), a.nrows())?;
                Ok((a * DVector::from_column_slice(v)).as_slice().to_vec())
            }
        }
    }

    /// `v^T A(x) v`.
    pub fn quadratic_form(&self, x: &[f64], force: &[f64], v: &[f64]) -> Result<f64> {
        match self.low_rank(force) {
            Some(lr) => Ok(lr.quadratic_form(v)),
            None => Ok(dot(v, &self.apply(x, force, v)?)),
        }
    }

    /// Projector structure required by the multiple-time-stepping C' step.
    pub fn projector_form(&self, x: &[f64]) -> Result<ProjectorForm> {
        let unsupported = || {
            Error::UnsupportedScheme(format!(
                "the C' sub-step needs A = I or a projector (A^2 = A); coupling {self:?} is not one, use the linearly implicit C step instead"
            ))
        };
        match *self {
            Coupling::Identity => Ok(ProjectorForm::Identity),
            Coupling::Mixture {
                lambda1,
                lambda2,
                normalized,
            } => {
                if lambda2 == 0.0 && lambda1 == 1.0 {
                    Ok(ProjectorForm::Identity)
                } else if lambda2 == 0.0 && lambda1 == 0.0 {
                    Ok(ProjectorForm::Zero)
                } else if lambda1 == 0.0 && lambda2 == 1.0 && normalized {
                    Ok(ProjectorForm::ForceDirection)
                } else {
                    Err(unsupported())
                }
            }
            Coupling::ForceOuter => Err(unsupported()),
            Coupling::Custom(ref c) => {
                let a = c.matrix_at(x);
                let scale = a.amax().max(1.0);
                if (&a * &a - &a).amax() <= 1e-10 * scale {
                    Ok(ProjectorForm::Dense(a))
                } else {
                    Err(unsupported())
                }
            }
        }
    }
}

/// `A = lambda1 I + kappa Pi`, `Pi = F F^T / |F|^2` (zero when `F` vanishes).
#[derive(Debug, Clone, Copy)]
pub struct LowRank<'a> {
    pub lambda1: f64,
    pub kappa: f64,
    force: &'a [f64],
    f2: f64,
}

impl LowRank<'_> {
    /// Component of `v` along the force, `(F . v) / |F|^2`; zero when degenerate.
    #[inline]
    fn along(&self, v: &[f64]) -> f64 {
        if self.kappa == 0.0 {
            0.0
        } else {
            dot(self.force, v) / self.f2
        }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let c = self.kappa * self.along(v);
        for ((o, vi), fi) in out.iter_mut().zip(v).zip(self.force) {
            *o = self.lambda1 * vi + c * fi;
        }
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let par = if self.kappa == 0.0 {
            0.0
        } else {
            dot(self.force, v).powi(2) / self.f2
        };
        self.lambda1 * norm_sq(v) + self.kappa * par
    }

    /// `v <- exp(tau A) v` via the rank-one exponential `exp(t Pi) = I + (e^t - 1) Pi`.
    pub fn exp_apply(&self, tau: f64, v: &mut [f64]) {
        let c = (tau * self.kappa).exp_m1() * self.along(v);
        let s = (tau * self.lambda1).exp();
        for (vi, fi) in v.iter_mut().zip(self.force) {
            *vi = s * (*vi + c * fi);
        }
    }

    /// `p^T (I - exp(-2 tau A)) p`, evaluated without cancellation.
    pub fn one_minus_exp_quad(&self, tau: f64, p: &[f64]) -> f64 {
        let total = norm_sq(p);
        let par = if self.kappa == 0.0 {
            0.0
        } else {
            (dot(self.force, p).powi(2) / self.f2).min(total)
        };
        let perp = (total - par).max(0.0);
        perp * -(-2.0 * tau * self.lambda1).exp_m1()
            + par * -(-2.0 * tau * (self.lambda1 + self.kappa)).exp_m1()
    }
}

/// Projector-valued couplings accepted by the C' sub-step.
#[derive(Debug, Clone)]
pub enum ProjectorForm {
    Identity,
    Zero,
    ForceDirection,
    Dense(DMatrix<f64>),
}

impl ProjectorForm {
    /// `omega = p^T A p`.
    pub fn omega(&self, force: &[f64], p: &[f64]) -> f64 {
        match self {
            ProjectorForm::Identity => norm_sq(p),
            ProjectorForm::Zero => 0.0,
            ProjectorForm::ForceDirection => {
                let f2 = norm_sq(force);
                if f2.sqrt() < DEGENERATE_FORCE_NORM {
                    0.0
                } else {
                    dot(force, p).powi(2) / f2
                }
            }
            ProjectorForm::Dense(a) => {
                let v = DVector::from_column_slice(p);
                v.dot(&(a * &v))
            }
        }
    }

    /// `p <- exp(eta A) p = p + (e^eta - 1) A p` for a projector `A`.
    pub fn exp_apply(&self, eta: f64, force: &[f64], p: &mut [f64]) {
        match self {
            ProjectorForm::Identity => {
                let s = eta.exp();
                p.iter_mut().for_each(|v| *v *= s);
            }
            ProjectorForm::Zero => {}
            ProjectorForm::ForceDirection => {
                let f2 = norm_sq(force);
                if f2.sqrt() >= DEGENERATE_FORCE_NORM {
                    let c = eta.exp_m1() * dot(force, p) / f2;
                    for (pi, fi) in p.iter_mut().zip(force) {
                        *pi += c * fi;
                    }
                }
            }
            ProjectorForm::Dense(a) => {
                let ap = a * DVector::from_column_slice(p);
                let c = eta.exp_m1();
                for (pi, api) in p.iter_mut().zip(ap.iter()) {
                    *pi += c * api;
                }
            }
        }
    }
}
