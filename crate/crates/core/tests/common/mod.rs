//! Reference solutions that share no code with the library: plain formula
//! gradients and a classical RK4 integrator of the continuous dynamics.

#![allow(dead_code)]

/// Force `-grad f` for `f = 0.5 sum c_i x_i^2`.
pub fn harmonic_force(c: &[f64]) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |x| x.iter().zip(c).map(|(xi, ci)| -ci * xi).collect()
}

/// Force for `(1 - x)^2 + 100 (y - x^2)^2`.
pub fn rosenbrock_force(x: &[f64]) -> Vec<f64> {
    let (a, b) = (x[0], x[1]);
    vec![
        2.0 * (1.0 - a) + 400.0 * a * (b - a * a),
        -200.0 * (b - a * a),
    ]
}

/// Lennard-Jones energy `sum 4 (r^-12 - r^-6)` by a direct double loop.
pub fn lj_energy(q: &[f64]) -> f64 {
    let n = q.len() / 3;
    let mut e = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r2: f64 = (0..3).map(|k| (q[3 * i + k] - q[3 * j + k]).powi(2)).sum();
            let s6 = 1.0 / (r2 * r2 * r2);
            e += 4.0 * (s6 * s6 - s6);
        }
    }
    e
}

#[derive(Clone, Debug)]
pub struct State {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
}

/// Right-hand side with identity coupling:
/// `x' = p`, `p' = F - xi p - gamma p`, `xi' = |p|^2 / mu - alpha xi`.
fn rhs(
    s: &State,
    force: &dyn Fn(&[f64]) -> Vec<f64>,
    gamma: f64,
    alpha: f64,
    mu: f64,
    adaptive: bool,
) -> State {
    let f = force(&s.x);
    let xi = if adaptive { s.xi } else { 0.0 };
    let pp: f64 = s.p.iter().map(|v| v * v).sum();
    State {
        x: s.p.clone(),
        p: f.iter()
            .zip(&s.p)
            .map(|(fi, pi)| fi - (xi + gamma) * pi)
            .collect(),
        xi: if adaptive {
            pp / mu - alpha * s.xi
        } else {
            0.0
        },
    }
}

fn axpy(s: &State, h: f64, k: &State) -> State {
    State {
        x: s.x.iter().zip(&k.x).map(|(a, b)| a + h * b).collect(),
        p: s.p.iter().zip(&k.p).map(|(a, b)| a + h * b).collect(),
        xi: s.xi + h * k.xi,
    }
}

/// RK4 over `[0, t]` with `n` steps. `adaptive = false` freezes friction at
/// `gamma` alone (the underdamped Langevin-free limit).
pub fn rk4(
    s0: &State,
    force: &dyn Fn(&[f64]) -> Vec<f64>,
    (gamma, alpha, mu): (f64, f64, f64),
    adaptive: bool,
    t: f64,
    n: usize,
) -> State {
    let h = t / n as f64;
    let mut s = s0.clone();
    for _ in 0..n {
        let k1 = rhs(&s, force, gamma, alpha, mu, adaptive);
        let k2 = rhs(&axpy(&s, h / 2.0, &k1), force, gamma, alpha, mu, adaptive);
        let k3 = rhs(&axpy(&s, h / 2.0, &k2), force, gamma, alpha, mu, adaptive);
        let k4 = rhs(&axpy(&s, h, &k3), force, gamma, alpha, mu, adaptive);
        let mut next = s.clone();
        for i in 0..s.x.len() {
            next.x[i] += h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
            next.p[i] += h / 6.0 * (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]);
        }
        next.xi += h / 6.0 * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi);
        s = next;
    }
    s
}

/// RK4 for the frozen-position friction block `p' = -xi p`, `xi' = |p|^2 / mu`.
pub fn rk4_friction_block(p0: &[f64], xi0: f64, mu: f64, t: f64, n: usize) -> (Vec<f64>, f64) {
    let zero = |x: &[f64]| vec![0.0; x.len()];
    let s0 = State {
        x: vec![0.0; p0.len()],
        p: p0.to_vec(),
        xi: xi0,
    };
    let s = rk4(&s0, &zero, (0.0, 0.0, mu), true, t, n);
    (s.p, s.xi)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}
