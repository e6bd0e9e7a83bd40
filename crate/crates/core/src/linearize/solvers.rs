use crate::error::{Error, Result};
use crate::flow::{dopri5_trajectory, eval, StateVec, Trajectory, VectorField};
use crate::linalg::{DenseMatrix, Lu};

use super::probe::{jvp_raw, JacobianProbe};

/// Stopping rule shared by the nonlinear solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidArgument(format!(
                "solver needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
            )));
        }
        Ok(Self { tol, max_iter })
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
        }
    }
}

/// Result of an iterative solve. A non-converged run still carries its last
/// iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: StateVec,
    pub iterations: usize,
    pub converged: bool,
    /// Largest observed ratio of successive update norms (fixed-point
    /// iteration only).
    pub contraction: Option<f64>,
    /// Final residual norm `‖F(x)‖₂` (Newton only).
    pub residual: Option<f64>,
}

/// Picard iteration `x_{i+1} = K(x_i)` until `‖x_{i+1} − x_i‖₂ ≤ tol`.
pub fn fixed_point_solve(
    k: &dyn Fn(&StateVec) -> Result<StateVec>,
    x0: &StateVec,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    let mut x = x0.clone();
    let mut last_update: Option<f64> = None;
    let mut ratio: Option<f64> = None;
    for i in 1..=cfg.max_iter {
        let next = k(&x)?;
        next.check_dim(x.dim())?;
        let update = next.sub(&x).norm2();
        if let Some(prev) = last_update {
            if prev > 0.0 {
                let r = update / prev;
                ratio = Some(ratio.map_or(r, |m: f64| m.max(r)));
            }
        }
        x = next;
        if update <= cfg.tol {
            return Ok(SolveOutcome {
                x,
                iterations: i,
                converged: true,
                contraction: ratio,
                residual: None,
            });
        }
        last_update = Some(update);
    }
    Ok(SolveOutcome {
        x,
        iterations: cfg.max_iter,
        converged: false,
        contraction: ratio,
        residual: None,
    })
}

/// Dense Jacobian of `F` at `x`, one finite-difference column per unit
/// direction.
pub fn jacobian(field: &dyn VectorField, t: f64, x: &StateVec, probe: &JacobianProbe) -> DenseMatrix {
    let n = x.dim();
    let mut jac = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = jvp_raw(field, t, x.as_slice(), &e, probe);
        for (i, v) in col.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
        e[j] = 0.0;
    }
    jac
}

/// Newton's method `F'(x_i) Δx_i = −F(x_i)` with a finite-difference Jacobian,
/// stopping when `‖F(x_i)‖₂ ≤ tol`. `iterations` counts Newton updates.
pub fn newton_solve(
    field: &dyn VectorField,
    x0: &StateVec,
    cfg: &SolverConfig,
    probe: &JacobianProbe,
) -> Result<SolveOutcome> {
    let mut x = x0.clone();
    for i in 0..=cfg.max_iter {
        let f = eval(field, 0.0, &x)?;
        let res = f.norm2();
        if res <= cfg.tol {
            return Ok(SolveOutcome {
                x,
                iterations: i,
                converged: true,
                contraction: None,
                residual: Some(res),
            });
        }
        if i == cfg.max_iter {
            return Ok(SolveOutcome {
                x,
                iterations: i,
                converged: false,
                contraction: None,
                residual: Some(res),
            });
        }
        let lu = Lu::factor(&jacobian(field, 0.0, &x, probe))?;
        let rhs: Vec<f64> = f.as_slice().iter().map(|v| -v).collect();
        let dx = StateVec::new(lu.solve(&rhs))?;
        x.axpy(1.0, &dx);
    }
    unreachable!("loop returns on its last iteration")
}

/// A Hamiltonian `H(p, q)` with its partial gradients.
///
/// The default gradients are central differences of [`value`](Self::value).
pub trait Hamiltonian: Send + Sync {
    /// Number of degrees of freedom (length of `p` and of `q`).
    fn dim(&self) -> usize;

    fn value(&self, p: &[f64], q: &[f64]) -> f64;

    fn dh_dp(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        central_gradient(|x| self.value(x, q), p)
    }

    fn dh_dq(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        central_gradient(|x| self.value(p, x), q)
    }
}

fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = f64::EPSILON.cbrt() * scale;
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + eps;
            let fp = f(&y);
            y[i] = x[i] - eps;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * eps)
        })
        .collect()
}

/// Canonical equations of iteration `i` on the stacked state `[q; p]`:
/// `q̇ = ∂H/∂p(p, q_{i−1}(s))`, `ṗ = −∂H/∂q(p_{i−1}(s), q)`.
struct Staggered<'a> {
    ham: &'a dyn Hamiltonian,
    prev: &'a Trajectory,
}

impl VectorField for Staggered<'_> {
    fn dim(&self) -> usize {
        2 * self.ham.dim()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        let d = self.ham.dim();
        let lag = self.prev.at(t);
        let (q_lag, p_lag) = lag.as_slice().split_at(d);
        let (q, p) = c.split_at(d);
        out[..d].copy_from_slice(&self.ham.dh_dp(p, q_lag));
        let dq = self.ham.dh_dq(p_lag, q);
        for (o, g) in out[d..].iter_mut().zip(dq) {
            *o = -g;
        }
    }
    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Outcome of [`hamiltonian_fixed_point_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianStep {
    pub p: StateVec,
    pub q: StateVec,
    /// Index `i` of the iterate confirmed by the stopping test.
    pub iterations: usize,
    pub converged: bool,
}

/// One step of the staggered fixed-point decoupling of a (possibly
/// non-separable) Hamiltonian system.
///
/// Iteration `i` integrates the canonical equations with the cross arguments
/// taken from iterate `i − 1` along `[t, t + h]`, starting from the constant
/// iterate `(p(t), q(t))`. It stops once
/// `max(‖p_{i+1} − p_i‖₂, ‖q_{i+1} − q_i‖₂) ≤ cfg.tol` at `t + h` and returns
/// iterate `i + 1`. Inner integration runs at `cfg.tol / 100`.
pub fn hamiltonian_fixed_point_step(
    ham: &dyn Hamiltonian,
    p: &StateVec,
    q: &StateVec,
    t: f64,
    h: f64,
    cfg: &SolverConfig,
) -> Result<HamiltonianStep> {
    let d = ham.dim();
    p.check_dim(d)?;
    q.check_dim(d)?;
    let start = StateVec::new([q.as_slice(), p.as_slice()].concat())?;
    let inner_tol = (cfg.tol * 1e-2).max(1e-14);
    let split = |s: &StateVec| -> (StateVec, StateVec) {
        let (qq, pp) = s.as_slice().split_at(d);
        (StateVec::from_raw(pp.to_vec()), StateVec::from_raw(qq.to_vec()))
    };
    let mut prev = Trajectory::constant(t, t + h, start.clone());
    for i in 0..cfg.max_iter {
        let field = Staggered { ham, prev: &prev };
        let next = dopri5_trajectory(&field, t, h, &start, inner_tol)
            .map_err(|e| e.in_stage("hamiltonian-fixed-point", i + 1))?;
        let (p0, q0) = split(prev.last());
        let (p1, q1) = split(next.last());
        let change = p1.sub(&p0).norm2().max(q1.sub(&q0).norm2());
        if change <= cfg.tol {
            return Ok(HamiltonianStep {
                p: p1,
                q: q1,
                iterations: i,
                converged: true,
            });
        }
        prev = next;
    }
    let (p1, q1) = split(prev.last());
    Ok(HamiltonianStep {
        p: p1,
        q: q1,
        iterations: cfg.max_iter,
        converged: false,
    })
}
