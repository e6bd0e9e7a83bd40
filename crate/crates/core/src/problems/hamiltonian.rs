//! Separable Hamiltonians `H(p, q) = p²/(2m) + V(q)` and the Verlet
//! (kick-drift-kick) step.
//!
//! With `v = p/m` and `a(q) = −∇V(q)/m`, the drift `A = v·∂/∂q` and the kick
//! `B = a(q)·∂/∂v` have shift maps as exact flows. The symmetric product
//! `e^{h/2 B} e^{h A} e^{h/2 B}` composes to
//!
//! ```text
//! v½ = v + (h/2) a(q)
//! q' = q + h v½             = q + h v + (h²/2) a(q)
//! v' = v½ + (h/2) a(q')
//! ```
//!
//! The `h²/2` factor on `a(q)` in the position update comes from composing the
//! three maps.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{ExactFlow, FnField, SplitSystem, StateVec};
use crate::linearize::Hamiltonian;

type PotentialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub struct HamiltonianSystem {
    pub mass: f64,
    pub dim: usize,
    potential: Arc<PotentialFn>,
    grad_potential: Arc<GradientFn>,
}

impl HamiltonianSystem {
    pub fn new(
        mass: f64,
        dim: usize,
        potential: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad_potential: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(mass > 0.0) || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian needs mass > 0 and dim >= 1 (got {mass}, {dim})"
            )));
        }
        Ok(Self {
            mass,
            dim,
            potential: Arc::new(potential),
            grad_potential: Arc::new(grad_potential),
        })
    }

    /// `V(q) = (k/2) |q|²` in `dim` dimensions.
    pub fn harmonic(mass: f64, spring: f64, dim: usize) -> Result<Self> {
        Self::new(
            mass,
            dim,
            move |q| 0.5 * spring * q.iter().map(|x| x * x).sum::<f64>(),
            move |q| q.iter().map(|x| spring * x).collect(),
        )
    }

    /// Free particle, `V ≡ 0`.
    pub fn free(mass: f64, dim: usize) -> Result<Self> {
        Self::new(mass, dim, |_| 0.0, move |q| vec![0.0; q.len()])
    }

    pub fn potential(&self, q: &[f64]) -> f64 {
        (self.potential)(q)
    }

    pub fn grad_potential(&self, q: &[f64]) -> Vec<f64> {
        (self.grad_potential)(q)
    }

    /// `a(q) = −∇V(q) / m`.
    pub fn acceleration(&self, q: &[f64]) -> Vec<f64> {
        self.grad_potential(q).iter().map(|g| -g / self.mass).collect()
    }

    /// Total energy in velocity variables, `m v²/2 + V(q)`.
    pub fn energy(&self, q: &StateVec, v: &StateVec) -> f64 {
        0.5 * self.mass * v.as_slice().iter().map(|x| x * x).sum::<f64>() + self.potential(q.as_slice())
    }

    /// Drift/kick split on the stacked state `[q; v]`: `A` is the drift
    /// `q' = v`, `B` the kick `v' = a(q)`, both with exact shift flows.
    pub fn drift_kick_split(&self) -> SplitSystem {
        let d = self.dim;
        let drift_field = Arc::new(FnField::new(2 * d, move |_, c, o| {
            o[..d].copy_from_slice(&c[d..]);
            o[d..].fill(0.0);
        }));
        let me = self.clone();
        let kick_field = Arc::new(FnField::new(2 * d, move |_, c, o| {
            o[..d].fill(0.0);
            o[d..].copy_from_slice(&me.acceleration(&c[..d]));
        }));
        let drift = Arc::new(ExactFlow::new(move |_, h, c| {
            let mut out = c.to_vec();
            for i in 0..d {
                out[i] = c[i] + h * c[d + i];
            }
            Ok(out)
        }));
        let me = self.clone();
        let kick = Arc::new(ExactFlow::new(move |_, h, c| {
            let a = me.acceleration(&c[..d]);
            let mut out = c.to_vec();
            for i in 0..d {
                out[d + i] = c[d + i] + h * a[i];
            }
            Ok(out)
        }));
        SplitSystem::new(drift_field, kick_field, drift, kick).expect("matching dimensions")
    }
}

impl fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("mass", &self.mass)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Hamiltonian for HamiltonianSystem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.mass) + self.potential(q)
    }
    fn dh_dp(&self, p: &[f64], _q: &[f64]) -> Vec<f64> {
        p.iter().map(|x| x / self.mass).collect()
    }
    fn dh_dq(&self, _p: &[f64], q: &[f64]) -> Vec<f64> {
        self.grad_potential(q)
    }
}

/// One kick-drift-kick step in position/velocity variables.
pub fn verlet_step(
    ham: &HamiltonianSystem,
    q: &StateVec,
    v: &StateVec,
    h: f64,
) -> Result<(StateVec, StateVec)> {
    q.check_dim(ham.dim)?;
    v.check_dim(ham.dim)?;
    let half = 0.5 * h;
    let a0 = ham.acceleration(q.as_slice());
    let v_half: Vec<f64> = v.as_slice().iter().zip(&a0).map(|(v, a)| v + half * a).collect();
    let q1: Vec<f64> = q.as_slice().iter().zip(&v_half).map(|(q, v)| q + h * v).collect();
    let a1 = ham.acceleration(&q1);
    let v1: Vec<f64> = v_half.iter().zip(&a1).map(|(v, a)| v + half * a).collect();
    Ok((StateVec::new(q1)?, StateVec::new(v1)?))
}

/// Exact harmonic oscillator `q'' = −ω² q` at time `t`.
pub fn harmonic_exact(q0: f64, v0: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    (q0 * c + v0 / omega * s, -q0 * omega * s + v0 * c)
}
