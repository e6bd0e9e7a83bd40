//! State, vector-field and flow abstractions shared by every scheme.
//!
//! An evolution problem `u' = A(u) + B(u)` is described by a [`SplitSystem`]:
//! the two vector fields, a [`SubFlow`] realizing the time-`h` map of each one,
//! and optionally the full field `F = A + B` used by the reference integrator.

mod integrate;
mod norms;
mod state;

use std::fmt;
use std::sync::Arc;

pub use integrate::{dopri5, dopri5_trajectory, reference_flow, rk4_step, Trajectory};
pub use norms::{error_norms, ErrorNorms};
pub use state::StateVec;

use crate::error::{Error, Result};

/// A (possibly time-dependent) vector field `F(t, c)`.
///
/// Implementations must be deterministic and free of side effects; the output
/// has the same dimension as the input.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `F(t, c)` into `out`. Both slices have length [`dim`](Self::dim).
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]);

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Evaluates `field` at `(t, c)`, checking dimensions and finiteness.
pub fn eval(field: &dyn VectorField, t: f64, c: &StateVec) -> Result<StateVec> {
    c.check_dim(field.dim())?;
    let mut out = vec![0.0; c.dim()];
    field.eval_into(t, c.as_slice(), &mut out);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("vector field evaluation".into()));
    }
    Ok(StateVec::from_raw(out))
}

/// Unchecked evaluation for internal hot loops.
pub(crate) fn eval_raw(field: &dyn VectorField, t: f64, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    field.eval_into(t, c, &mut out);
    out
}

type FieldFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Vector field backed by a closure.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    autonomous: bool,
    f: Arc<FieldFn>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            dim,
            autonomous: true,
            f: Arc::new(f),
        }
    }

    /// Marks the field as depending explicitly on `t`.
    pub fn non_autonomous(mut self) -> Self {
        self.autonomous = false;
        self
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        (self.f)(t, c, out)
    }
    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish()
    }
}

/// The identically zero field.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval_into(&self, _t: f64, _c: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `F = A + B`.
#[derive(Clone)]
pub struct SumField {
    pub a: Arc<dyn VectorField>,
    pub b: Arc<dyn VectorField>,
}

impl VectorField for SumField {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        self.a.eval_into(t, c, out);
        let mut tmp = vec![0.0; c.len()];
        self.b.eval_into(t, c, &mut tmp);
        for (o, x) in out.iter_mut().zip(tmp) {
            *o += x;
        }
    }
    fn is_autonomous(&self) -> bool {
        self.a.is_autonomous() && self.b.is_autonomous()
    }
}

/// How a sub-flow is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    ExactClosedForm,
    /// Numerical integration with the given absolute per-step tolerance.
    Numeric { tol: f64 },
}

/// Time-`h` map of one of the split vector fields.
pub trait SubFlow: Send + Sync {
    fn kind(&self) -> FlowKind;

    /// Advances `c` from `t0` to `t0 + h`. `h` may be negative.
    fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec>;
}

/// Applies `flow`, returning the input unchanged (bit for bit) when `h == 0`.
pub fn apply_flow(flow: &dyn SubFlow, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
    if h == 0.0 {
        return Ok(c.clone());
    }
    flow.advance(t0, h, c)
}

type FlowFn = dyn Fn(f64, f64, &[f64]) -> Result<Vec<f64>> + Send + Sync;

/// Closed-form sub-flow given as `(t0, h, c) -> c(t0 + h)`.
#[derive(Clone)]
pub struct ExactFlow {
    f: Arc<FlowFn>,
}

impl ExactFlow {
    pub fn new(f: impl Fn(f64, f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    /// Flow of the zero field.
    pub fn identity() -> Self {
        Self::new(|_, _, c| Ok(c.to_vec()))
    }
}

impl SubFlow for ExactFlow {
    fn kind(&self) -> FlowKind {
        FlowKind::ExactClosedForm
    }
    fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        let out = (self.f)(t0, h, c.as_slice())?;
        let out = StateVec::from_raw(out);
        out.check_dim(c.dim())?;
        if !out.is_finite() {
            return Err(Error::NonFinite("closed-form sub-flow".into()));
        }
        Ok(out)
    }
}

/// Sub-flow computed by the adaptive reference integrator.
#[derive(Clone)]
pub struct NumericFlow {
    pub field: Arc<dyn VectorField>,
    pub tol: f64,
}

impl NumericFlow {
    pub fn new(field: Arc<dyn VectorField>, tol: f64) -> Self {
        Self { field, tol }
    }
}

impl SubFlow for NumericFlow {
    fn kind(&self) -> FlowKind {
        FlowKind::Numeric { tol: self.tol }
    }
    fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        dopri5(self.field.as_ref(), t0, h, c, self.tol)
    }
}

/// Known time-dependent forcing `s(t)` for [`ForcedSolver`].
pub type Forcing<'a> = &'a dyn Fn(f64) -> Result<StateVec>;

/// Integrates `c' = G(t, c) + s(t)` over `[t0, t0 + h]` for one split field `G`.
///
/// This is the inner sub-integrator of the iterative splitting schemes. The
/// returned trajectory holds the solution at the solver's internal nodes.
/// `refine` multiplies the solver's base number of substeps.
pub trait ForcedSolver: Send + Sync {
    fn solve(
        &self,
        t0: f64,
        h: f64,
        c: &StateVec,
        forcing: Forcing<'_>,
        refine: usize,
    ) -> Result<Trajectory>;
}

/// Explicit classical fourth-order Runge-Kutta with a fixed number of substeps.
#[derive(Clone)]
pub struct Rk4Forced {
    pub field: Arc<dyn VectorField>,
    pub substeps: usize,
}

impl ForcedSolver for Rk4Forced {
    fn solve(
        &self,
        t0: f64,
        h: f64,
        c: &StateVec,
        forcing: Forcing<'_>,
        refine: usize,
    ) -> Result<Trajectory> {
        let n = (self.substeps.max(1)) * refine.max(1);
        let dt = h / n as f64;
        let rhs = |t: f64, u: &StateVec| -> Result<StateVec> {
            let mut g = eval(self.field.as_ref(), t, u)?;
            g.axpy(1.0, &forcing(t)?);
            Ok(g)
        };
        let mut traj = Trajectory::start(t0, c.clone());
        let mut u = c.clone();
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            let k1 = rhs(t, &u)?;
            let mut tmp = u.clone();
            tmp.axpy(0.5 * dt, &k1);
            let k2 = rhs(t + 0.5 * dt, &tmp)?;
            let mut tmp = u.clone();
            tmp.axpy(0.5 * dt, &k2);
            let k3 = rhs(t + 0.5 * dt, &tmp)?;
            let mut tmp = u.clone();
            tmp.axpy(dt, &k3);
            let k4 = rhs(t + dt, &tmp)?;
            u.axpy(dt / 6.0, &k1);
            u.axpy(dt / 3.0, &k2);
            u.axpy(dt / 3.0, &k3);
            u.axpy(dt / 6.0, &k4);
            let t_next = if k + 1 == n { t0 + h } else { t + dt };
            traj.push(t_next, u.clone());
        }
        Ok(traj)
    }
}

/// The pair of split vector fields with their sub-flow realizations.
#[derive(Clone)]
pub struct SplitSystem {
    pub a_field: Arc<dyn VectorField>,
    pub b_field: Arc<dyn VectorField>,
    pub a_flow: Arc<dyn SubFlow>,
    pub b_flow: Arc<dyn SubFlow>,
    pub full_field: Option<Arc<dyn VectorField>>,
    pub a_forced: Arc<dyn ForcedSolver>,
    pub b_forced: Arc<dyn ForcedSolver>,
}

impl SplitSystem {
    /// Builds a system whose forced inner solvers default to a single RK4 step
    /// per call.
    pub fn new(
        a_field: Arc<dyn VectorField>,
        b_field: Arc<dyn VectorField>,
        a_flow: Arc<dyn SubFlow>,
        b_flow: Arc<dyn SubFlow>,
    ) -> Result<Self> {
        if a_field.dim() != b_field.dim() {
            return Err(Error::DimensionMismatch {
                expected: a_field.dim(),
                got: b_field.dim(),
            });
        }
        let a_forced = Arc::new(Rk4Forced {
            field: a_field.clone(),
            substeps: 1,
        });
        let b_forced = Arc::new(Rk4Forced {
            field: b_field.clone(),
            substeps: 1,
        });
        Ok(Self {
            a_field,
            b_field,
            a_flow,
            b_flow,
            full_field: None,
            a_forced,
            b_forced,
        })
    }

    /// Builds a system whose sub-flows are computed numerically at `tol`.
    pub fn numeric(a: Arc<dyn VectorField>, b: Arc<dyn VectorField>, tol: f64) -> Result<Self> {
        let af = Arc::new(NumericFlow::new(a.clone(), tol));
        let bf = Arc::new(NumericFlow::new(b.clone(), tol));
        Self::new(a, b, af, bf)
    }

    pub fn with_full_field(mut self, field: Arc<dyn VectorField>) -> Result<Self> {
        if field.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: field.dim(),
            });
        }
        self.full_field = Some(field);
        Ok(self)
    }

    pub fn with_forced_solvers(
        mut self,
        a: Arc<dyn ForcedSolver>,
        b: Arc<dyn ForcedSolver>,
    ) -> Self {
        self.a_forced = a;
        self.b_forced = b;
        self
    }

    pub fn dim(&self) -> usize {
        self.a_field.dim()
    }

    /// The full field: `full_field` if present, otherwise `A + B`.
    pub fn full(&self) -> Arc<dyn VectorField> {
        match &self.full_field {
            Some(f) => f.clone(),
            None => Arc::new(SumField {
                a: self.a_field.clone(),
                b: self.b_field.clone(),
            }),
        }
    }

    /// Exchanges the roles of `A` and `B`.
    pub fn swapped(&self) -> Self {
        Self {
            a_field: self.b_field.clone(),
            b_field: self.a_field.clone(),
            a_flow: self.b_flow.clone(),
            b_flow: self.a_flow.clone(),
            full_field: self.full_field.clone(),
            a_forced: self.b_forced.clone(),
            b_forced: self.a_forced.clone(),
        }
    }

    /// Checks `‖F(c) − A(c) − B(c)‖∞ ≤ 1e-12 (1 + ‖c‖∞)` on the given samples.
    pub fn check_consistency(&self, t: f64, samples: &[StateVec]) -> Result<()> {
        let Some(full) = &self.full_field else {
            return Ok(());
        };
        for c in samples {
            let f = eval(full.as_ref(), t, c)?;
            let a = eval(self.a_field.as_ref(), t, c)?;
            let b = eval(self.b_field.as_ref(), t, c)?;
            let defect = f.sub(&a).sub(&b).norm_inf();
            if defect > 1e-12 * (1.0 + c.norm_inf()) {
                return Err(Error::InvalidArgument(format!(
                    "full field differs from A + B by {defect:e}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SplitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitSystem")
            .field("dim", &self.dim())
            .field("a_flow", &self.a_flow.kind())
            .field("b_flow", &self.b_flow.kind())
            .finish()
    }
}
