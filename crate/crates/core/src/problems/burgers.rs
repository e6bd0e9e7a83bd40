//! Two-dimensional viscous Burgers equation on the unit square,
//!
//! ```text
//! u_t = −u u_x − u u_y + μ (u_xx + u_yy),
//! ```
//!
//! with Dirichlet data and initial state taken from the travelling front
//! `u(x, y, t) = 1 / (1 + exp((x + y − t) / (2μ)))`.
//!
//! The grid has spacing `Δx = 1/nx`, `Δy = 1/ny`; the unknowns are the
//! `(nx − 1)(ny − 1)` interior nodes. Convection uses first-order upwind
//! differences picked by the sign of `u`, diffusion the five-point stencil.
//! Boundary values are re-evaluated at the time of every field evaluation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    FlowKind, ForcedSolver, Forcing, StateVec, SubFlow, SplitSystem, SumField, Trajectory,
    VectorField,
};

/// Analytic travelling-front solution. Returns 0 when the exponent exceeds
/// 500.
pub fn burgers_analytic(x: f64, y: f64, t: f64, mu: f64) -> f64 {
    let z = (x + y - t) / (2.0 * mu);
    if z > 500.0 {
        return 0.0;
    }
    1.0 / (1.0 + z.exp())
}

fn default_t_end() -> f64 {
    1.25
}

fn default_max_substeps() -> usize {
    1000
}

fn default_cg_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersConfig {
    pub mu: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    pub dt: f64,
    /// Cap on explicit RK4 substeps per convection sub-flow call; exceeding it
    /// is a CFL error.
    #[serde(default = "default_max_substeps")]
    pub max_convection_substeps: usize,
    /// Relative residual tolerance of the conjugate-gradient diffusion solve.
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
}

impl BurgersConfig {
    /// Square grid with the default end time.
    pub fn new(mu: f64, n: usize, dt: f64) -> Self {
        Self {
            mu,
            nx: n,
            ny: n,
            t_end: default_t_end(),
            dt,
            max_convection_substeps: default_max_substeps(),
            cg_tol: default_cg_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive (got {})", self.mu)));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs nx, ny >= 2 (got {}, {})",
                self.nx, self.ny
            )));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::InvalidArgument("dt and t_end must be positive".into()));
        }
        if self.max_convection_substeps == 0 || !(self.cg_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "max_convection_substeps and cg_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Interior nodes `(i, j)`, `1 ≤ i < nx`, `1 ≤ j < ny`, stored row by row with
/// `i` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn len(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of interior node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if (1..self.nx).contains(&i) && (1..self.ny).contains(&j) {
            Some((j - 1) * (self.nx - 1) + (i - 1))
        } else {
            None
        }
    }

    /// Inverse of [`index`](Self::index).
    pub fn node(&self, k: usize) -> (usize, usize) {
        (k % (self.nx - 1) + 1, k / (self.nx - 1) + 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    /// Samples `f(x, y)` on the interior nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.node(k);
                f(self.x(i), self.y(j))
            })
            .collect()
    }

    /// Value at node `(i, j)`, taken from `u` inside and from `boundary` on
    /// the edge.
    #[inline]
    fn value(&self, u: &[f64], i: usize, j: usize, boundary: &dyn Fn(f64, f64) -> f64) -> f64 {
        match self.index(i, j) {
            Some(k) => u[k],
            None => boundary(self.x(i), self.y(j)),
        }
    }

    /// `−u (u_x + u_y)` with sign-selected one-sided differences.
    pub fn convection(&self, u: &[f64], boundary: &dyn Fn(f64, f64) -> f64, out: &mut [f64]) {
        let (dx, dy) = (self.dx(), self.dy());
        for k in 0..self.len() {
            let (i, j) = self.node(k);
            let c = u[k];
            let (ux, uy) = if c > 0.0 {
                (
                    (c - self.value(u, i - 1, j, boundary)) / dx,
                    (c - self.value(u, i, j - 1, boundary)) / dy,
                )
            } else {
                (
                    (self.value(u, i + 1, j, boundary) - c) / dx,
                    (self.value(u, i, j + 1, boundary) - c) / dy,
                )
            };
            out[k] = -c * (ux + uy);
        }
    }

    /// Five-point Laplacian with Dirichlet values from `boundary`.
    pub fn laplacian(&self, u: &[f64], boundary: &dyn Fn(f64, f64) -> f64, out: &mut [f64]) {
        let (ix2, iy2) = (self.dx().powi(-2), self.dy().powi(-2));
        for k in 0..self.len() {
            let (i, j) = self.node(k);
            let c = u[k];
            let w = self.value(u, i - 1, j, boundary);
            let e = self.value(u, i + 1, j, boundary);
            let s = self.value(u, i, j - 1, boundary);
            let n = self.value(u, i, j + 1, boundary);
            out[k] = (w - 2.0 * c + e) * ix2 + (s - 2.0 * c + n) * iy2;
        }
    }
}

#[derive(Debug)]
struct Inner {
    cfg: BurgersConfig,
    grid: Grid2D,
}

impl Inner {
    fn boundary(&self, t: f64) -> impl Fn(f64, f64) -> f64 {
        let mu = self.cfg.mu;
        move |x, y| burgers_analytic(x, y, t, mu)
    }

    /// Admissible explicit step for a state whose interior values are `u`.
    fn admissible_dt(&self, u: &[f64]) -> f64 {
        // Boundary data lies in [0, 1].
        let umax = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        0.9 / (umax * (1.0 / self.grid.dx() + 1.0 / self.grid.dy()))
    }

    fn substeps(&self, u: &[f64], h: f64) -> Result<usize> {
        let adm = self.admissible_dt(u);
        let n = (h.abs() / adm).ceil().max(1.0) as usize;
        if n > self.cfg.max_convection_substeps {
            return Err(Error::Cfl {
                dt: h.abs(),
                admissible: adm * self.cfg.max_convection_substeps as f64,
            });
        }
        Ok(n)
    }

    /// Solves `(I − dt μ L₀) v = rhs` by conjugate gradients, `L₀` the
    /// Laplacian with homogeneous boundary values.
    fn implicit_diffusion_solve(&self, rhs: &[f64], guess: &[f64], dt: f64) -> Result<Vec<f64>> {
        let n = rhs.len();
        let zero = |_: f64, _: f64| 0.0;
        let mut lap = vec![0.0; n];
        let nu = dt * self.cfg.mu;
        let mut apply = |v: &[f64], out: &mut [f64]| {
            self.grid.laplacian(v, &zero, &mut lap);
            for ((o, x), l) in out.iter_mut().zip(v).zip(&lap) {
                *o = x - nu * l;
            }
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut x = guess.to_vec();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let target = self.cfg.cg_tol * dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
        let max_iter = 10 * n + 100;
        let mut ap = vec![0.0; n];
        for _ in 0..max_iter {
            if rr.sqrt() <= target {
                return Ok(x);
            }
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        if rr.sqrt() <= target {
            return Ok(x);
        }
        Err(Error::LinearSolver {
            iterations: max_iter,
            residual: rr.sqrt(),
        })
    }

    /// One implicit Euler step of `u' = μ L u + s` to `t1 = t0 + dt`.
    fn implicit_euler(&self, t1: f64, dt: f64, u: &[f64], source: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = u.len();
        let zero_state = vec![0.0; n];
        let mut bnd = vec![0.0; n];
        // Boundary contribution of the stencil: L(0) with Dirichlet data.
        self.grid.laplacian(&zero_state, &self.boundary(t1), &mut bnd);
        let mu = self.cfg.mu;
        let rhs: Vec<f64> = (0..n)
            .map(|k| u[k] + dt * (mu * bnd[k] + source.map_or(0.0, |s| s[k])))
            .collect();
        self.implicit_diffusion_solve(&rhs, u, dt)
    }

    fn rk4_convection(&self, t0: f64, h: f64, u: &[f64], forcing: Option<Forcing<'_>>, refine: usize) -> Result<Trajectory> {
        let n = self.substeps(u, h)? * refine.max(1);
        let dt = h / n as f64;
        let len = u.len();
        let rhs = |t: f64, v: &[f64]| -> Result<Vec<f64>> {
            let mut out = vec![0.0; len];
            self.grid.convection(v, &self.boundary(t), &mut out);
            if let Some(f) = forcing {
                let s = f(t)?;
                for (o, x) in out.iter_mut().zip(s.as_slice()) {
                    *o += x;
                }
            }
            Ok(out)
        };
        let lin = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
        let mut traj = Trajectory::start(t0, StateVec::new(u.to_vec())?);
        let mut v = u.to_vec();
        for k in 0..n {
            let t = t0 + k as f64 * dt;
            let k1 = rhs(t, &v)?;
            let k2 = rhs(t + 0.5 * dt, &lin(&v, 0.5 * dt, &k1))?;
            let k3 = rhs(t + 0.5 * dt, &lin(&v, 0.5 * dt, &k2))?;
            let k4 = rhs(t + dt, &lin(&v, dt, &k3))?;
            for idx in 0..len {
                v[idx] += dt / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
            }
            let t_next = if k + 1 == n { t0 + h } else { t + dt };
            let state = StateVec::new(v.clone()).map_err(|_| Error::NonFinite("convection sub-flow".into()))?;
            traj.push(t_next, state);
        }
        Ok(traj)
    }
}

struct Convection(Arc<Inner>);

impl VectorField for Convection {
    fn dim(&self) -> usize {
        self.0.grid.len()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        self.0.grid.convection(c, &self.0.boundary(t), out)
    }
    fn is_autonomous(&self) -> bool {
        false
    }
}

struct Diffusion(Arc<Inner>);

impl VectorField for Diffusion {
    fn dim(&self) -> usize {
        self.0.grid.len()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        self.0.grid.laplacian(c, &self.0.boundary(t), out);
        for o in out.iter_mut() {
            *o *= self.0.cfg.mu;
        }
    }
    fn is_autonomous(&self) -> bool {
        false
    }
}

/// Explicit RK4 convection flow with CFL-limited substeps.
struct ConvectionFlow(Arc<Inner>);

impl SubFlow for ConvectionFlow {
    fn kind(&self) -> FlowKind {
        FlowKind::Numeric { tol: self.0.cfg.cg_tol }
    }
    fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        c.check_dim(self.0.grid.len())?;
        Ok(self.0.rk4_convection(t0, h, c.as_slice(), None, 1)?.last().clone())
    }
}

/// Single implicit Euler diffusion step.
struct DiffusionFlow(Arc<Inner>);

impl SubFlow for DiffusionFlow {
    fn kind(&self) -> FlowKind {
        FlowKind::Numeric { tol: self.0.cfg.cg_tol }
    }
    fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        c.check_dim(self.0.grid.len())?;
        StateVec::new(self.0.implicit_euler(t0 + h, h, c.as_slice(), None)?)
    }
}

struct ConvectionForced(Arc<Inner>);

impl ForcedSolver for ConvectionForced {
    fn solve(&self, t0: f64, h: f64, c: &StateVec, forcing: Forcing<'_>, refine: usize) -> Result<Trajectory> {
        c.check_dim(self.0.grid.len())?;
        self.0.rk4_convection(t0, h, c.as_slice(), Some(forcing), refine)
    }
}

/// Implicit Euler for `u' = μ Δu + s(t)`, `refine` equal substeps.
struct DiffusionForced(Arc<Inner>);

impl ForcedSolver for DiffusionForced {
    fn solve(&self, t0: f64, h: f64, c: &StateVec, forcing: Forcing<'_>, refine: usize) -> Result<Trajectory> {
        c.check_dim(self.0.grid.len())?;
        let n = refine.max(1);
        let dt = h / n as f64;
        let mut traj = Trajectory::start(t0, c.clone());
        let mut u = c.as_slice().to_vec();
        for k in 0..n {
            let t1 = if k + 1 == n { t0 + h } else { t0 + (k + 1) as f64 * dt };
            let s = forcing(t1)?;
            u = self.0.implicit_euler(t1, dt, &u, Some(s.as_slice()))?;
            traj.push(t1, StateVec::new(u.clone())?);
        }
        Ok(traj)
    }
}

/// A configured Burgers benchmark.
#[derive(Debug, Clone)]
pub struct BurgersProblem {
    inner: Arc<Inner>,
}

impl BurgersProblem {
    pub fn new(cfg: BurgersConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid2D::new(cfg.nx, cfg.ny);
        Ok(Self {
            inner: Arc::new(Inner { cfg, grid }),
        })
    }

    pub fn config(&self) -> &BurgersConfig {
        &self.inner.cfg
    }

    pub fn grid(&self) -> Grid2D {
        self.inner.grid
    }

    /// Analytic solution on the interior nodes at time `t`.
    pub fn exact(&self, t: f64) -> StateVec {
        let mu = self.inner.cfg.mu;
        StateVec::from_raw(self.inner.grid.sample(|x, y| burgers_analytic(x, y, t, mu)))
    }

    pub fn initial(&self) -> StateVec {
        self.exact(0.0)
    }

    /// `A` = convection (explicit RK4 flow), `B` = diffusion (implicit Euler
    /// flow). The forced solvers of the iterative schemes are RK4 for
    /// convection and implicit Euler for diffusion.
    pub fn system(&self) -> SplitSystem {
        let a: Arc<dyn VectorField> = Arc::new(Convection(self.inner.clone()));
        let b: Arc<dyn VectorField> = Arc::new(Diffusion(self.inner.clone()));
        let full = Arc::new(SumField { a: a.clone(), b: b.clone() });
        SplitSystem::new(
            a,
            b,
            Arc::new(ConvectionFlow(self.inner.clone())),
            Arc::new(DiffusionFlow(self.inner.clone())),
        )
        .expect("same grid")
        .with_full_field(full)
        .expect("same grid")
        .with_forced_solvers(
            Arc::new(ConvectionForced(self.inner.clone())),
            Arc::new(DiffusionForced(self.inner.clone())),
        )
    }

    /// Semi-discrete residual `∂ₜu − A(u) − B(u)` of the analytic solution at
    /// time `t`.
    pub fn residual(&self, t: f64) -> Vec<f64> {
        let mu = self.inner.cfg.mu;
        let u = self.exact(t);
        let n = u.dim();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let bnd = self.inner.boundary(t);
        self.inner.grid.convection(u.as_slice(), &bnd, &mut a);
        self.inner.grid.laplacian(u.as_slice(), &bnd, &mut b);
        (0..n)
            .map(|k| {
                let v = u[k];
                let ut = v * (1.0 - v) / (2.0 * mu);
                ut - a[k] - mu * b[k]
            })
            .collect()
    }
}

/// Split system of the Burgers benchmark for `cfg`.
pub fn burgers_build(cfg: BurgersConfig) -> Result<SplitSystem> {
    Ok(BurgersProblem::new(cfg)?.system())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::eval;
    use proptest::prelude::*;

    #[test]
    fn analytic_values() {
        assert_eq!(burgers_analytic(0.0, 0.0, 0.0, 0.3), 0.5);
        assert_eq!(burgers_analytic(0.25, 0.5, 0.75, 0.05), 0.5);
        let v = burgers_analytic(1.0, 1.0, 0.0, 0.05);
        let expect = 1.0 / (1.0 + 20f64.exp());
        assert!((v - expect).abs() < 1e-22);
        assert!((v - 2.0612e-9).abs() < 1e-13);
        assert_eq!(burgers_analytic(2.0, 0.0, 0.0, 1e-3), 0.0);
    }

    #[test]
    fn index_map_is_bijective() {
        let g = Grid2D::new(5, 7);
        let mut seen = vec![false; g.len()];
        for j in 1..7 {
            for i in 1..5 {
                let k = g.index(i, j).unwrap();
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(g.node(k), (i, j));
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert!(g.index(0, 1).is_none() && g.index(5, 1).is_none() && g.index(1, 7).is_none());
    }

    #[test]
    fn zero_and_constant_states() {
        let g = Grid2D::new(8, 8);
        let mut out = vec![1.0; g.len()];
        let zero = vec![0.0; g.len()];
        g.convection(&zero, &|_, _| 0.0, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
        g.laplacian(&zero, &|_, _| 0.0, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
        let kappa = vec![0.7; g.len()];
        g.convection(&kappa, &|_, _| 0.7, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
        let neg = vec![-0.4; g.len()];
        g.convection(&neg, &|_, _| -0.4, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_of_linear_function_vanishes() {
        let g = Grid2D::new(10, 10);
        let u = g.sample(|x, y| x + y);
        let mut out = vec![1.0; g.len()];
        g.laplacian(&u, &|x, y| x + y, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-10), "{:?}", out.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn field_shapes_and_flows() {
        let p = BurgersProblem::new(BurgersConfig::new(0.05, 10, 0.1)).unwrap();
        let sys = p.system();
        assert_eq!(sys.dim(), 81);
        let u0 = p.initial();
        sys.check_consistency(0.3, std::slice::from_ref(&u0)).unwrap();
        let a = eval(sys.a_field.as_ref(), 0.0, &u0).unwrap();
        assert!(a.is_finite());
        let diffused = sys.b_flow.advance(0.0, 0.1, &u0).unwrap();
        assert!(diffused.as_slice().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        let convected = sys.a_flow.advance(0.0, 0.1, &u0).unwrap();
        assert!(convected.is_finite());
    }

    #[test]
    fn cfl_violation_reports_admissible_step() {
        let mut cfg = BurgersConfig::new(0.05, 40, 0.1);
        cfg.max_convection_substeps = 1;
        let sys = burgers_build(cfg.clone()).unwrap();
        let u0 = BurgersProblem::new(cfg).unwrap().initial();
        match sys.a_flow.advance(0.0, 0.1, &u0) {
            Err(Error::Cfl { dt, admissible }) => {
                assert_eq!(dt, 0.1);
                assert!(admissible < 0.1 && admissible > 0.0);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn residual_decreases_with_grid() {
        let res = |n: usize| {
            let p = BurgersProblem::new(BurgersConfig::new(0.25, n, 0.1)).unwrap();
            p.residual(0.5).iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let (r1, r2, r3) = (res(10), res(20), res(40));
        assert!(r2 < r1 && r3 < r2);
        let order = (r2 / r3).log2();
        assert!(order > 0.8, "observed order {order}");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(BurgersProblem::new(BurgersConfig::new(0.0, 10, 0.1)).is_err());
        assert!(BurgersProblem::new(BurgersConfig::new(0.05, 1, 0.1)).is_err());
        assert!(BurgersProblem::new(BurgersConfig::new(0.05, 10, -0.1)).is_err());
    }

    proptest! {
        #[test]
        fn analytic_is_bounded_and_monotone(
            x in 0.0f64..1.0, y in 0.0f64..1.0, t in 0.0f64..1.25,
            mu in 0.01f64..1.0, d in 0.001f64..0.5,
        ) {
            let u = burgers_analytic(x, y, t, mu);
            prop_assert!((0.0..=1.0).contains(&u));
            if ((x + y - t) / (2.0 * mu)).abs() < 30.0 {
                prop_assert!(u > 0.0 && u < 1.0);
            }
            prop_assert!(burgers_analytic(x + d, y, t, mu) <= u);
        }
    }
}
