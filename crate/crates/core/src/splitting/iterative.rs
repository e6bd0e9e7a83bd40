//! Iterative splitting: each iteration solves one operator at the current
//! iterate while the other is evaluated along the previous iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{eval, ForcedSolver, SplitSystem, StateVec, Trajectory, VectorField};

/// Starting iterate `c_0(t)` on the step interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialIterate {
    /// `c_0(t) ≡ c^n`.
    #[default]
    Constant,
    /// `c_0(t) = c^n + (t − t^n) F(t^n, c^n)`.
    LinearInTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeConfig {
    /// Number of iterations `m ≥ 1`.
    pub iterations: usize,
    /// Switch index `j` of the alternating variant: iterations `1..=j` solve
    /// `A` at the new iterate, the rest solve `B`. Ignored by the
    /// one-operator scheme.
    pub switch: usize,
    /// Step-doubling tolerance for the inner solves. `None` runs each inner
    /// solver once at its base resolution.
    pub inner_tol: Option<f64>,
    pub initial: InitialIterate,
}

impl IterativeConfig {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            switch: iterations,
            inner_tol: None,
            initial: InitialIterate::Constant,
        }
    }

    pub fn with_switch(mut self, j: usize) -> Self {
        self.switch = j;
        self
    }

    pub fn with_inner_tol(mut self, tol: f64) -> Self {
        self.inner_tol = Some(tol);
        self
    }

    pub fn with_initial(mut self, initial: InitialIterate) -> Self {
        self.initial = initial;
        self
    }

    fn validate(&self, alternating: bool) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterative splitting needs m >= 1".into()));
        }
        if alternating && !(1..=self.iterations).contains(&self.switch) {
            return Err(Error::InvalidArgument(format!(
                "switch index j = {} outside 1..={}",
                self.switch, self.iterations
            )));
        }
        if let Some(tol) = self.inner_tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument("inner tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

const MAX_REFINE: usize = 1 << 12;

/// Runs `solver`, doubling its resolution until successive end states agree
/// to `tol`.
fn solve_to_tol(
    solver: &dyn ForcedSolver,
    t: f64,
    h: f64,
    c: &StateVec,
    forcing: &dyn Fn(f64) -> Result<StateVec>,
    tol: Option<f64>,
) -> Result<Trajectory> {
    let mut prev = solver.solve(t, h, c, forcing, 1)?;
    let Some(tol) = tol else {
        return Ok(prev);
    };
    let mut refine = 2;
    while refine <= MAX_REFINE {
        let cur = solver.solve(t, h, c, forcing, refine)?;
        let diff = cur.last().sub(prev.last()).norm_inf();
        if diff <= tol {
            return Ok(cur);
        }
        prev = cur;
        refine *= 2;
    }
    Err(Error::InvalidArgument(format!(
        "inner solver did not reach tolerance {tol:e} within {MAX_REFINE}x refinement"
    )))
}

fn initial_iterate(
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
    policy: InitialIterate,
) -> Result<Trajectory> {
    match policy {
        InitialIterate::Constant => Ok(Trajectory::constant(t, t + h, c.clone())),
        InitialIterate::LinearInTime => {
            let f = eval(sys.full().as_ref(), t, c)?;
            let mut end = c.clone();
            end.axpy(h, &f);
            let mut tr = Trajectory::start(t, c.clone());
            tr.push(t + h, end);
            Ok(tr)
        }
    }
}

fn iterate(
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
    cfg: &IterativeConfig,
    switch: usize,
    name: &str,
) -> Result<StateVec> {
    c.check_dim(sys.dim())?;
    let mut prev = initial_iterate(sys, t, h, c, cfg.initial)?;
    for i in 1..=cfg.iterations {
        // Iterations up to the switch index solve A implicitly and take B
        // along the previous iterate; later ones swap the roles.
        let (solver, lagged): (&dyn ForcedSolver, &dyn VectorField) = if i <= switch {
            (sys.a_forced.as_ref(), sys.b_field.as_ref())
        } else {
            (sys.b_forced.as_ref(), sys.a_field.as_ref())
        };
        let previous = &prev;
        let forcing = move |s: f64| eval(lagged, s, &previous.at(s));
        let next = solve_to_tol(solver, t, h, c, &forcing, cfg.inner_tol)
            .map_err(|e| e.in_stage(name, i))?;
        prev = next;
    }
    Ok(prev.last().clone())
}

/// Iterative splitting with respect to one operator:
/// `c_i' = A(c_i) + B(c_{i−1})`, `c_i(t) = c`, for `i = 1..m`.
pub fn iterative_split_one(
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
    cfg: &IterativeConfig,
) -> Result<StateVec> {
    cfg.validate(false)?;
    iterate(sys, t, h, c, cfg, cfg.iterations, "iter-one")
}

/// Iterative splitting with alternating operators: iterations `1..=j` solve
/// `c_i' = A(c_i) + B(c_{i−1})`, iterations `j+1..=m` solve
/// `c_i' = A(c_{i−1}) + B(c_i)`. The second phase starts from the last
/// iterate of the first, so the `c_{−1} = 0` convention never enters.
pub fn iterative_split_alternating(
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
    cfg: &IterativeConfig,
) -> Result<StateVec> {
    cfg.validate(true)?;
    iterate(sys, t, h, c, cfg, cfg.switch, "iter-alt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ExactFlow, FnField, ZeroField};
    use std::sync::Arc;

    fn sys(a: FnField, b: FnField) -> SplitSystem {
        SplitSystem::new(
            Arc::new(a),
            Arc::new(b),
            Arc::new(ExactFlow::identity()),
            Arc::new(ExactFlow::identity()),
        )
        .unwrap()
    }

    #[test]
    fn frozen_source_integrates_linearly() {
        let lambda = -0.8;
        let s = SplitSystem::new(
            Arc::new(ZeroField(1)),
            Arc::new(FnField::new(1, move |_, c, o| o[0] = lambda * c[0])),
            Arc::new(ExactFlow::identity()),
            Arc::new(ExactFlow::identity()),
        )
        .unwrap();
        let c = StateVec::scalar(2.0);
        let h = 0.3;
        let out = iterative_split_one(&s, 0.0, h, &c, &IterativeConfig::new(1)).unwrap();
        assert!((out[0] - 2.0 * (1.0 + lambda * h)).abs() < 1e-15);
    }

    #[test]
    fn b_zero_is_independent_of_m() {
        let s = sys(
            FnField::new(1, |_, c, o| o[0] = -c[0]),
            FnField::new(1, |_, _, o| o[0] = 0.0),
        );
        let c = StateVec::scalar(1.0);
        let cfg1 = IterativeConfig::new(1).with_inner_tol(1e-12);
        let out1 = iterative_split_one(&s, 0.0, 0.5, &c, &cfg1).unwrap();
        for m in 2..5 {
            let cfg = IterativeConfig::new(m).with_inner_tol(1e-12);
            let out = iterative_split_one(&s, 0.0, 0.5, &c, &cfg).unwrap();
            assert_eq!(out, out1);
        }
        assert!((out1[0] - (-0.5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn alternating_with_full_switch_matches_one_operator() {
        let s = sys(
            FnField::new(2, |_, c, o| {
                o[0] = -c[0] + 0.3 * c[1];
                o[1] = 0.1 * c[0];
            }),
            FnField::new(2, |_, c, o| {
                o[0] = c[1] * c[1];
                o[1] = -0.5 * c[1];
            }),
        );
        let c = StateVec::new(vec![1.0, 0.5]).unwrap();
        let cfg = IterativeConfig::new(3).with_switch(3);
        assert_eq!(
            iterative_split_alternating(&s, 0.0, 0.2, &c, &cfg).unwrap(),
            iterative_split_one(&s, 0.0, 0.2, &c, &cfg).unwrap()
        );
    }

    #[test]
    fn zero_fields_leave_state() {
        let s = sys(
            FnField::new(2, |_, _, o| o.fill(0.0)),
            FnField::new(2, |_, _, o| o.fill(0.0)),
        );
        let c = StateVec::new(vec![0.25, -3.0]).unwrap();
        let cfg = IterativeConfig::new(4).with_switch(2);
        assert_eq!(iterative_split_alternating(&s, 0.0, 1.0, &c, &cfg).unwrap(), c);
    }

    #[test]
    fn rejects_bad_configs() {
        let s = sys(
            FnField::new(1, |_, _, o| o[0] = 0.0),
            FnField::new(1, |_, _, o| o[0] = 0.0),
        );
        let c = StateVec::scalar(1.0);
        assert!(iterative_split_one(&s, 0.0, 0.1, &c, &IterativeConfig::new(0)).is_err());
        let bad_j = IterativeConfig::new(2).with_switch(3);
        assert!(iterative_split_alternating(&s, 0.0, 0.1, &c, &bad_j).is_err());
        let zero_j = IterativeConfig::new(2).with_switch(0);
        assert!(iterative_split_alternating(&s, 0.0, 0.1, &c, &zero_j).is_err());
    }

    #[test]
    fn more_iterations_approach_full_solution() {
        // u' = -u + u*0.5 split as A = -u, B = 0.5u; exact e^{-0.5 h}
        let s = sys(
            FnField::new(1, |_, c, o| o[0] = -c[0]),
            FnField::new(1, |_, c, o| o[0] = 0.5 * c[0]),
        );
        let c = StateVec::scalar(1.0);
        let h: f64 = 0.2;
        let exact = (-0.5 * h).exp();
        let mut last = f64::INFINITY;
        for m in 1..=4 {
            let cfg = IterativeConfig::new(m).with_inner_tol(1e-13);
            let out = iterative_split_one(&s, 0.0, h, &c, &cfg).unwrap();
            let err = (out[0] - exact).abs();
            assert!(err < last, "m = {m}: {err} !< {last}");
            last = err;
        }
        assert!(last < 1e-5);
    }
}
