use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{eval_raw, StateVec, VectorField};

/// Finite-difference scheme used by [`JacobianProbe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    Forward,
    Central,
}

/// Finite-difference directional-derivative settings.
///
/// The increment along a direction `v` is `epsilon (1 + ‖c‖∞) / ‖v‖∞`, so
/// `epsilon` is a relative scale and the perturbation `ε v` has size
/// `epsilon (1 + ‖c‖∞)` in the max norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianProbe {
    epsilon: f64,
    mode: ProbeMode,
}

impl JacobianProbe {
    pub const MIN_EPSILON: f64 = 1e-10;
    pub const MAX_EPSILON: f64 = 1e-2;

    pub fn new(epsilon: f64, mode: ProbeMode) -> Result<Self> {
        if !(Self::MIN_EPSILON..=Self::MAX_EPSILON).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "probe epsilon {epsilon:e} outside [{:e}, {:e}]",
                Self::MIN_EPSILON,
                Self::MAX_EPSILON
            )));
        }
        Ok(Self { epsilon, mode })
    }

    /// `√u` with forward differences.
    pub fn forward() -> Self {
        Self {
            epsilon: f64::EPSILON.sqrt(),
            mode: ProbeMode::Forward,
        }
    }

    /// `∛u` with central differences.
    pub fn central() -> Self {
        Self {
            epsilon: f64::EPSILON.cbrt(),
            mode: ProbeMode::Central,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> ProbeMode {
        self.mode
    }

    /// Same mode with the increment scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.epsilon * factor, self.mode)
    }
}

impl Default for JacobianProbe {
    fn default() -> Self {
        Self::central()
    }
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn jvp_raw(
    field: &dyn VectorField,
    t: f64,
    c: &[f64],
    v: &[f64],
    probe: &JacobianProbe,
) -> Vec<f64> {
    let vn = norm_inf(v);
    if vn == 0.0 {
        return vec![0.0; c.len()];
    }
    let eps = probe.epsilon * (1.0 + norm_inf(c)) / vn;
    let shifted = |s: f64| -> Vec<f64> { c.iter().zip(v).map(|(x, d)| x + s * d).collect() };
    match probe.mode {
        ProbeMode::Forward => {
            let f1 = eval_raw(field, t, &shifted(eps));
            let f0 = eval_raw(field, t, c);
            f1.iter().zip(&f0).map(|(a, b)| (a - b) / eps).collect()
        }
        ProbeMode::Central => {
            let fp = eval_raw(field, t, &shifted(eps));
            let fm = eval_raw(field, t, &shifted(-eps));
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
        }
    }
}

fn finite(v: Vec<f64>, what: &str) -> Result<StateVec> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(StateVec::from_raw(v))
}

/// Finite-difference approximation of `F'(c) v`. A zero direction gives the
/// zero vector without evaluating `F`.
pub fn jvp(
    field: &dyn VectorField,
    t: f64,
    c: &StateVec,
    v: &StateVec,
    probe: &JacobianProbe,
) -> Result<StateVec> {
    c.check_dim(field.dim())?;
    v.check_dim(field.dim())?;
    finite(jvp_raw(field, t, c.as_slice(), v.as_slice(), probe), "Jacobian-vector product")
}

pub(crate) fn commutator_raw(
    f1: &dyn VectorField,
    f2: &dyn VectorField,
    t: f64,
    c: &[f64],
    probe: &JacobianProbe,
) -> Vec<f64> {
    let a = eval_raw(f1, t, c);
    let b = eval_raw(f2, t, c);
    let d2 = jvp_raw(f2, t, c, &a, probe);
    let d1 = jvp_raw(f1, t, c, &b, probe);
    d2.iter().zip(&d1).map(|(x, y)| x - y).collect()
}

/// Nonlinear commutator `[F1, F2](c) = F2'(c) F1(c) − F1'(c) F2(c)`.
///
/// For linear fields `F1 = M1 c`, `F2 = M2 c` this is `(M2 M1 − M1 M2) c`.
pub fn commutator(
    f1: &dyn VectorField,
    f2: &dyn VectorField,
    t: f64,
    c: &StateVec,
    probe: &JacobianProbe,
) -> Result<StateVec> {
    c.check_dim(f1.dim())?;
    c.check_dim(f2.dim())?;
    finite(commutator_raw(f1, f2, t, c.as_slice(), probe), "commutator")
}

/// The commutator `[F1, F2]` as a vector field, so that it can be nested or
/// integrated.
#[derive(Clone)]
pub struct CommutatorField {
    pub f1: Arc<dyn VectorField>,
    pub f2: Arc<dyn VectorField>,
    pub probe: JacobianProbe,
}

impl CommutatorField {
    pub fn new(f1: Arc<dyn VectorField>, f2: Arc<dyn VectorField>, probe: JacobianProbe) -> Self {
        Self { f1, f2, probe }
    }
}

impl VectorField for CommutatorField {
    fn dim(&self) -> usize {
        self.f1.dim()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&commutator_raw(self.f1.as_ref(), self.f2.as_ref(), t, c, &self.probe));
    }
    fn is_autonomous(&self) -> bool {
        self.f1.is_autonomous() && self.f2.is_autonomous()
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("step tau must be positive (got {tau})")));
    }
    Ok(())
}

/// Leading term of the sequential splitting error, `τ [F1, F2](c)`.
pub fn ab_leading_error(
    f1: &dyn VectorField,
    f2: &dyn VectorField,
    t: f64,
    c: &StateVec,
    tau: f64,
    probe: &JacobianProbe,
) -> Result<StateVec> {
    check_tau(tau)?;
    Ok(commutator(f1, f2, t, c, probe)?.scaled(tau))
}

fn strang_error_raw(
    f1: &Arc<dyn VectorField>,
    f2: &Arc<dyn VectorField>,
    t: f64,
    c: &[f64],
    tau: f64,
    probe: JacobianProbe,
) -> Vec<f64> {
    let inner21 = CommutatorField::new(f2.clone(), f1.clone(), probe);
    let inner12 = CommutatorField::new(f1.clone(), f2.clone(), probe);
    let outer2 = commutator_raw(f2.as_ref(), &inner21, t, c, &probe);
    let outer1 = commutator_raw(f1.as_ref(), &inner12, t, c, &probe);
    let s = tau * tau / 24.0;
    outer2.iter().zip(&outer1).map(|(a, b)| s * (a - 2.0 * b)).collect()
}

/// Leading term of the Strang splitting error,
/// `(τ²/24) ([F2,[F2,F1]](c) − 2 [F1,[F1,F2]](c))`.
///
/// The nested brackets are nested finite differences, so the estimate is
/// recomputed with the increment doubled; a relative change above 10% is
/// reported as [`Error::NoisyDerivative`]. Changes below the roundoff floor
/// `1e-6 τ² (1 + ‖c‖∞)(1 + ‖F1(c)‖∞ + ‖F2(c)‖∞)²` are accepted, so nearly
/// commuting fields do not trip the check.
pub fn strang_leading_error(
    f1: &Arc<dyn VectorField>,
    f2: &Arc<dyn VectorField>,
    t: f64,
    c: &StateVec,
    tau: f64,
    probe: &JacobianProbe,
) -> Result<StateVec> {
    check_tau(tau)?;
    c.check_dim(f1.dim())?;
    c.check_dim(f2.dim())?;
    let r1 = finite(
        strang_error_raw(f1, f2, t, c.as_slice(), tau, *probe),
        "Strang error estimate",
    )?;
    let doubled = JacobianProbe {
        epsilon: (probe.epsilon * 2.0).min(JacobianProbe::MAX_EPSILON),
        mode: probe.mode,
    };
    let r2 = finite(
        strang_error_raw(f1, f2, t, c.as_slice(), tau, doubled),
        "Strang error estimate",
    )?;
    let diff = r1.sub(&r2).norm_inf();
    let scale = r1.norm_inf().max(r2.norm_inf());
    let f_scale = 1.0
        + norm_inf(&eval_raw(f1.as_ref(), t, c.as_slice()))
        + norm_inf(&eval_raw(f2.as_ref(), t, c.as_slice()));
    let floor = 1e-6 * tau * tau * (1.0 + c.norm_inf()) * f_scale * f_scale;
    if diff > floor && diff > 0.1 * scale {
        return Err(Error::NoisyDerivative {
            change: if scale > 0.0 { diff / scale } else { f64::INFINITY },
        });
    }
    Ok(r1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FnField, ZeroField};
    use crate::linalg::DenseMatrix;
    use crate::problems::linear::LinearField;

    fn lin(rows: &[Vec<f64>]) -> Arc<dyn VectorField> {
        Arc::new(LinearField(DenseMatrix::from_rows(rows).unwrap()))
    }

    #[test]
    fn jvp_of_square() {
        let f = FnField::new(1, |_, c, o| o[0] = c[0] * c[0]);
        let d = jvp(&f, 0.0, &StateVec::scalar(3.0), &StateVec::scalar(1.0), &JacobianProbe::central())
            .unwrap();
        assert!((d[0] - 6.0).abs() < 1e-6);
        let d = jvp(&f, 0.0, &StateVec::scalar(3.0), &StateVec::scalar(1.0), &JacobianProbe::forward())
            .unwrap();
        assert!((d[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn jvp_of_linear_and_constant() {
        let m = lin(&[vec![1.0, 2.0], vec![-3.0, 0.5]]);
        let c = StateVec::new(vec![10.0, -4.0]).unwrap();
        let v = StateVec::new(vec![0.3, 0.7]).unwrap();
        let d = jvp(m.as_ref(), 0.0, &c, &v, &JacobianProbe::default()).unwrap();
        assert!((d[0] - 1.7).abs() < 1e-6 && (d[1] - (-0.55)).abs() < 1e-6);
        let k = FnField::new(2, |_, _, o| o.copy_from_slice(&[1.0, -2.0]));
        assert_eq!(jvp(&k, 0.0, &c, &v, &JacobianProbe::default()).unwrap(), StateVec::zeros(2));
    }

    #[test]
    fn commutator_identities() {
        let f: Arc<dyn VectorField> = Arc::new(FnField::new(2, |_, c, o| {
            o[0] = c[1] * c[1];
            o[1] = c[0].sin();
        }));
        let c = StateVec::new(vec![0.4, 1.3]).unwrap();
        let p = JacobianProbe::default();
        assert_eq!(commutator(f.as_ref(), f.as_ref(), 0.0, &c, &p).unwrap(), StateVec::zeros(2));
        let k1 = FnField::new(2, |_, _, o| o.copy_from_slice(&[1.0, 2.0]));
        let k2 = FnField::new(2, |_, _, o| o.copy_from_slice(&[-1.0, 0.5]));
        assert_eq!(commutator(&k1, &k2, 0.0, &c, &p).unwrap(), StateVec::zeros(2));
    }

    #[test]
    fn linear_commutator_is_matrix_commutator() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let c = StateVec::new(vec![1.0, 2.0]).unwrap();
        let got = commutator(
            &LinearField(a.clone()),
            &LinearField(b.clone()),
            0.0,
            &c,
            &JacobianProbe::default(),
        )
        .unwrap();
        let expect = b.matmul(&a).sub(&a.matmul(&b)).matvec(c.as_slice());
        for i in 0..2 {
            assert!((got[i] - expect[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn leading_errors_vanish_for_commuting_fields() {
        let a = lin(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = lin(&[vec![-0.5, 0.0], vec![0.0, 3.0]]);
        let c = StateVec::new(vec![0.2, -0.9]).unwrap();
        let p = JacobianProbe::default();
        let e = ab_leading_error(a.as_ref(), b.as_ref(), 0.0, &c, 0.1, &p).unwrap();
        assert!(e.norm_inf() < 1e-9);
        let s = strang_leading_error(&a, &b, 0.0, &c, 0.1, &p).unwrap();
        assert!(s.norm_inf() < 1e-8);
        let zero: Arc<dyn VectorField> = Arc::new(ZeroField(2));
        assert_eq!(strang_leading_error(&zero, &b, 0.0, &c, 0.1, &p).unwrap(), StateVec::zeros(2));
        assert!(ab_leading_error(a.as_ref(), b.as_ref(), 0.0, &c, 0.0, &p).is_err());
    }

    #[test]
    fn probe_bounds() {
        assert!(JacobianProbe::new(1e-12, ProbeMode::Central).is_err());
        assert!(JacobianProbe::new(0.1, ProbeMode::Forward).is_err());
        assert!(JacobianProbe::new(1e-6, ProbeMode::Forward).is_ok());
    }
}
