//! One-step integrators: classical RK4 and the adaptive Dormand-Prince 5(4)
//! pair used as the high-accuracy reference flow.

use super::{eval, eval_raw, SplitSystem, StateVec, VectorField};
use crate::error::{Error, Result};

const MAX_STEPS: usize = 2_000_000;

/// One classical RK4 step of size `dt`.
pub fn rk4_step(field: &dyn VectorField, t: f64, dt: f64, c: &StateVec) -> Result<StateVec> {
    let k1 = eval(field, t, c)?;
    let mut tmp = c.clone();
    tmp.axpy(0.5 * dt, &k1);
    let k2 = eval(field, t + 0.5 * dt, &tmp)?;
    let mut tmp = c.clone();
    tmp.axpy(0.5 * dt, &k2);
    let k3 = eval(field, t + 0.5 * dt, &tmp)?;
    let mut tmp = c.clone();
    tmp.axpy(dt, &k3);
    let k4 = eval(field, t + dt, &tmp)?;
    let mut out = c.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    Ok(out)
}

/// Discrete trajectory with interpolation between nodes.
///
/// With derivatives recorded the interpolant is the cubic Hermite spline,
/// otherwise piecewise linear. Queries outside the node range are clamped.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateVec>,
    derivs: Option<Vec<StateVec>>,
}

impl Trajectory {
    pub fn start(t0: f64, c: StateVec) -> Self {
        Self {
            times: vec![t0],
            states: vec![c],
            derivs: None,
        }
    }

    pub fn push(&mut self, t: f64, c: StateVec) {
        self.times.push(t);
        self.states.push(c);
    }

    /// A trajectory that is constant in time.
    pub fn constant(t0: f64, t1: f64, c: StateVec) -> Self {
        Self {
            times: vec![t0, t1],
            states: vec![c.clone(), c],
            derivs: None,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateVec] {
        &self.states
    }

    pub fn last(&self) -> &StateVec {
        self.states.last().expect("trajectory has at least one node")
    }

    pub fn at(&self, t: f64) -> StateVec {
        let n = self.times.len();
        if n == 1 {
            return self.states[0].clone();
        }
        let forward = self.times[n - 1] >= self.times[0];
        let key = |x: f64| if forward { x } else { -x };
        let tk = key(t);
        if tk <= key(self.times[0]) {
            return self.states[0].clone();
        }
        if tk >= key(self.times[n - 1]) {
            return self.states[n - 1].clone();
        }
        let i = self.times.partition_point(|&s| key(s) <= tk).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        match &self.derivs {
            None => StateVec::from_raw(
                y0.as_slice()
                    .iter()
                    .zip(y1.as_slice())
                    .map(|(a, b)| a + s * (b - a))
                    .collect(),
            ),
            Some(d) => {
                let (d0, d1) = (&d[i], &d[i + 1]);
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                StateVec::from_raw(
                    (0..y0.dim())
                        .map(|j| {
                            h00 * y0[j] + h10 * dt * d0[j] + h01 * y1[j] + h11 * dt * d1[j]
                        })
                        .collect(),
                )
            }
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lincomb(y: &[f64], dt: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (w, k) in terms {
        if *w != 0.0 {
            for (o, x) in out.iter_mut().zip(k.iter()) {
                *o += dt * w * x;
            }
        }
    }
    out
}

fn dopri5_core(
    field: &dyn VectorField,
    t0: f64,
    h: f64,
    c: &StateVec,
    tol: f64,
    mut record: Option<&mut Trajectory>,
) -> Result<StateVec> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    c.check_dim(field.dim())?;
    if h == 0.0 {
        return Ok(c.clone());
    }
    // Step control runs a decade tighter than requested so the accumulated
    // error over the interval stays within `tol`.
    let atol = 0.1 * tol;
    let rtol = 0.1 * tol;
    let dir = h.signum();
    let t_end = t0 + h;
    let mut t = t0;
    let mut y = c.as_slice().to_vec();
    let mut k1 = eval_raw(field, t, &y);
    if k1.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("reference integrator".into()));
    }
    if let Some(r) = record.as_deref_mut() {
        r.derivs = Some(vec![StateVec::from_raw(k1.clone())]);
    }

    let n = y.len() as f64;
    let scaled_norm = |v: &[f64], y: &[f64]| -> f64 {
        (v.iter()
            .zip(y)
            .map(|(a, b)| {
                let s = atol + rtol * b.abs();
                (a / s) * (a / s)
            })
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled_norm(&y, &y);
    let d1 = scaled_norm(&k1, &y);
    let mut dt = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    dt = dt.min(h.abs()).max(1e-12 * h.abs()) * dir;

    for _ in 0..MAX_STEPS {
        if (t_end - t) * dir <= 0.0 {
            break;
        }
        if (t + dt - t_end) * dir > 0.0 {
            dt = t_end - t;
        }
        let y2 = lincomb(&y, dt, &[(A21, &k1)]);
        let k2 = eval_raw(field, t + C2 * dt, &y2);
        let y3 = lincomb(&y, dt, &[(A31, &k1), (A32, &k2)]);
        let k3 = eval_raw(field, t + C3 * dt, &y3);
        let y4 = lincomb(&y, dt, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = eval_raw(field, t + C4 * dt, &y4);
        let y5 = lincomb(&y, dt, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = eval_raw(field, t + C5 * dt, &y5);
        let y6 = lincomb(
            &y,
            dt,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let k6 = eval_raw(field, t + dt, &y6);
        let y_new = lincomb(
            &y,
            dt,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = eval_raw(field, t + dt, &y_new);

        let err_vec: Vec<f64> = (0..y.len())
            .map(|i| {
                dt * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            })
            .collect();
        let scale: Vec<f64> = y.iter().zip(&y_new).map(|(a, b)| a.abs().max(b.abs())).collect();
        let err = scaled_norm(&err_vec, &scale);

        if !err.is_finite() {
            dt *= 0.2;
        } else if err <= 1.0 {
            t = if (t_end - (t + dt)) * dir <= 0.0 { t_end } else { t + dt };
            y = y_new;
            k1 = k7;
            if let Some(r) = record.as_deref_mut() {
                r.push(t, StateVec::from_raw(y.clone()));
                if let Some(d) = r.derivs.as_mut() {
                    d.push(StateVec::from_raw(k1.clone()));
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            dt *= fac;
        } else {
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        if dt.abs() < 1e-14 * t.abs().max(h.abs()).max(1.0) {
            return Err(Error::StepUnderflow { t, h: dt });
        }
    }
    if (t_end - t) * dir > 0.0 {
        return Err(Error::StepBudget(MAX_STEPS));
    }
    let out = StateVec::from_raw(y);
    if !out.is_finite() {
        return Err(Error::NonFinite("reference integrator".into()));
    }
    Ok(out)
}

/// Adaptive Dormand-Prince 5(4) solution of `c' = F(t, c)` over `[t0, t0 + h]`
/// with absolute and relative tolerance `tol`.
pub fn dopri5(field: &dyn VectorField, t0: f64, h: f64, c: &StateVec, tol: f64) -> Result<StateVec> {
    dopri5_core(field, t0, h, c, tol, None)
}

/// Like [`dopri5`] but records every accepted step and its derivative, giving a
/// Hermite-interpolable dense trajectory.
pub fn dopri5_trajectory(
    field: &dyn VectorField,
    t0: f64,
    h: f64,
    c: &StateVec,
    tol: f64,
) -> Result<Trajectory> {
    let mut traj = Trajectory::start(t0, c.clone());
    if h == 0.0 {
        return Ok(traj);
    }
    dopri5_core(field, t0, h, c, tol, Some(&mut traj))?;
    Ok(traj)
}

/// High-accuracy solution of the full problem `u' = A(u) + B(u)` over one
/// interval, used as the oracle for splitting errors.
pub fn reference_flow(sys: &SplitSystem, t0: f64, h: f64, c: &StateVec, tol: f64) -> Result<StateVec> {
    let field = sys.full();
    dopri5(field.as_ref(), t0, h, c, tol)
}
