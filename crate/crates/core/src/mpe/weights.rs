use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};

/// Largest substep count for which weights are computed exactly.
pub const EXACT_K_LIMIT: u32 = 100;

/// Strictly increasing list of positive substep counts `{k_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct KSequence(Vec<u32>);

impl KSequence {
    pub fn new(k: Vec<u32>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidArgument("empty k sequence".into()));
        }
        if k[0] == 0 {
            return Err(Error::InvalidArgument("k values must be positive".into()));
        }
        if let Some(w) = k.windows(2).find(|w| w[0] >= w[1]) {
            let msg = if w[0] == w[1] {
                format!("duplicate k value {} makes the Vandermonde system singular", w[0])
            } else {
                format!("k sequence must be strictly increasing ({} then {})", w[0], w[1])
            };
            return Err(Error::InvalidArgument(msg));
        }
        Ok(Self(k))
    }

    /// `{1, 2, ..., n}`, the cheapest sequence for order `2n`.
    pub fn natural(n: u32) -> Result<Self> {
        Self::new((1..=n).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Order in `h` of the extrapolated integrator.
    pub fn order(&self) -> usize {
        2 * self.0.len()
    }

    /// Kernel evaluations per step, `Σ k_i`.
    pub fn kernel_evaluations(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    fn max(&self) -> u32 {
        *self.0.last().expect("non-empty")
    }
}

impl TryFrom<Vec<u32>> for KSequence {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<KSequence> for Vec<u32> {
    fn from(k: KSequence) -> Self {
        k.0
    }
}

impl FromStr for KSequence {
    type Err = Error;
    /// Parses a comma-separated list such as `1,2,4`.
    fn from_str(s: &str) -> Result<Self> {
        let k = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad k value `{}`", p.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k)
    }
}

impl fmt::Display for KSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// How the extrapolation weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `c_i = Π_{j≠i} k_i² / (k_i² − k_j²)`.
    ClosedForm,
    /// Gaussian elimination on the moment system `Σ_i c_i k_i^{−2m} = δ_{m0}`.
    Solve,
}

/// Extrapolation weights for a [`KSequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpeWeights {
    k: KSequence,
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl MpeWeights {
    pub fn k(&self) -> &KSequence {
        &self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact rational weights, available when every `k_i ≤ EXACT_K_LIMIT`.
    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Residuals of the moment conditions, `Σ c_i k_i^{−2m} − δ_{m0}` for
    /// `m = 0..n−1`, evaluated in floating point.
    pub fn moment_residuals(&self) -> Vec<f64> {
        (0..self.k.len())
            .map(|m| {
                let s: f64 = self
                    .values
                    .iter()
                    .zip(self.k.as_slice())
                    .map(|(c, &k)| c * (k as f64).powi(-2 * m as i32))
                    .sum();
                if m == 0 {
                    s - 1.0
                } else {
                    s
                }
            })
            .collect()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn closed_form_exact(k: &[u32]) -> Vec<BigRational> {
    let sq: Vec<BigInt> = k.iter().map(|&x| BigInt::from(x) * BigInt::from(x)).collect();
    (0..k.len())
        .map(|i| {
            let mut c = BigRational::one();
            for j in 0..k.len() {
                if j != i {
                    c *= BigRational::new(sq[i].clone(), &sq[i] - &sq[j]);
                }
            }
            c
        })
        .collect()
}

fn closed_form_f64(k: &[u32]) -> Vec<f64> {
    (0..k.len())
        .map(|i| {
            let ki = (k[i] as f64).powi(2);
            k.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &kj)| ki / (ki - (kj as f64).powi(2)))
                .product()
        })
        .collect()
}

fn solve_exact(k: &[u32]) -> Result<Vec<BigRational>> {
    let n = k.len();
    // Row m holds k_i^{-2m}; augmented column is the right-hand side e_0.
    let inv_sq: Vec<BigRational> = k
        .iter()
        .map(|&x| BigRational::new(BigInt::one(), BigInt::from(x) * BigInt::from(x)))
        .collect();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|m| {
            let mut row: Vec<BigRational> = inv_sq
                .iter()
                .map(|r| num_traits::pow::pow(r.clone(), m))
                .collect();
            row.push(if m == 0 { BigRational::one() } else { BigRational::zero() });
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !rows[r][col].is_zero()).ok_or(Error::Singular {
            pivot: 0.0,
            threshold: 0.0,
        })?;
        rows.swap(col, pivot);
        let p = rows[col][col].clone();
        for v in rows[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for cidx in col..=n {
                    let delta = &f * &rows[col][cidx];
                    rows[r][cidx] -= delta;
                }
            }
        }
    }
    Ok(rows.into_iter().map(|mut r| r.pop().expect("augmented")).collect())
}

fn solve_f64(k: &[u32]) -> Result<Vec<f64>> {
    let n = k.len();
    let mut v = DenseMatrix::zeros(n, n);
    for m in 0..n {
        for (i, &ki) in k.iter().enumerate() {
            v[(m, i)] = (ki as f64).powi(-2 * m as i32);
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    Ok(Lu::factor(&v)?.solve(&rhs))
}

/// Extrapolation weights. Computed in exact rational arithmetic when every
/// `k_i ≤ EXACT_K_LIMIT`, in floating point otherwise.
pub fn mpe_weights(k: &KSequence, mode: WeightMode) -> Result<MpeWeights> {
    if k.max() > EXACT_K_LIMIT {
        return mpe_weights_f64(k, mode);
    }
    let exact = match mode {
        WeightMode::ClosedForm => closed_form_exact(k.as_slice()),
        WeightMode::Solve => solve_exact(k.as_slice())?,
    };
    Ok(MpeWeights {
        k: k.clone(),
        values: exact.iter().map(rational_to_f64).collect(),
        exact: Some(exact),
    })
}

/// Extrapolation weights computed entirely in `f64`.
pub fn mpe_weights_f64(k: &KSequence, mode: WeightMode) -> Result<MpeWeights> {
    let values = match mode {
        WeightMode::ClosedForm => closed_form_f64(k.as_slice()),
        WeightMode::Solve => solve_f64(k.as_slice())?,
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("extrapolation weights".into()));
    }
    Ok(MpeWeights {
        k: k.clone(),
        values,
        exact: None,
    })
}
