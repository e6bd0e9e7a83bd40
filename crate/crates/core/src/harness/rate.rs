use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_errors(e1: f64, e2: f64) -> Result<()> {
    if !(e1 > 0.0 && e2 > 0.0) || !e1.is_finite() || !e2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "convergence rate needs positive finite errors (got {e1:e}, {e2:e})"
        )));
    }
    Ok(())
}

/// Observed order between a resolution and its halving,
/// `ρ = log(err_fine / err_coarse) / log(0.5)`.
pub fn convergence_rate(err_coarse: f64, err_fine: f64) -> Result<f64> {
    check_errors(err_coarse, err_fine)?;
    Ok((err_fine / err_coarse).ln() / 0.5f64.ln())
}

/// Observed order for an arbitrary refinement `h_coarse → h_fine`,
/// `log(e_fine / e_coarse) / log(h_fine / h_coarse)`.
pub fn rate_between(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> Result<f64> {
    check_errors(err_coarse, err_fine)?;
    if !(h_coarse > 0.0 && h_fine > 0.0) || h_coarse == h_fine {
        return Err(Error::InvalidArgument(format!(
            "rate needs two distinct positive resolutions (got {h_coarse}, {h_fine})"
        )));
    }
    Ok((err_fine / err_coarse).ln() / (h_fine / h_coarse).ln())
}

/// Least-squares order estimate over the asymptotic part of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    /// Ladder indices `[first, last]` that entered the fit.
    pub first: usize,
    pub last: usize,
}

/// Successive error ratio below which the finer point is taken to sit on the
/// roundoff floor.
pub const FLOOR_RATIO: f64 = 1.5;

/// Fits `log e = p log h + b` by least squares.
///
/// `h` must be strictly decreasing. Points are scanned from coarse to fine and
/// the scan stops before the first point whose error is zero, non-finite, or
/// less than a factor [`FLOOR_RATIO`] below its predecessor. Of the remaining
/// points, the finest `window` are used (all of them when `window` is `None`).
pub fn fit_order(h: &[f64], err: &[f64], window: Option<usize>) -> Result<OrderFit> {
    if h.len() != err.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: err.len(),
        });
    }
    if h.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("step ladder must be strictly decreasing".into()));
    }
    let usable = |e: f64| e > 0.0 && e.is_finite();
    let mut end = 0;
    if h.is_empty() || !usable(err[0]) {
        return Err(Error::InvalidArgument("no usable error values for an order fit".into()));
    }
    while end + 1 < h.len() && usable(err[end + 1]) && err[end] / err[end + 1] >= FLOOR_RATIO {
        end += 1;
    }
    let count = end + 1;
    let take = window.map_or(count, |w| w.min(count));
    if take < 2 {
        return Err(Error::InvalidArgument(
            "fewer than two points above the roundoff floor".into(),
        ));
    }
    let first = count - take;
    let xs: Vec<f64> = h[first..count].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err[first..count].iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(OrderFit {
        order: sxy / sxx,
        first,
        last: end,
    })
}
