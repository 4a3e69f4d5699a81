use super::ToleranceConfig;
use crate::error::{Error, Result};

/// Outcome of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootReport {
    pub root: f64,
    /// Width of the final bracket around `root`.
    pub width: f64,
    pub iterations: usize,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect_root<F>(f: F, lo: f64, hi: f64, tol: &ToleranceConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    bisect_root_report(f, lo, hi, tol).map(|r| r.root)
}

/// Like [`bisect_root`], also returning the final bracket width and
/// iteration count.
pub fn bisect_root_report<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: &ToleranceConfig,
) -> Result<RootReport>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Domain("function is NaN at a bracket end".into()));
    }
    if f_lo == 0.0 {
        return Ok(RootReport {
            root: lo,
            width: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(RootReport {
            root: hi,
            width: 0.0,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;

    for iteration in 1..=tol.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            // Adjacent floats: the bracket cannot shrink further.
            return Ok(RootReport {
                root: mid,
                width: hi - lo,
                iterations: iteration,
            });
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(RootReport {
                root: mid,
                width: 0.0,
                iterations: iteration,
            });
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        let root = lo + 0.5 * (hi - lo);
        if hi - lo < tol.width_for(root) {
            return Ok(RootReport {
                root,
                width: hi - lo,
                iterations: iteration,
            });
        }
    }
    Err(Error::Convergence {
        iterations: tol.max_iter,
    })
}
