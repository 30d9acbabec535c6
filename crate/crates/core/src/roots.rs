//! Bracketed scalar root finding for monotone functions.

use crate::error::{Error, Result};

/// Widen `[lo, hi]` symmetrically until `f` changes sign across it.
///
/// Each step doubles the width. Returns the bracket together with the
/// function values at its ends.
pub fn expand_bracket<F>(
    f: F,
    lo: f64,
    hi: f64,
    max_doublings: usize,
) -> Result<(f64, f64, f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if hi - lo <= 0.0 {
        lo -= 0.5;
        hi += 0.5;
    }
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..=max_doublings {
        if !flo.is_finite() || !fhi.is_finite() {
            break;
        }
        if flo == 0.0 || fhi == 0.0 || flo.signum() != fhi.signum() {
            return Ok((lo, hi, flo, fhi));
        }
        let width = hi - lo;
        lo -= width / 2.0;
        hi += width / 2.0;
        flo = f(lo);
        fhi = f(hi);
    }
    Err(Error::NoRoot(format!(
        "no sign change found after {max_doublings} bracket doublings (last bracket [{lo}, {hi}])"
    )))
}

/// Plain bisection on a sign-changing bracket.
///
/// Stops once the bracket is narrower than `tol`, the midpoint hits an
/// exact zero, or the midpoint is no longer strictly inside the bracket.
pub fn bisect<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    fhi: f64,
    tol: f64,
    max_iter: usize,
) -> f64
where
    F: Fn(f64) -> f64,
{
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    lo + 0.5 * (hi - lo)
}

/// Root of a monotone `f`, searching outward from `[lo, hi]`.
pub fn find_root<F>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_doublings: usize,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi, flo, fhi) = expand_bracket(&f, lo, hi, max_doublings)?;
    Ok(bisect(&f, lo, hi, flo, fhi, tol, max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_of_two() {
        let r = find_root(|x| x * x * x - 2.0, 0.0, 1.0, 1e-14, 60, 200).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn decreasing_function_far_outside_bracket() {
        let r = find_root(|x| 1000.0 - x, -1.0, 1.0, 1e-12, 60, 200).unwrap();
        assert!((r - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_bracket_is_widened() {
        let r = find_root(|x| x - 0.25, 3.0, 3.0, 1e-13, 60, 200).unwrap();
        assert!((r - 0.25).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_reports_error() {
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 10, 200).unwrap_err();
        assert!(matches!(err, Error::NoRoot(_)));
    }
}
