//! Scalar root finding and one-dimensional maximization.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a sign change of `f`. Stops when the bracket
/// is narrower than `tol` or after `max_iter` halvings.
pub fn bisect<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} share a sign"
        )));
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Solves `g(x) = target` for increasing `g` on `[lo, hi]` by Newton steps
/// safeguarded with bisection.
pub fn newton_bracketed<G, D>(g: G, dg: D, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let glo = g(lo) - target;
    let ghi = g(hi) - target;
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::NoRoot(format!("target {target} not bracketed on [{lo}, {hi}]")));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let r = g(x) - target;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = dg(x);
        let mut next = x - r / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= rel_tol * x.abs().max(1e-300) || hi - lo <= rel_tol * x.abs().max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::IterationCap(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 400).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_no_sign_change() {
        assert!(matches!(bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-10, 100), Err(Error::NoRoot(_))));
    }

    #[test]
    fn golden_parabola() {
        let (x, fx) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3) + 1.0), 0.0, 1.0, 1e-9).unwrap();
        assert!((x - 0.3).abs() < 1e-8 && (fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_cube_root() {
        let r = newton_bracketed(|x| x * x * x, |x| 3.0 * x * x, 27.0, 0.0, 10.0, 1e-14, 200).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }
}
