//! One-dimensional quadrature rules.

use crate::error::{Error, Result};

/// Adaptive Simpson rule with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: usize) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let v = simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut ok);
    if !ok {
        return Err(Error::NoConvergence { iterations: max_depth, residual: tol });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    ok: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        *ok = false;
        return left + right;
    }
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

/// Composite trapezoid rule on `n` equal panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Observed order `log2(|I_1 - I_2| / |I_2 - I_4|)` from three successively
/// halved step sizes.
pub fn observed_order(coarse: f64, mid: f64, fine: f64) -> f64 {
    ((coarse - mid) / (mid - fine)).abs().log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_on_smooth_and_peaked_integrands() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-13, 50).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive_simpson(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 60).unwrap();
        let exact = 2.0 * (1.0 / 1e-4f64).sqrt() * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((v - exact).abs() < 1e-7 * exact);
        assert_eq!(adaptive_simpson(f64::exp, 1.0, 1.0, 1e-12, 10).unwrap(), 0.0);
        assert!(adaptive_simpson(|x| x.abs().sqrt().recip(), -1.0, 1.0, 1e-14, 5).is_err());
    }

    #[test]
    fn trapezoid_is_second_order() {
        let f = |x: f64| x.exp();
        let exact = 1f64.exp() - 1.0;
        let e: Vec<f64> = [8, 16, 32].iter().map(|&n| trapezoid(f, 0.0, 1.0, n)).collect();
        let order = observed_order(e[0], e[1], e[2]);
        assert!((order - 2.0).abs() < 0.01, "{order}");
        assert!((e[2] - exact).abs() < 2e-4);
    }
}
