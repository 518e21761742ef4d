//! Adaptive Simpson quadrature used for kernel masses and path integrals.

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// False when the recursion depth ran out before the tolerance was met
    /// or a non-finite integrand value was encountered.
    pub converged: bool,
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, converged: true };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut converged = true;
    let value = recurse(f, a, b, fa, fm, fb, whole, tol, 48, &mut converged);
    if !value.is_finite() {
        converged = false;
    }
    Quadrature { value, converged }
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        *converged = false;
        return left + right;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, converged)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_exponentials() {
        let q = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!(q.converged);
        assert!((q.value - 4.0).abs() < 1e-12);
        let q = adaptive_simpson(&|x| (-x).exp(), 0.0, 20.0, 1e-13);
        assert!((q.value - (1.0 - (-20.0f64).exp())).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = adaptive_simpson(&|x| 1.0 / x, 2.0, 1.0, 1e-12);
        assert!((q.value + std::f64::consts::LN_2).abs() < 1e-11);
    }
}
