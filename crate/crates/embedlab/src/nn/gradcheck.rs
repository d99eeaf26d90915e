//! Finite-difference verification of analytic gradients.

/// Step size for central differences.
pub const DIFF_STEP: f64 = 1e-5;

/// Central-difference gradient of a scalar function at `params`.
pub fn central_diff_gradient<F: Fn(&[f64]) -> f64>(f: &F, params: &[f64], h: f64) -> Vec<f64> {
    let mut buf = params.to_vec();
    let mut grad = vec![0.0; params.len()];
    for i in 0..params.len() {
        let orig = buf[i];
        buf[i] = orig + h;
        let plus = f(&buf);
        buf[i] = orig - h;
        let minus = f(&buf);
        buf[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Max over coordinates of |numeric - analytic| / max(|numeric| + |analytic|, 1e-8).
pub fn max_rel_error(numeric: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(numeric.len(), analytic.len());
    numeric
        .iter()
        .zip(analytic)
        .map(|(&n, &a)| (n - a).abs() / (n.abs() + a.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Compares the analytic gradient of `f` at `params` against central
/// differences with step `h`; returns the max relative error.
pub fn grad_check<F: Fn(&[f64]) -> f64>(f: &F, params: &[f64], analytic: &[f64], h: f64) -> f64 {
    let numeric = central_diff_gradient(f, params, h);
    max_rel_error(&numeric, analytic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        let f = |w: &[f64]| w[0] * w[0];
        let err = grad_check(&f, &[3.0], &[6.0], DIFF_STEP);
        assert!(err < 1e-8, "rel err {err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let f = |w: &[f64]| w[0] * w[0];
        let err = grad_check(&f, &[3.0], &[5.0], DIFF_STEP);
        assert!(err > 1e-2);
    }
}
