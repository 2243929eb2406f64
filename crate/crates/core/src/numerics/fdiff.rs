//! Central finite-difference gradient checker.

use crate::error::{Error, Result};

/// Compares `analytic` against central differences of `f` over `params`.
///
/// Returns the max over coordinates of `|analytic - numeric| / max(1, |numeric|)`.
/// `params` is probed in place and restored before returning.
pub fn finite_diff_check(
    params: &mut [f64],
    mut f: impl FnMut(&[f64]) -> f64,
    analytic: &[f64],
    h: f64,
) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::Config(format!("finite_diff_check step {h} outside [1e-6, 1e-3]")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Dim(format!(
            "analytic gradient length {} vs {} params",
            analytic.len(),
            params.len()
        )));
    }
    let mut max_err = 0.0f64;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + h;
        let fp = f(params);
        params[i] = orig - h;
        let fm = f(params);
        params[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!("non-finite objective at coordinate {i}")));
        }
        let numeric = (fp - fm) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}
