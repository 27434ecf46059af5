//! Least-squares slopes and observed convergence orders.

use crate::error::{Error, Result};

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae but {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Slope of `log(value)` against `log(scale)`.
pub fn loglog_slope(scale: &[f64], value: &[f64]) -> Result<f64> {
    if value.iter().chain(scale).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = scale.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = value.iter().map(|v| v.ln()).collect();
    fit_slope(&lx, &ly)
}

/// Observed orders `log2(e_k / e_{k+1})` for errors on a ladder that halves
/// the mesh at each level.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.5, 7.0];
        assert!((fit_slope(&x, &y).unwrap() - 2.5).abs() < 1e-15);
        assert!(fit_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn power_law() {
        let e = [0.1, 0.01, 0.001];
        let v: Vec<f64> = e.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((loglog_slope(&e, &v).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(observed_orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
    }
}
