//! Ordinary least squares on a line.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("line fit needs at least two paired samples"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("line fit received a non-finite sample"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("line fit abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).abs())
        .fold(0.0, f64::max);
    Ok(LineFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Fits `y = C x^slope` by least squares in log-log coordinates.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("power-law fit needs positive samples"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let x: Vec<f64> = (1..20).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-13);
        assert!((f.intercept.exp() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[0.0, 2.0]).is_err());
        assert!(fit_power_law(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
