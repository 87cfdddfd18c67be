//! Least-squares slope fits in log-log space.

use serde::Serialize;

use crate::error::{Result, SfError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    /// `ln` of the abscissae (step or spacing).
    pub x: Vec<f64>,
    /// `ln` of the errors.
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS deviation of the points from the fitted line.
    pub residual: f64,
}

impl SlopeFit {
    /// Fit `ln(err) = slope · ln(step) + intercept`.
    pub fn fit(steps: &[f64], errors: &[f64]) -> Result<SlopeFit> {
        if steps.len() != errors.len() {
            return Err(SfError::Fit("steps and errors differ in length".into()));
        }
        if steps.len() < 3 {
            return Err(SfError::Fit(format!("need at least 3 points, got {}", steps.len())));
        }
        if steps.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SfError::Fit("steps and errors must be positive and finite".into()));
        }
        let x: Vec<f64> = steps.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
        let inc = x.windows(2).all(|w| w[1] > w[0]);
        let dec = x.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(SfError::Fit("abscissae must be strictly monotone".into()));
        }
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (x.iter().zip(&y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
        Ok(SlopeFit { x, y, slope, intercept, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(4)).collect();
        let f = SlopeFit::fit(&h, &e).unwrap();
        assert!((f.slope - 4.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SlopeFit::fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(SlopeFit::fit(&[1.0, 3.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(SlopeFit::fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 3.0]).is_err());
    }
}
