//! Least-squares slopes in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope; zero for an exact fit.
    #[serde(default)]
    pub slope_stderr: f64,
}

/// Ordinary least squares of `log value` against `log h`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "slope fit needs at least 3 points (got {})",
            points.len()
        )));
    }
    if let Some(&(h, v)) = points
        .iter()
        .find(|(h, v)| !(*h > 0.0 && *v > 0.0 && h.is_finite() && v.is_finite()))
    {
        return Err(Error::DegenerateInput(format!(
            "slope fit needs positive finite data (got h = {h}, value = {v})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateInput(
            "slope fit needs at least two distinct h values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let slope_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
        slope_stderr,
    })
}
