use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("ranks and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least 2 points are needed, got {0}")]
    TooFewPoints(usize),
    #[error("all ranks are equal; the slope is undefined")]
    DegenerateRanks,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `values` on `ranks`. A constant response has no
/// variance to explain: slope 0 and R² 0.
pub fn rank_metric_regression(ranks: &[f64], values: &[f64]) -> Result<Regression, RegressionError> {
    if ranks.len() != values.len() {
        return Err(RegressionError::LengthMismatch(ranks.len(), values.len()));
    }
    let n = ranks.len();
    if n < 2 {
        return Err(RegressionError::TooFewPoints(n));
    }
    let mean_x = ranks.iter().sum::<f64>() / n as f64;
    let mean_y = values.iter().sum::<f64>() / n as f64;
    let sxx: f64 = ranks.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(RegressionError::DegenerateRanks);
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(Regression { slope: 0.0, intercept: values[0], r_squared: 0.0 });
    }
    let sxy: f64 = ranks.iter().zip(values).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = values.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = ranks.iter().zip(values).map(|(x, y)| (y - (intercept + slope * x)).powi(2)).sum();
    Ok(Regression { slope, intercept, r_squared: 1.0 - ss_res / ss_tot })
}
