//! View-similarity measures between renders of the same camera, plus rank
//! aggregation and rank-vs-metric regression.

pub mod plackett_luce;
pub mod regression;

use thiserror::Error;

use crate::frame::{DepthBuffer, SegBuffer};

pub use plackett_luce::{global_rank, log_likelihood, plackett_luce_fit, PlFit, PlOptions, RankingData, RankingError, WorthVector};
pub use regression::{rank_metric_regression, Regression, RegressionError};

#[derive(Debug, Error, PartialEq)]
#[error("buffers differ in size: {0}x{1} vs {2}x{3}")]
pub struct DimsMismatch(pub u32, pub u32, pub u32, pub u32);

fn same_size(a: (u32, u32), b: (u32, u32)) -> Result<(), DimsMismatch> {
    if a != b {
        return Err(DimsMismatch(a.0, a.1, b.0, b.1));
    }
    Ok(())
}

/// Fraction of pixels whose first-hit labels differ. The miss sentinel compares
/// like any other label, so hit-vs-miss counts as a mismatch.
pub fn mae_first_segment(reference: &SegBuffer, test: &SegBuffer) -> Result<f32, DimsMismatch> {
    same_size((reference.width, reference.height), (test.width, test.height))?;
    let n = reference.data.len();
    if n == 0 {
        return Ok(0.0);
    }
    let differing = reference.data.iter().zip(&test.data).filter(|(a, b)| a != b).count();
    Ok((differing as f64 / n as f64) as f32)
}

/// Root-mean-square depth difference over every pixel (misses carry depth 1.0).
pub fn rmse_depth(reference: &DepthBuffer, test: &DepthBuffer) -> Result<f32, DimsMismatch> {
    same_size((reference.width, reference.height), (test.width, test.height))?;
    let n = reference.data.len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok((sum / n as f64).sqrt() as f32)
}
