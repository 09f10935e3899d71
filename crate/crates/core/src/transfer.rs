use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransferError {
    #[error("a transfer function needs at least 2 control points, got {0}")]
    TooFewPoints(usize),
    #[error("control point intensities must be strictly increasing (point {0})")]
    NotIncreasing(usize),
    #[error("opacity {1} at point {0} is outside [0, 1]")]
    OpacityRange(usize, f32),
}

/// Piecewise-linear intensity → opacity map.
#[derive(Debug, Clone, PartialEq)]
pub struct OpacityTransferFunction {
    points: Vec<(f32, f32)>,
}

impl OpacityTransferFunction {
    pub fn new(points: Vec<(f32, f32)>) -> Result<Self, TransferError> {
        if points.len() < 2 {
            return Err(TransferError::TooFewPoints(points.len()));
        }
        for (idx, &(x, o)) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&o) {
                return Err(TransferError::OpacityRange(idx, o));
            }
            if !x.is_finite() || (idx > 0 && !(x > points[idx - 1].0)) {
                return Err(TransferError::NotIncreasing(idx));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f32, f32)] {
        &self.points
    }

    /// Linear interpolation between the bracketing control points, clamped to the
    /// end opacities outside the control range.
    pub fn eval(&self, intensity: f32) -> f32 {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if !(intensity > first.0) {
            return first.1;
        }
        if intensity >= last.0 {
            return last.1;
        }
        // first control point strictly above the query; always in 1..len
        let hi = pts.partition_point(|p| p.0 <= intensity);
        let (x0, o0) = pts[hi - 1];
        let (x1, o1) = pts[hi];
        o0 + (o1 - o0) * ((intensity - x0) / (x1 - x0))
    }
}
