//! Co-registered voxel grids and the rigid pose that places them in the world.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label id reserved for background / unsegmented voxels.
pub const BACKGROUND_LABEL: u16 = 0;
/// First-hit value for rays that never cross the hit threshold. Never a valid label.
pub const MISS_LABEL: u16 = u16::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum VolumeError {
    #[error("dimensions must be at least 1 along every axis, got {0:?}")]
    BadDims([usize; 3]),
    #[error("spacing must be positive and finite, got {0:?}")]
    BadSpacing([f64; 3]),
    #[error("expected {expected} values for the grid, got {actual}")]
    ValueCount { expected: usize, actual: usize },
    #[error("label {0} is reserved as the ray-miss sentinel")]
    SentinelLabel(u16),
    #[error("volume dimensions differ: {0:?} vs {1:?}")]
    DimsMismatch([usize; 3], [usize; 3]),
}

/// Grid layout shared by every volume of a dataset: size, voxel spacing (mm) and
/// the position of voxel (0,0,0) in volume space (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self, VolumeError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(VolumeError::BadDims(dims));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(VolumeError::BadSpacing(spacing));
        }
        Ok(Self { dims, spacing, origin })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index in x-fastest order.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Voxel center in volume space (before the scene pose is applied).
    #[inline]
    pub fn voxel_position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing[0].min(self.spacing[1]).min(self.spacing[2])
    }

    /// Volume-space box enclosing every voxel cell (centers ± half a voxel).
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            lo[a] = self.origin[a] - 0.5 * self.spacing[a];
            hi[a] = self.origin[a] + (self.dims[a] as f64 - 0.5) * self.spacing[a];
        }
        (lo, hi)
    }

    pub fn same_dims(&self, other: &Grid) -> Result<(), VolumeError> {
        if self.dims != other.dims {
            return Err(VolumeError::DimsMismatch(self.dims, other.dims));
        }
        Ok(())
    }
}

/// Scalar intensities, exposed as f32 whatever the on-disk sample type.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    pub grid: Grid,
    values: Vec<f32>,
}

impl IntensityVolume {
    pub fn new(grid: Grid, values: Vec<f32>) -> Result<Self, VolumeError> {
        if values.len() != grid.len() {
            return Err(VolumeError::ValueCount { expected: grid.len(), actual: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.grid.index(i, j, k)]
    }
}

/// Per-voxel segment ids. Label 0 is background; 65535 is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub grid: Grid,
    labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(grid: Grid, labels: Vec<u16>) -> Result<Self, VolumeError> {
        if labels.len() != grid.len() {
            return Err(VolumeError::ValueCount { expected: grid.len(), actual: labels.len() });
        }
        if labels.contains(&MISS_LABEL) {
            return Err(VolumeError::SentinelLabel(MISS_LABEL));
        }
        Ok(Self { grid, labels })
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u16 {
        self.labels[self.grid.index(i, j, k)]
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Distinct labels present, ascending.
    pub fn present_labels(&self) -> Vec<u16> {
        let mut seen = vec![false; usize::from(u16::MAX)];
        for &l in &self.labels {
            seen[usize::from(l)] = true;
        }
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(l, _)| l as u16)
            .collect()
    }
}

/// Rigid placement plus uniform scale: `world = translation + scale * R * local`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub scale: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self { translation: [0.0; 3], rotation: [1.0, 0.0, 0.0, 0.0], scale: 1.0 }
    }
}

impl Pose {
    pub const ROTATION_TOLERANCE: f64 = 1e-6;

    pub fn is_valid(&self) -> bool {
        let n2: f64 = self.rotation.iter().map(|c| c * c).sum();
        (n2.sqrt() - 1.0).abs() <= Self::ROTATION_TOLERANCE
            && self.scale > 0.0
            && self.scale.is_finite()
            && self.translation.iter().all(|t| t.is_finite())
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        let n = self.rotation.iter().map(|c| c * c).sum::<f64>().sqrt();
        let [w, x, y, z] = self.rotation.map(|c| c / n);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn transform(&self) -> PoseTransform {
        PoseTransform {
            translation: Vector3::from(self.translation),
            rotation: self.rotation_matrix(),
            scale: self.scale,
        }
    }
}

/// A pose with its rotation matrix precomputed.
#[derive(Debug, Clone, Copy)]
pub struct PoseTransform {
    pub translation: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub scale: f64,
}

impl PoseTransform {
    #[inline]
    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.translation + (self.rotation * local) * self.scale
    }

    #[inline]
    pub fn to_local(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (world - self.translation) / self.scale
    }

    #[inline]
    pub fn direction_to_local(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * dir
    }
}
