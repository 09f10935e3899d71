//! Segment-aware sphere clipping and opacity-volume construction.
//!
//! A voxel is hidden when at least one sphere contains its center *and* that
//! sphere's mask marks the voxel's label as clippable. Surviving voxels get their
//! opacity from the transfer function; hidden voxels get exactly 0.

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::transfer::OpacityTransferFunction;
use crate::volume::{Grid, IntensityVolume, LabelMap, Pose, PoseTransform, VolumeError};

pub const DEFAULT_MIN_RADIUS: f64 = 1.0;
pub const DEFAULT_MAX_RADIUS: f64 = 500.0;

#[derive(Debug, Error, PartialEq)]
pub enum ClipError {
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("sphere radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("label {label} is outside the mask universe 0..={max}")]
    LabelOutOfRange { label: u16, max: usize },
}

/// Per-sphere set of clippable labels.
///
/// The mask has a fixed universe `0..len`; querying a label beyond it answers
/// "not clippable". Equality compares the set of clippable labels only.
#[derive(Debug, Clone, Default)]
pub struct ClipMask {
    words: Vec<u64>,
    len: usize,
}

impl ClipMask {
    pub fn none(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn all(len: usize) -> Self {
        let mut m = Self::none(len);
        m.fill(true);
        m
    }

    /// Mask whose universe is just large enough for the given labels.
    pub fn from_labels<I: IntoIterator<Item = u16>>(labels: I) -> Self {
        let labels: Vec<u16> = labels.into_iter().collect();
        let len = labels.iter().map(|&l| usize::from(l) + 1).max().unwrap_or(0);
        let mut m = Self::none(len);
        for l in labels {
            m.words[usize::from(l) / 64] |= 1 << (l % 64);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, label: u16) -> bool {
        let l = usize::from(label);
        l < self.len && self.words[l / 64] & (1 << (l % 64)) != 0
    }

    fn check(&self, label: u16) -> Result<usize, ClipError> {
        let l = usize::from(label);
        if l >= self.len {
            return Err(ClipError::LabelOutOfRange { label, max: self.len.saturating_sub(1) });
        }
        Ok(l)
    }

    pub fn set(&mut self, label: u16, clippable: bool) -> Result<(), ClipError> {
        let l = self.check(label)?;
        if clippable {
            self.words[l / 64] |= 1 << (l % 64);
        } else {
            self.words[l / 64] &= !(1 << (l % 64));
        }
        Ok(())
    }

    pub fn toggle(&mut self, label: u16) -> Result<(), ClipError> {
        let l = self.check(label)?;
        self.words[l / 64] ^= 1 << (l % 64);
        Ok(())
    }

    pub fn fill(&mut self, clippable: bool) {
        for w in &mut self.words {
            *w = if clippable { u64::MAX } else { 0 };
        }
        let tail = self.len % 64;
        if clippable && tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Clippable labels, ascending.
    pub fn labels(&self) -> impl Iterator<Item = u16> + '_ {
        (0..self.len).filter(|&l| self.words[l / 64] & (1 << (l % 64)) != 0).map(|l| l as u16)
    }

    /// Same clippable set over a different universe size; labels beyond it are dropped.
    pub fn resized(&self, len: usize) -> Self {
        let mut m = Self::none(len);
        for l in self.labels().filter(|&l| usize::from(l) < len) {
            m.words[usize::from(l) / 64] |= 1 << (l % 64);
        }
        m
    }
}

impl PartialEq for ClipMask {
    fn eq(&self, other: &Self) -> bool {
        let n = self.words.len().max(other.words.len());
        (0..n).all(|i| self.words.get(i).copied().unwrap_or(0) == other.words.get(i).copied().unwrap_or(0))
    }
}

/// A world-space sphere (mm) with its clipping mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippingSphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub mask: ClipMask,
}

impl ClippingSphere {
    pub fn new(center: [f64; 3], radius: f64, mask: ClipMask) -> Result<Self, ClipError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ClipError::BadRadius(radius));
        }
        Ok(Self { center, radius, mask })
    }

    /// Strict containment: points exactly on the surface are outside.
    #[inline]
    pub fn contains_point(&self, p: &Vector3<f64>) -> bool {
        (p - Vector3::from(self.center)).norm_squared() < self.radius * self.radius
    }
}

/// Per-voxel opacity after clipping, co-dimensioned with the source volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct OpacityVolume {
    pub grid: Grid,
    values: Vec<f32>,
}

impl OpacityVolume {
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

    pub(crate) fn from_parts(grid: Grid, values: Vec<f32>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }
}

/// Clipping evaluator with the pose resolved once.
struct Clipper<'a> {
    grid: Grid,
    pose: PoseTransform,
    spheres: Vec<&'a ClippingSphere>,
}

impl<'a> Clipper<'a> {
    fn new(grid: Grid, spheres: &'a [ClippingSphere], pose: &Pose) -> Self {
        // a sphere with an empty mask can never clip anything
        let spheres = spheres.iter().filter(|s| !s.mask.is_empty()).collect();
        Self { grid, pose: pose.transform(), spheres }
    }

    #[inline]
    fn clipped(&self, i: usize, j: usize, k: usize, label: u16) -> bool {
        if self.spheres.is_empty() {
            return false;
        }
        let world = self.pose.to_world(&self.grid.voxel_position(i, j, k));
        self.spheres.iter().any(|s| s.mask.contains(label) && s.contains_point(&world))
    }
}

/// Whether voxel `(i, j, k)` is hidden by any of `spheres`.
pub fn is_clipped(voxel: [usize; 3], labels: &LabelMap, spheres: &[ClippingSphere], pose: &Pose) -> bool {
    let [i, j, k] = voxel;
    debug_assert!(i < labels.grid.dims[0] && j < labels.grid.dims[1] && k < labels.grid.dims[2]);
    Clipper::new(labels.grid, spheres, pose).clipped(i, j, k, labels.get(i, j, k))
}

/// Builds the clipped opacity volume. Slices are processed in parallel; each voxel
/// is computed independently so the result does not depend on the schedule.
pub fn compute_opacity_volume(
    intensity: &IntensityVolume,
    labels: &LabelMap,
    tf: &OpacityTransferFunction,
    spheres: &[ClippingSphere],
    pose: &Pose,
) -> Result<OpacityVolume, ClipError> {
    intensity.grid.same_dims(&labels.grid)?;
    let grid = labels.grid;
    let clipper = Clipper::new(grid, spheres, pose);
    let [nx, ny, _] = grid.dims;
    let mut values = vec![0f32; grid.len()];
    values.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slice)| {
        for j in 0..ny {
            for i in 0..nx {
                let idx = grid.index(i, j, k);
                slice[i + nx * j] = if clipper.clipped(i, j, k, labels.labels()[idx]) {
                    0.0
                } else {
                    tf.eval(intensity.values()[idx])
                };
            }
        }
    });
    Ok(OpacityVolume { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new([n, n, n], [1.0; 3], [0.0; 3]).unwrap()
    }

    #[test]
    fn mask_basics() {
        let mut m = ClipMask::all(70);
        assert_eq!(m.count(), 70);
        m.toggle(3).unwrap();
        assert!(!m.contains(3));
        assert_eq!(m.count(), 69);
        m.toggle(3).unwrap();
        assert_eq!(m, ClipMask::all(70));
        assert!(!m.contains(70));
        assert_eq!(m.toggle(70), Err(ClipError::LabelOutOfRange { label: 70, max: 69 }));
        m.fill(false);
        assert!(m.is_empty());
    }

    #[test]
    fn mask_equality_ignores_universe_size() {
        let a = ClipMask::from_labels([1, 3]);
        let mut b = ClipMask::none(130);
        b.set(1, true).unwrap();
        b.set(3, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.labels().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(b.resized(2).labels().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn voxel_inside_sphere_with_mask_bit_is_clipped() {
        let g = Grid::new([12, 12, 12], [1.0; 3], [-1.0, -1.0, -1.0]).unwrap();
        let labels = LabelMap::new(g, vec![3; g.len()]).unwrap();
        let s = ClippingSphere::new([0.0; 3], 5.0, ClipMask::from_labels([3])).unwrap();
        // voxel (2,2,2) sits at world (1,1,1)
        assert!(is_clipped([2, 2, 2], &labels, std::slice::from_ref(&s), &Pose::default()));
        // voxel (11,1,1) sits at world (10,0,0)
        assert!(!is_clipped([11, 1, 1], &labels, std::slice::from_ref(&s), &Pose::default()));
    }

    #[test]
    fn any_sphere_suffices() {
        let g = grid(3);
        let labels = LabelMap::new(g, vec![2; g.len()]).unwrap();
        let a = ClippingSphere::new([1.0; 3], 2.0, ClipMask::from_labels([1])).unwrap();
        let b = ClippingSphere::new([1.0; 3], 2.0, ClipMask::from_labels([2])).unwrap();
        assert!(!is_clipped([1, 1, 1], &labels, std::slice::from_ref(&a), &Pose::default()));
        assert!(is_clipped([1, 1, 1], &labels, &[a, b], &Pose::default()));
    }

    #[test]
    fn surface_points_are_not_inside() {
        let s = ClippingSphere::new([0.0; 3], 2.0, ClipMask::all(1)).unwrap();
        assert!(!s.contains_point(&Vector3::new(2.0, 0.0, 0.0)));
        assert!(s.contains_point(&Vector3::new(1.999, 0.0, 0.0)));
    }

    #[test]
    fn opacity_volume_without_spheres_is_transfer_map() {
        let g = grid(4);
        let values: Vec<f32> = (0..g.len()).map(|v| v as f32).collect();
        let intensity = IntensityVolume::new(g, values.clone()).unwrap();
        let labels = LabelMap::new(g, vec![1; g.len()]).unwrap();
        let tf = OpacityTransferFunction::new(vec![(0.0, 0.0), (63.0, 1.0)]).unwrap();
        let ov = compute_opacity_volume(&intensity, &labels, &tf, &[], &Pose::default()).unwrap();
        let expected: Vec<f32> = values.iter().map(|&v| tf.eval(v)).collect();
        assert_eq!(ov.values(), &expected[..]);
    }

    #[test]
    fn enclosing_sphere_clears_everything() {
        let g = grid(4);
        let intensity = IntensityVolume::new(g, vec![50.0; g.len()]).unwrap();
        let labels = LabelMap::new(g, (0..g.len()).map(|v| (v % 5) as u16).collect()).unwrap();
        let tf = OpacityTransferFunction::new(vec![(0.0, 0.5), (100.0, 1.0)]).unwrap();
        let s = ClippingSphere::new([1.5; 3], 100.0, ClipMask::all(5)).unwrap();
        let ov = compute_opacity_volume(&intensity, &labels, &tf, &[s], &Pose::default()).unwrap();
        assert!(ov.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dims_mismatch() {
        let intensity = IntensityVolume::new(grid(2), vec![0.0; 8]).unwrap();
        let labels = LabelMap::new(grid(3), vec![0; 27]).unwrap();
        let tf = OpacityTransferFunction::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            compute_opacity_volume(&intensity, &labels, &tf, &[], &Pose::default()),
            Err(ClipError::Volume(VolumeError::DimsMismatch(..)))
        ));
    }

    #[test]
    fn rejects_non_positive_radius() {
        assert_eq!(ClippingSphere::new([0.0; 3], -1.0, ClipMask::none(1)), Err(ClipError::BadRadius(-1.0)));
    }
}
