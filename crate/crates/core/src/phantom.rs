//! Synthetic nested-shell dataset with analytically known geometry.
//!
//! Voxel centers are placed symmetrically around the world origin. A voxel at
//! normalized distance `d` from the center (world distance divided by the
//! half-extent, i.e. half the shortest side of the volume) takes the label and
//! intensity of the innermost shell whose radius fraction is still `>= d`;
//! voxels outside every shell are background.

use std::path::PathBuf;

use thiserror::Error;

use crate::clip::ClippingSphere;
use crate::io::color_table::ColorTable;
use crate::io::scene::Scene;
use crate::render::{Camera, RenderParams};
use crate::transfer::OpacityTransferFunction;
use crate::volume::{Grid, IntensityVolume, LabelMap, Pose, VolumeError};

#[derive(Debug, Error, PartialEq)]
pub enum PhantomError {
    #[error("bad phantom spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    /// Outer radius as a fraction of the half-extent.
    pub fraction: f64,
    pub label: u16,
    pub intensity: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Outermost first; fractions strictly decreasing.
    pub shells: Vec<Shell>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self::cube(128)
    }
}

impl PhantomSpec {
    /// Default shells on an `n³` grid of 1 mm voxels.
    pub fn cube(n: usize) -> Self {
        let shells = [(0.45, 1, 40.0), (0.35, 2, 80.0), (0.25, 3, 120.0), (0.12, 4, 200.0)]
            .into_iter()
            .map(|(fraction, label, intensity)| Shell { fraction, label, intensity })
            .collect();
        Self { dims: [n; 3], spacing: [1.0; 3], shells }
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: &str| Err(PhantomError::BadSpec(m.to_string()));
        if self.shells.is_empty() {
            return bad("at least one shell is required");
        }
        if self.shells.windows(2).any(|w| !(w[0].fraction > w[1].fraction)) {
            return bad("shell fractions must be strictly decreasing");
        }
        if self.shells.iter().any(|s| !(s.fraction > 0.0)) {
            return bad("shell fractions must be positive");
        }
        let mut labels: Vec<u16> = self.shells.iter().map(|s| s.label).collect();
        if labels.iter().any(|&l| l == 0 || l == u16::MAX) {
            return bad("shell labels must be in 1..65535");
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("shell labels must be distinct");
        }
        Grid::new(self.dims, self.spacing, [0.0; 3])?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, PhantomError> {
        let origin = [0, 1, 2].map(|a| -(self.dims[a] as f64 - 1.0) * 0.5 * self.spacing[a]);
        Ok(Grid::new(self.dims, self.spacing, origin)?)
    }

    /// Half the shortest world-space side of the volume.
    pub fn half_extent(&self) -> f64 {
        (0..3).map(|a| self.dims[a] as f64 * self.spacing[a] * 0.5).fold(f64::INFINITY, f64::min)
    }

    /// Shell containing a normalized distance, if any.
    pub fn shell_at(&self, d: f64) -> Option<&Shell> {
        self.shells.iter().rev().find(|s| s.fraction >= d)
    }

    pub fn max_label(&self) -> u16 {
        self.shells.iter().map(|s| s.label).max().unwrap_or(0)
    }

    /// World radius of a shell's outer surface.
    pub fn shell_radius(&self, index: usize) -> f64 {
        self.shells[index].fraction * self.half_extent()
    }
}

pub fn phantom_generate(spec: &PhantomSpec) -> Result<(IntensityVolume, LabelMap), PhantomError> {
    spec.validate()?;
    let grid = spec.grid()?;
    let half = spec.half_extent();
    let mut values = Vec::with_capacity(grid.len());
    let mut labels = Vec::with_capacity(grid.len());
    for k in 0..grid.dims[2] {
        for j in 0..grid.dims[1] {
            for i in 0..grid.dims[0] {
                let d = grid.voxel_position(i, j, k).norm() / half;
                let (v, l) = spec.shell_at(d).map_or((0.0, 0), |s| (s.intensity, s.label));
                values.push(v);
                labels.push(l);
            }
        }
    }
    Ok((IntensityVolume::new(grid, values)?, LabelMap::new(grid, labels)?))
}

pub fn default_color_table(spec: &PhantomSpec) -> ColorTable {
    const PALETTE: [(&str, [u8; 3]); 4] =
        [("skin", [230, 180, 150]), ("muscle", [190, 60, 55]), ("bone", [240, 235, 210]), ("organ", [110, 70, 170])];
    let mut t = ColorTable::default();
    t.insert(0, "background", [0.0; 3]);
    for (n, shell) in spec.shells.iter().enumerate() {
        let (name, rgb) = PALETTE.get(n).copied().unwrap_or(("segment", [200, 200, 200]));
        t.insert(shell.label, format!("{name}_{}", shell.label), rgb.map(|c| f32::from(c) / 255.0));
    }
    t
}

/// Transfer function for the default shells. Shell opacities stay below the
/// smoothing contrast threshold, and only a sample with at least 15/16 of its
/// interpolation weight on shell voxels reaches the hit threshold at the default
/// step, so the first-hit voxel is never background or clipped.
pub fn default_transfer_function() -> OpacityTransferFunction {
    OpacityTransferFunction::new(vec![(0.0, 0.0), (20.0, 0.0), (40.0, 0.104), (80.0, 0.106), (120.0, 0.108), (200.0, 0.11)])
        .expect("static control points are valid")
}

/// Frontal camera on +z framing the outermost shell with a 25% margin.
pub fn default_camera(spec: &PhantomSpec, width: u32, height: u32) -> Camera {
    let vfov_deg = 30.0;
    let outer = spec.shells.first().map_or(spec.half_extent(), |s| s.fraction * spec.half_extent());
    let box_half_depth = spec.dims[2] as f64 * spec.spacing[2] * 0.5;
    let distance = (1.25 * outer / (vfov_deg * 0.5f64).to_radians().sin()).max(2.0 * box_half_depth).ceil();
    Camera { position: [0.0, 0.0, distance], look_at: [0.0; 3], up: [0.0, 1.0, 0.0], vfov_deg, width, height }
}

/// Scene for a phantom written with file prefix `name` next to the scene file.
pub fn default_scene(spec: &PhantomSpec, name: &str, spheres: Vec<ClippingSphere>) -> Scene {
    Scene {
        intensity: PathBuf::from(format!("{name}_intensity.nrrd")),
        labels: PathBuf::from(format!("{name}_labels.nrrd")),
        color_table: PathBuf::from(format!("{name}_colors.txt")),
        transfer_function: default_transfer_function(),
        pose: Pose::default(),
        spheres,
        camera: default_camera(spec, 256, 256),
        render: RenderParams::default(),
    }
}
