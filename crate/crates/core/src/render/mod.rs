//! The four-stage rendering pipeline: clip → smooth → normals → ray cast.

pub mod camera;
pub mod march;

use rayon::prelude::*;
use thiserror::Error;

use crate::clip::{compute_opacity_volume, ClipError, ClippingSphere, OpacityVolume};
use crate::filter::{antialias_opacity, compute_normals, AaParams, NormalVolume};
use crate::frame::{ColorBuffer, DepthBuffer, FrameSet, SegBuffer};
use crate::io::color_table::ColorTable;
use crate::io::scene::Scene;
use crate::transfer::OpacityTransferFunction;
use crate::volume::{IntensityVolume, LabelMap, Pose, PoseTransform, VolumeError};

pub use camera::{intersect_aabb, Camera, CameraError, Ray};
pub use march::{Compositor, RayResult};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Clip(#[from] ClipError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("invalid render parameters: {0}")]
    Params(String),
    #[error("invalid pose")]
    Pose,
    #[error("failed to build thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingParams {
    pub ka: f32,
    pub kd: f32,
    pub ks: f32,
    pub shininess: f32,
    /// Straight RGBA.
    pub background: [f32; 4],
}

impl Default for ShadingParams {
    fn default() -> Self {
        Self { ka: 0.2, kd: 0.7, ks: 0.3, shininess: 32.0, background: [0.0, 0.0, 0.0, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderParams {
    pub step_size_voxels: f64,
    pub early_term_alpha: f32,
    pub tau_hit: f32,
    pub aa: AaParams,
    pub shading: ShadingParams,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self { step_size_voxels: 0.5, early_term_alpha: 0.99, tau_hit: 0.05, aa: AaParams::default(), shading: ShadingParams::default() }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<(), RenderError> {
        let unit = |v: f32| (0.0..=1.0).contains(&v);
        let s = &self.shading;
        let problem = if !(self.step_size_voxels > 0.0 && self.step_size_voxels.is_finite()) {
            "step_size_voxels must be positive"
        } else if !(self.early_term_alpha > 0.0 && self.early_term_alpha <= 1.0) {
            "early_term_alpha must be in (0, 1]"
        } else if !(self.tau_hit > 0.0 && self.tau_hit <= 1.0) {
            "tau_hit must be in (0, 1]"
        } else if !self.aa.is_valid() {
            "aa contrast threshold must be in (0, 1]"
        } else if !(unit(s.ka) && unit(s.kd) && unit(s.ks)) {
            "shading coefficients must be in [0, 1]"
        } else if !(s.shininess >= 1.0) {
            "shininess must be at least 1"
        } else if !s.background.iter().all(|&c| unit(c)) {
            "background channels must be in [0, 1]"
        } else {
            return Ok(());
        };
        Err(RenderError::Params(problem.into()))
    }
}

/// A loaded intensity volume with its label map and segment colors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub intensity: IntensityVolume,
    pub labels: LabelMap,
    pub colors: ColorTable,
}

impl Dataset {
    pub fn new(intensity: IntensityVolume, labels: LabelMap, colors: ColorTable) -> Result<Self, VolumeError> {
        intensity.grid.same_dims(&labels.grid)?;
        Ok(Self { intensity, labels, colors })
    }
}

/// Output of the volume stages (clip, smooth, normals), ready for ray casting.
#[derive(Debug, Clone)]
pub struct PreparedVolume<'a> {
    pub labels: &'a LabelMap,
    /// Clipped and (optionally) smoothed opacity.
    pub opacity: OpacityVolume,
    pub normals: NormalVolume,
    pub palette: Vec<[f32; 3]>,
    pub pose: Pose,
    transform: PoseTransform,
    /// Volume-space box outside which every interpolated opacity is zero.
    occupied: Option<([f64; 3], [f64; 3])>,
}

impl<'a> PreparedVolume<'a> {
    pub fn new(
        dataset: &'a Dataset,
        tf: &OpacityTransferFunction,
        spheres: &[ClippingSphere],
        pose: &Pose,
        aa: &AaParams,
    ) -> Result<Self, RenderError> {
        if !pose.is_valid() {
            return Err(RenderError::Pose);
        }
        let clipped = compute_opacity_volume(&dataset.intensity, &dataset.labels, tf, spheres, pose)?;
        let opacity = antialias_opacity(&clipped, aa);
        let normals = compute_normals(&opacity);
        let occupied = occupied_bounds(&opacity);
        Ok(Self {
            labels: &dataset.labels,
            opacity,
            normals,
            palette: dataset.colors.palette(dataset.labels.max_label()),
            pose: *pose,
            transform: pose.transform(),
            occupied,
        })
    }

    pub fn for_scene(scene: &Scene, dataset: &'a Dataset) -> Result<Self, RenderError> {
        scene.render.validate()?;
        Self::new(dataset, &scene.transfer_function, &scene.spheres, &scene.pose, &scene.render.aa)
    }

    /// Casts one ray per pixel. Pixels are independent, so the frame is identical
    /// for any thread count.
    pub fn render_frame(&self, camera: &Camera, params: &RenderParams) -> Result<FrameSet, RenderError> {
        camera.validate()?;
        let basis = camera.basis();
        let (w, h) = (camera.width, camera.height);
        let results: Vec<RayResult> = (0..w as usize * h as usize)
            .into_par_iter()
            .map(|p| {
                let (px, py) = ((p % w as usize) as u32, (p / w as usize) as u32);
                self.march_ray(&basis.ray(px, py), params)
            })
            .collect();
        let quantize = |c: f32| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
        Ok(FrameSet {
            color: ColorBuffer { width: w, height: h, data: results.iter().map(|r| r.color.map(quantize)).collect() },
            depth: DepthBuffer { width: w, height: h, data: results.iter().map(|r| r.depth).collect() },
            seg: SegBuffer { width: w, height: h, data: results.iter().map(|r| r.first_label).collect() },
        })
    }
}

/// Bounds of the non-zero voxels grown by one voxel, so every sample outside
/// them interpolates only zeros.
fn occupied_bounds(ov: &OpacityVolume) -> Option<([f64; 3], [f64; 3])> {
    let g = &ov.grid;
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for k in 0..g.dims[2] {
        for j in 0..g.dims[1] {
            let row = &ov.values()[g.index(0, j, k)..g.index(0, j, k) + g.dims[0]];
            let (Some(first), Some(last)) = (row.iter().position(|&v| v != 0.0), row.iter().rposition(|&v| v != 0.0)) else {
                continue;
            };
            any = true;
            for (a, (l, h)) in [(first, last), (j, j), (k, k)].into_iter().enumerate() {
                lo[a] = lo[a].min(l);
                hi[a] = hi[a].max(h);
            }
        }
    }
    any.then(|| {
        (
            std::array::from_fn(|a| g.origin[a] + (lo[a] as f64 - 1.0) * g.spacing[a]),
            std::array::from_fn(|a| g.origin[a] + (hi[a] as f64 + 1.0) * g.spacing[a]),
        )
    })
}

/// Runs the whole pipeline for `scene` on the current rayon pool.
pub fn render(scene: &Scene, dataset: &Dataset) -> Result<FrameSet, RenderError> {
    PreparedVolume::for_scene(scene, dataset)?.render_frame(&scene.camera, &scene.render)
}

/// [`render`] on a dedicated pool of `threads` workers.
pub fn render_with_threads(scene: &Scene, dataset: &Dataset, threads: usize) -> Result<FrameSet, RenderError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| render(scene, dataset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::ClipMask;
    use crate::phantom::{default_color_table, default_scene, phantom_generate, PhantomSpec};

    #[test]
    fn empty_space_skipping_changes_nothing() {
        let spec = PhantomSpec::cube(40);
        let (intensity, labels) = phantom_generate(&spec).unwrap();
        let ds = Dataset::new(intensity, labels, default_color_table(&spec)).unwrap();
        let sphere = ClippingSphere::new([3.0, -2.0, 9.0], 7.0, ClipMask::all(5)).unwrap();
        let mut scene = default_scene(&spec, "p", vec![sphere]);
        scene.camera.width = 48;
        scene.camera.height = 40;
        scene.camera.position = [31.0, 22.0, 40.0];
        let skipping = PreparedVolume::for_scene(&scene, &ds).unwrap();
        let mut full = PreparedVolume::for_scene(&scene, &ds).unwrap();
        let (lo, hi) = ds.labels.grid.bounds();
        full.occupied = Some((lo, hi));
        assert_ne!(skipping.occupied, full.occupied);
        assert_eq!(
            skipping.render_frame(&scene.camera, &scene.render).unwrap(),
            full.render_frame(&scene.camera, &scene.render).unwrap()
        );
    }

    #[test]
    fn fully_transparent_volume_has_no_occupied_box() {
        let grid = crate::volume::Grid::new([3, 3, 3], [1.0; 3], [0.0; 3]).unwrap();
        assert_eq!(occupied_bounds(&OpacityVolume::new(grid, vec![0.0; 27]).unwrap()), None);
        let mut v = vec![0.0; 27];
        v[grid.index(1, 2, 0)] = 0.5;
        assert_eq!(occupied_bounds(&OpacityVolume::new(grid, v).unwrap()), Some(([0.0, 1.0, -1.0], [2.0, 3.0, 1.0])));
    }
}
