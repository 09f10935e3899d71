//! Front-to-back ray marching through the prepared (clipped, smoothed) volume.

use nalgebra::Vector3;

use super::{PreparedVolume, RenderParams, ShadingParams};
use crate::render::camera::{intersect_aabb, Ray};
use crate::volume::{Grid, MISS_LABEL};

/// Largest f32 below 1.0; hit depths are capped here so that 1.0 means "miss".
const MAX_HIT_DEPTH: f32 = 1.0 - f32::EPSILON / 2.0;

/// What one ray produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayResult {
    /// Final RGBA after blending over the background.
    pub color: [f32; 4],
    /// Premultiplied color and alpha accumulated from the volume alone.
    pub accumulated: [f32; 4],
    pub depth: f32,
    pub first_label: u16,
    /// World position of the first-hit sample.
    pub hit_position: Option<Vector3<f64>>,
}

impl RayResult {
    fn background(bg: [f32; 4]) -> Self {
        Self { color: blend_over(&Compositor::default(), bg), accumulated: [0.0; 4], depth: 1.0, first_label: MISS_LABEL, hit_position: None }
    }
}

/// Front-to-back "under" accumulation of premultiplied color.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Compositor {
    pub color: [f32; 3],
    pub alpha: f32,
}

impl Compositor {
    /// Adds a sample with (step-corrected) opacity `alpha` and straight color `rgb`.
    #[inline]
    pub fn add(&mut self, alpha: f32, rgb: [f32; 3]) {
        let w = (1.0 - self.alpha) * alpha;
        for c in 0..3 {
            self.color[c] += w * rgb[c];
        }
        self.alpha += w;
    }
}

fn blend_over(acc: &Compositor, bg: [f32; 4]) -> [f32; 4] {
    let rest = 1.0 - acc.alpha;
    let mut out = [0.0; 4];
    for c in 0..3 {
        out[c] = (acc.color[c] + rest * bg[c] * bg[3]).clamp(0.0, 1.0);
    }
    out[3] = (acc.alpha + rest * bg[3]).clamp(0.0, 1.0);
    out
}

/// Opacity for a step of `ratio` reference steps.
#[inline]
pub fn correct_opacity(alpha: f32, ratio: f32) -> f32 {
    if ratio == 1.0 {
        alpha
    } else {
        1.0 - (1.0 - alpha).powf(ratio)
    }
}

/// Blinn-Phong with white specular. `normal` and `light` are unit vectors or, for
/// the normal, zero (ambient only).
#[inline]
pub fn shade(rgb: [f32; 3], normal: Option<Vector3<f32>>, light: &Vector3<f32>, view: &Vector3<f32>, p: &ShadingParams) -> [f32; 3] {
    let Some(n) = normal else {
        return rgb.map(|c| (p.ka * c).clamp(0.0, 1.0));
    };
    let diffuse = n.dot(light).max(0.0);
    let half = (light + view).try_normalize(1e-12).unwrap_or(*light);
    let specular = if p.ks > 0.0 { n.dot(&half).max(0.0).powf(p.shininess) } else { 0.0 };
    rgb.map(|c| (p.ka * c + p.kd * diffuse * c + p.ks * specular).clamp(0.0, 1.0))
}

/// Interpolation cell around a continuous voxel coordinate.
struct Cell {
    idx: [usize; 8],
    w: [f32; 8],
    nearest: usize,
}

impl Cell {
    #[inline]
    fn locate(grid: &Grid, p: &Vector3<f64>) -> Self {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut f = [0f32; 3];
        let mut near = [0usize; 3];
        for a in 0..3 {
            let n = grid.dims[a];
            let u = ((p[a] - grid.origin[a]) / grid.spacing[a]).clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n - 1);
            lo[a] = i0;
            hi[a] = (i0 + 1).min(n - 1);
            f[a] = (u - i0 as f64) as f32;
            near[a] = (u.round() as usize).min(n - 1);
        }
        let mut idx = [0usize; 8];
        let mut w = [0f32; 8];
        for c in 0..8 {
            let pick = |a: usize| if c >> a & 1 == 1 { (hi[a], f[a]) } else { (lo[a], 1.0 - f[a]) };
            let (i, wi) = pick(0);
            let (j, wj) = pick(1);
            let (k, wk) = pick(2);
            idx[c] = grid.index(i, j, k);
            w[c] = wi * wj * wk;
        }
        Self { idx, w, nearest: grid.index(near[0], near[1], near[2]) }
    }

    #[inline]
    fn scalar(&self, values: &[f32]) -> f32 {
        let mut s = 0.0;
        for c in 0..8 {
            s += self.w[c] * values[self.idx[c]];
        }
        s
    }

    #[inline]
    fn vector(&self, values: &[[f32; 3]]) -> Vector3<f32> {
        let mut s = Vector3::zeros();
        for c in 0..8 {
            let v = values[self.idx[c]];
            s += Vector3::new(v[0], v[1], v[2]) * self.w[c];
        }
        s
    }
}

impl PreparedVolume<'_> {
    /// Marches `ray` (world space) through the volume.
    ///
    /// Samples sit at `t_enter + k·Δ` for every `k` with the sample strictly before
    /// `t_exit`, where `Δ = step_size_voxels · min(spacing)` in volume space.
    pub fn march_ray(&self, ray: &Ray, params: &RenderParams) -> RayResult {
        let grid = &self.opacity.grid;
        let pose = &self.transform;
        let origin = pose.to_local(&ray.origin);
        let dir = pose.direction_to_local(&ray.direction);
        let local = Ray { origin, direction: dir };
        let (lo, hi) = grid.bounds();
        let Some((t_enter, t_exit)) = intersect_aabb(&local, lo, hi) else {
            return RayResult::background(params.shading.background);
        };

        let step = params.step_size_voxels * grid.min_spacing();
        let ratio = params.step_size_voxels as f32;
        // headlight: light and eye both sit along -dir
        let light = Vector3::new(-dir.x as f32, -dir.y as f32, -dir.z as f32);
        let inv_spacing = Vector3::new(
            (1.0 / grid.spacing[0]) as f32,
            (1.0 / grid.spacing[1]) as f32,
            (1.0 / grid.spacing[2]) as f32,
        );
        let opacity = self.opacity.values();
        let normals = self.normals.normals();
        let labels = self.labels.labels();

        let mut acc = Compositor::default();
        let mut first: Option<(u16, f64)> = None;
        // samples outside the occupied box contribute nothing; the sample
        // positions themselves stay t_enter + k·step
        let (mut k, t_last) = match self.occupied.and_then(|(lo, hi)| intersect_aabb(&local, lo, hi)) {
            Some((a, b)) => ((((a - t_enter) / step).floor() - 1.0).max(0.0) as u64, b.min(t_exit)),
            None => (0, f64::NEG_INFINITY),
        };
        loop {
            let t = t_enter + k as f64 * step;
            if t >= t_exit || t > t_last + step {
                break;
            }
            k += 1;
            let cell = Cell::locate(grid, &local.at(t));
            let alpha = cell.scalar(opacity);
            if alpha <= 0.0 {
                continue;
            }
            let alpha = correct_opacity(alpha.min(1.0), ratio);
            let label = labels[cell.nearest];
            if first.is_none() && alpha >= params.tau_hit {
                first = Some((label, t));
            }
            let n = cell.vector(normals);
            let normal = if n.norm() > 1e-6 {
                // index-space gradient direction to volume-space millimetres
                n.component_mul(&inv_spacing).try_normalize(1e-12)
            } else {
                None
            };
            let rgb = self.palette.get(usize::from(label)).copied().unwrap_or([1.0; 3]);
            acc.add(alpha, shade(rgb, normal, &light, &light, &params.shading));
            if acc.alpha >= params.early_term_alpha {
                break;
            }
        }

        let (depth, first_label, hit_position) = match first {
            Some((label, t)) => {
                let span = t_exit - t_enter;
                let d = if span > 0.0 { ((t - t_enter) / span) as f32 } else { 0.0 };
                (d.min(MAX_HIT_DEPTH), label, Some(ray.at(t * pose.scale)))
            }
            None => (1.0, MISS_LABEL, None),
        };
        RayResult {
            color: blend_over(&acc, params.shading.background),
            accumulated: [acc.color[0], acc.color[1], acc.color[2], acc.alpha],
            depth,
            first_label,
            hit_position,
        }
    }
}
