//! Volume filters applied after clipping: contrast-gated smoothing of the opacity
//! volume and gradient-based normal estimation.
//!
//! Both filters read neighbours with edge replication (indices clamped to the grid).

use rayon::prelude::*;

use crate::clip::OpacityVolume;
use crate::volume::Grid;

/// Gradients at or below this magnitude produce a zero normal.
pub const MIN_GRADIENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaParams {
    pub contrast_threshold: f32,
    pub enabled: bool,
}

impl Default for AaParams {
    fn default() -> Self {
        Self { contrast_threshold: 0.125, enabled: true }
    }
}

impl AaParams {
    pub fn is_valid(&self) -> bool {
        self.contrast_threshold > 0.0 && self.contrast_threshold <= 1.0
    }
}

/// Per-voxel unit normals, or `[0, 0, 0]` where the opacity is locally flat.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalVolume {
    pub grid: Grid,
    normals: Vec<[f32; 3]>,
}

impl NormalVolume {
    pub fn normals(&self) -> &[[f32; 3]] {
        &self.normals
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> [f32; 3] {
        self.normals[self.grid.index(i, j, k)]
    }
}

const TENT: [f64; 3] = [1.0, 2.0, 1.0];

#[inline]
fn clamp_offset(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).clamp(0, n as isize - 1) as usize
}

/// Smooths the opacity volume where the local contrast exceeds the threshold.
///
/// Contrast is `max - min` over the voxel and its six face neighbours. Gated voxels
/// are replaced by the 3×3×3 tent average (weights `(1,2,1)^⊗3 / 64`); all others
/// are copied unchanged. Disabled parameters return a copy of the input.
pub fn antialias_opacity(ov: &OpacityVolume, params: &AaParams) -> OpacityVolume {
    if !params.enabled {
        return ov.clone();
    }
    let grid = ov.grid;
    let [nx, ny, nz] = grid.dims;
    let src = ov.values();
    let threshold = params.contrast_threshold;
    let mut out = vec![0f32; grid.len()];
    out.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slice)| {
        for j in 0..ny {
            for i in 0..nx {
                let center = src[grid.index(i, j, k)];
                let mut lo = center;
                let mut hi = center;
                for (di, dj, dk) in [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)] {
                    let v = src[grid.index(clamp_offset(i, di, nx), clamp_offset(j, dj, ny), clamp_offset(k, dk, nz))];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                slice[i + nx * j] = if hi - lo > threshold {
                    let mut sum = 0f64;
                    for dk in -1..=1isize {
                        let kk = clamp_offset(k, dk, nz);
                        for dj in -1..=1isize {
                            let jj = clamp_offset(j, dj, ny);
                            for di in -1..=1isize {
                                let ii = clamp_offset(i, di, nx);
                                let w = TENT[(dk + 1) as usize] * TENT[(dj + 1) as usize] * TENT[(di + 1) as usize];
                                sum += w * f64::from(src[grid.index(ii, jj, kk)]);
                            }
                        }
                    }
                    (sum / 64.0) as f32
                } else {
                    center
                };
            }
        }
    });
    OpacityVolume::from_parts(grid, out)
}

/// 3D Sobel gradient at a voxel, scaled so a unit-slope ramp has magnitude 1.
pub fn sobel_gradient(ov: &OpacityVolume, i: usize, j: usize, k: usize) -> [f64; 3] {
    let grid = ov.grid;
    let [nx, ny, nz] = grid.dims;
    let v = |di: isize, dj: isize, dk: isize| {
        f64::from(ov.values()[grid.index(clamp_offset(i, di, nx), clamp_offset(j, dj, ny), clamp_offset(k, dk, nz))])
    };
    let mut g = [0f64; 3];
    for a in -1..=1isize {
        for b in -1..=1isize {
            let w = TENT[(a + 1) as usize] * TENT[(b + 1) as usize];
            g[0] += w * (v(1, a, b) - v(-1, a, b));
            g[1] += w * (v(a, 1, b) - v(a, -1, b));
            g[2] += w * (v(a, b, 1) - v(a, b, -1));
        }
    }
    g.map(|c| c / 32.0)
}

/// Sobel gradient for a voxel whose full 3×3×3 window lies inside the grid.
#[inline]
fn sobel_interior(src: &[f32], idx: usize, sy: usize, sz: usize) -> [f64; 3] {
    let mut g = [0f64; 3];
    for (a, wa) in [(-1isize, 1.0), (0, 2.0), (1, 1.0)] {
        for (b, wb) in [(-1isize, 1.0), (0, 2.0), (1, 1.0)] {
            let w = wa * wb;
            let at = |off: isize| f64::from(src[(idx as isize + off) as usize]);
            let (sy, sz) = (sy as isize, sz as isize);
            g[0] += w * (at(1 + a * sy + b * sz) - at(-1 + a * sy + b * sz));
            g[1] += w * (at(a + sy + b * sz) - at(a - sy + b * sz));
            g[2] += w * (at(a + b * sy + sz) - at(a + b * sy - sz));
        }
    }
    g.map(|c| c / 32.0)
}

/// Outward surface normals: the negated, normalized opacity gradient.
pub fn compute_normals(ov: &OpacityVolume) -> NormalVolume {
    let grid = ov.grid;
    let [nx, ny, nz] = grid.dims;
    let src = ov.values();
    let mut normals = vec![[0f32; 3]; grid.len()];
    normals.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slice)| {
        let k_interior = k > 0 && k + 1 < nz;
        for j in 0..ny {
            let j_interior = k_interior && j > 0 && j + 1 < ny;
            for i in 0..nx {
                let g = if j_interior && i > 0 && i + 1 < nx {
                    sobel_interior(src, grid.index(i, j, k), nx, nx * ny)
                } else {
                    sobel_gradient(ov, i, j, k)
                };
                let mag = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                slice[i + nx * j] = if mag > MIN_GRADIENT { g.map(|c| (-c / mag) as f32) } else { [0.0; 3] };
            }
        }
    });
    NormalVolume { grid, normals }
}
