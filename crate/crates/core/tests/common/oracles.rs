//! Brute-force reference implementations, written independently of the library
//! code paths they check. Shared by integration and acceptance tests.
#![allow(dead_code)]

use carve_core::{ClippingSphere, IntensityVolume, LabelMap, OpacityTransferFunction, Pose};

/// Rotates `v` by the quaternion `[w, x, y, z]` via `q v q*`.
fn quat_rotate(q: [f64; 4], v: [f64; 3]) -> [f64; 3] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    // q * (0, v)
    let tw = -x * v[0] - y * v[1] - z * v[2];
    let tx = w * v[0] + y * v[2] - z * v[1];
    let ty = w * v[1] + z * v[0] - x * v[2];
    let tz = w * v[2] + x * v[1] - y * v[0];
    // (q * v) * conj(q)
    [
        -tw * x + tx * w - ty * z + tz * y,
        -tw * y + ty * w - tz * x + tx * z,
        -tw * z + tz * w - tx * y + ty * x,
    ]
}

pub fn voxel_world(labels: &LabelMap, pose: &Pose, i: usize, j: usize, k: usize) -> [f64; 3] {
    let g = &labels.grid;
    let local = [
        g.origin[0] + i as f64 * g.spacing[0],
        g.origin[1] + j as f64 * g.spacing[1],
        g.origin[2] + k as f64 * g.spacing[2],
    ];
    let r = quat_rotate(pose.rotation, local);
    [0, 1, 2].map(|a| pose.translation[a] + pose.scale * r[a])
}

fn inside(s: &ClippingSphere, p: [f64; 3]) -> bool {
    let d = ((p[0] - s.center[0]).powi(2) + (p[1] - s.center[1]).powi(2) + (p[2] - s.center[2]).powi(2)).sqrt();
    d < s.radius
}

fn transfer(tf: &OpacityTransferFunction, x: f32) -> f32 {
    let p = tf.points();
    if x <= p[0].0 || x.is_nan() {
        return p[0].1;
    }
    for w in p.windows(2) {
        let ((x0, o0), (x1, o1)) = (w[0], w[1]);
        if x < x1 {
            return o0 + (o1 - o0) * ((x - x0) / (x1 - x0));
        }
    }
    p[p.len() - 1].1
}

/// Clipped(v) = OR over spheres of Inside(s, v) AND Mask(s, label(v)), voxel by voxel.
pub fn opacity_volume(
    intensity: &IntensityVolume,
    labels: &LabelMap,
    tf: &OpacityTransferFunction,
    spheres: &[ClippingSphere],
    pose: &Pose,
) -> Vec<f32> {
    let [nx, ny, nz] = labels.grid.dims;
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = voxel_world(labels, pose, i, j, k);
                let label = labels.get(i, j, k);
                let mut clipped = false;
                for s in spheres {
                    if inside(s, p) && s.mask.contains(label) {
                        clipped = true;
                    }
                }
                out.push(if clipped { 0.0 } else { transfer(tf, intensity.get(i, j, k)) });
            }
        }
    }
    out
}

/// Label-agnostic spherical clipping: every voxel inside any sphere is hidden.
pub fn label_agnostic_clip(
    intensity: &IntensityVolume,
    labels: &LabelMap,
    tf: &OpacityTransferFunction,
    centers_radii: &[([f64; 3], f64)],
    pose: &Pose,
) -> Vec<f32> {
    let [nx, ny, nz] = labels.grid.dims;
    let mut out = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = carve_core::volume::Grid::voxel_position(&labels.grid, i, j, k);
                let w = pose.transform().to_world(&p);
                let hidden = centers_radii
                    .iter()
                    .any(|(c, r)| (w - nalgebra::Vector3::from(*c)).norm_squared() < r * r);
                out.push(if hidden { 0.0 } else { tf.eval(intensity.get(i, j, k)) });
            }
        }
    }
    out
}

/// Voxel accessor with edge replication.
fn at(v: &[f32], dims: [usize; 3], i: isize, j: isize, k: isize) -> f32 {
    let c = |x: isize, n: usize| x.max(0).min(n as isize - 1) as usize;
    v[c(i, dims[0]) + dims[0] * (c(j, dims[1]) + dims[1] * c(k, dims[2]))]
}

/// Contrast-gated 3×3×3 tent smoothing by direct convolution.
pub fn antialias(v: &[f32], dims: [usize; 3], threshold: f32) -> Vec<f32> {
    let tent = |d: isize| if d == 0 { 2.0 } else { 1.0 };
    let mut out = Vec::with_capacity(v.len());
    for k in 0..dims[2] as isize {
        for j in 0..dims[1] as isize {
            for i in 0..dims[0] as isize {
                let neighbourhood = [
                    at(v, dims, i, j, k),
                    at(v, dims, i - 1, j, k),
                    at(v, dims, i + 1, j, k),
                    at(v, dims, i, j - 1, k),
                    at(v, dims, i, j + 1, k),
                    at(v, dims, i, j, k - 1),
                    at(v, dims, i, j, k + 1),
                ];
                let max = neighbourhood.iter().cloned().fold(f32::MIN, f32::max);
                let min = neighbourhood.iter().cloned().fold(f32::MAX, f32::min);
                if max - min > threshold {
                    let mut sum = 0.0f64;
                    for dk in -1..=1 {
                        for dj in -1..=1 {
                            for di in -1..=1 {
                                sum += tent(dk) * tent(dj) * tent(di) * f64::from(at(v, dims, i + di, j + dj, k + dk));
                            }
                        }
                    }
                    out.push((sum / 64.0) as f32);
                } else {
                    out.push(neighbourhood[0]);
                }
            }
        }
    }
    out
}

/// Sobel gradient: central difference along the axis, (1,2,1) smoothing across,
/// divided by 32.
pub fn sobel(v: &[f32], dims: [usize; 3]) -> Vec<[f64; 3]> {
    let s = [1.0, 2.0, 1.0];
    let d = [-1.0, 0.0, 1.0];
    let mut out = Vec::with_capacity(v.len());
    for k in 0..dims[2] as isize {
        for j in 0..dims[1] as isize {
            for i in 0..dims[0] as isize {
                let mut g = [0.0f64; 3];
                for c in 0..3usize {
                    for b in 0..3usize {
                        for a in 0..3usize {
                            let x = f64::from(at(v, dims, i + a as isize - 1, j + b as isize - 1, k + c as isize - 1));
                            g[0] += d[a] * s[b] * s[c] * x;
                            g[1] += s[a] * d[b] * s[c] * x;
                            g[2] += s[a] * s[b] * d[c] * x;
                        }
                    }
                }
                out.push(g.map(|x| x / 32.0));
            }
        }
    }
    out
}

/// Normals from the Sobel oracle: -g/|g|, zero where |g| <= 1e-6.
pub fn normals(v: &[f32], dims: [usize; 3]) -> Vec<[f64; 3]> {
    sobel(v, dims)
        .into_iter()
        .map(|g| {
            let m = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if m > 1e-6 { g.map(|x| -x / m) } else { [0.0; 3] }
        })
        .collect()
}

/// Number of differing pixels between two label buffers.
pub fn seg_diff_count(a: &[u16], b: &[u16]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
