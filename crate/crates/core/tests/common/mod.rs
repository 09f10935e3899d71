#![allow(dead_code)]

pub mod oracles;

use carve_core::phantom::{default_color_table, phantom_generate, PhantomSpec};
use carve_core::{ClipMask, ClippingSphere, Dataset, Grid, IntensityVolume, LabelMap, OpacityTransferFunction, Pose};
use rand::Rng;

/// A random clipping scenario on a small grid.
pub struct ClipCase {
    pub intensity: IntensityVolume,
    pub labels: LabelMap,
    pub tf: OpacityTransferFunction,
    pub spheres: Vec<ClippingSphere>,
    pub pose: Pose,
    pub max_label: u16,
}

pub fn random_pose(rng: &mut impl Rng) -> Pose {
    let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-3);
    Pose {
        translation: std::array::from_fn(|_| rng.gen_range(-3.0..3.0)),
        rotation: q.map(|c| c / n),
        scale: rng.gen_range(0.5..2.0),
    }
}

pub fn random_mask(rng: &mut impl Rng, max_label: u16) -> ClipMask {
    let mut m = ClipMask::none(usize::from(max_label) + 1);
    for l in 0..=max_label {
        m.set(l, rng.gen_bool(0.5)).unwrap();
    }
    m
}

pub fn random_case(rng: &mut impl Rng, max_dim: usize, max_spheres: usize) -> ClipCase {
    let dims = std::array::from_fn(|_| rng.gen_range(1..=max_dim));
    let spacing = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
    let origin = std::array::from_fn(|_| rng.gen_range(-4.0..0.0));
    let grid = Grid::new(dims, spacing, origin).unwrap();
    let max_label = rng.gen_range(1..6u16);
    let intensity = IntensityVolume::new(grid, (0..grid.len()).map(|_| rng.gen_range(-50.0..250.0)).collect()).unwrap();
    let labels = LabelMap::new(grid, (0..grid.len()).map(|_| rng.gen_range(0..=max_label)).collect()).unwrap();
    let tf = OpacityTransferFunction::new(vec![
        (0.0, 0.0),
        (rng.gen_range(10.0..90.0), rng.gen_range(0.0..1.0)),
        (100.0, rng.gen_range(0.0..1.0)),
        (200.0, 1.0),
    ])
    .unwrap();
    let pose = random_pose(rng);
    let extent = dims.iter().zip(&spacing).map(|(&n, s)| n as f64 * s).fold(0.0, f64::max) * pose.scale;
    let n_spheres = rng.gen_range(0..=max_spheres);
    let spheres = (0..n_spheres)
        .map(|_| {
            let center = std::array::from_fn(|a| pose.translation[a] + rng.gen_range(-extent..extent));
            ClippingSphere::new(center, rng.gen_range(0.5..extent.max(1.0)), random_mask(rng, max_label)).unwrap()
        })
        .collect();
    ClipCase { intensity, labels, tf, spheres, pose, max_label }
}

pub fn random_opacity(rng: &mut impl Rng, dims: [usize; 3]) -> carve_core::OpacityVolume {
    let grid = Grid::new(dims, [1.0; 3], [0.0; 3]).unwrap();
    carve_core::OpacityVolume::new(grid, (0..grid.len()).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

pub fn phantom_dataset(n: usize) -> (PhantomSpec, Dataset) {
    let spec = PhantomSpec::cube(n);
    let (intensity, labels) = phantom_generate(&spec).unwrap();
    let colors = default_color_table(&spec);
    (spec.clone(), Dataset::new(intensity, labels, colors).unwrap())
}

/// An all-clippable sphere on the camera side that removes the outer shell along
/// the view axis but stops inside the second shell.
pub fn near_hemisphere_sphere(spec: &PhantomSpec) -> ClippingSphere {
    let h = spec.half_extent();
    let outer = spec.shells[0].fraction * h;
    let second_inner = spec.shells[2].fraction * h;
    let second_outer = spec.shells[1].fraction * h;
    // deepest point of the sphere on the axis lies midway through the second shell's
    // outer half
    let deepest = second_outer - 0.25 * (second_outer - second_inner);
    let center_z = outer + 0.5 * (outer - deepest);
    let radius = center_z - deepest;
    ClippingSphere::new([0.0, 0.0, center_z], radius, ClipMask::all(usize::from(spec.max_label()) + 1)).unwrap()
}
