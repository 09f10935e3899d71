use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("camera position coincides with look_at")]
    DegenerateView,
    #[error("camera up vector is parallel to the view direction")]
    ParallelUp,
    #[error("vertical field of view must be in (0, 180) degrees, got {0}")]
    BadFov(f64),
    #[error("image size must be non-zero, got {0}x{1}")]
    BadSize(u32, u32),
}

/// Pinhole camera in world millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub vfov_deg: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    /// Unit length.
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Self {
        Self { origin, direction: direction.normalize() }
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.direction * t
    }
}

/// Orthonormal right-handed camera frame looking down `forward`.
#[derive(Debug, Clone, Copy)]
pub struct CameraBasis {
    pub origin: Vector3<f64>,
    pub forward: Vector3<f64>,
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    half_height: f64,
    half_width: f64,
    width: u32,
    height: u32,
}

impl Camera {
    pub fn validate(&self) -> Result<(), CameraError> {
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::BadSize(self.width, self.height));
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 180.0) {
            return Err(CameraError::BadFov(self.vfov_deg));
        }
        let view = Vector3::from(self.look_at) - Vector3::from(self.position);
        if view.norm() == 0.0 {
            return Err(CameraError::DegenerateView);
        }
        if view.normalize().cross(&Vector3::from(self.up)).norm() < 1e-9 {
            return Err(CameraError::ParallelUp);
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let origin = Vector3::from(self.position);
        let forward = (Vector3::from(self.look_at) - origin).normalize();
        let right = forward.cross(&Vector3::from(self.up)).normalize();
        let up = right.cross(&forward);
        let half_height = (self.vfov_deg.to_radians() * 0.5).tan();
        let half_width = half_height * f64::from(self.width) / f64::from(self.height);
        CameraBasis { origin, forward, right, up, half_height, half_width, width: self.width, height: self.height }
    }

    pub fn generate_ray(&self, px: u32, py: u32) -> Ray {
        self.basis().ray(px, py)
    }
}

impl CameraBasis {
    /// Ray through the center of pixel `(px, py)`; row 0 is the top of the image.
    pub fn ray(&self, px: u32, py: u32) -> Ray {
        debug_assert!(px < self.width && py < self.height, "pixel ({px}, {py}) out of range");
        let x = ((f64::from(px) + 0.5) / f64::from(self.width)) * 2.0 - 1.0;
        let y = 1.0 - ((f64::from(py) + 0.5) / f64::from(self.height)) * 2.0;
        let dir = self.forward + self.right * (x * self.half_width) + self.up * (y * self.half_height);
        Ray::new(self.origin, dir)
    }
}

/// Slab test against an axis-aligned box. Returns the parametric entry and exit
/// distances, with entry clamped to 0 when the origin is inside.
pub fn intersect_aabb(ray: &Ray, lo: [f64; 3], hi: [f64; 3]) -> Option<(f64, f64)> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for a in 0..3 {
        let o = ray.origin[a];
        let d = ray.direction[a];
        if d == 0.0 {
            if o < lo[a] || o > hi[a] {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo[a] - o) / d, (hi[a] - o) / d);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
    }
    if t_exit < t_enter.max(0.0) {
        return None;
    }
    Some((t_enter.max(0.0), t_exit))
}
