//! Carving session: one movable active sphere plus a stack of fixed spheres, each
//! with its own clipping mask.

use thiserror::Error;

use crate::clip::{ClipError, ClipMask, ClippingSphere, DEFAULT_MAX_RADIUS, DEFAULT_MIN_RADIUS};
use crate::io::scene::Scene;
use crate::render::{Dataset, PreparedVolume, Ray, RenderError, RenderParams};
use crate::transfer::OpacityTransferFunction;
use crate::volume::{Pose, MISS_LABEL};

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("label {label} is outside the session's label universe 0..={universe}")]
    LabelOutOfRange { label: u16, universe: u16 },
    #[error("there is no fixed sphere to remove")]
    NothingToRemove,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub min_radius: f64,
    pub max_radius: f64,
    /// Radius factor for the sphere spawned after fixing.
    pub shrink_factor: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self { min_radius: DEFAULT_MIN_RADIUS, max_radius: DEFAULT_MAX_RADIUS, shrink_factor: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskReset {
    AllClippable,
    NoneClippable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickResult {
    pub label: Option<u16>,
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarveSession {
    fixed: Vec<ClippingSphere>,
    // active sphere spawned by each fix, parallel to `fixed`
    spawned: Vec<ClippingSphere>,
    active: ClippingSphere,
    label_universe: u16,
    config: SessionConfig,
}

impl CarveSession {
    /// Fresh session whose active sphere clips every label.
    pub fn new(label_universe: u16, center: [f64; 3], radius: f64, config: SessionConfig) -> Self {
        let mask = ClipMask::all(usize::from(label_universe) + 1);
        let radius = radius.clamp(config.min_radius, config.max_radius);
        Self { fixed: Vec::new(), spawned: Vec::new(), active: ClippingSphere { center, radius, mask }, label_universe, config }
    }

    pub fn fixed_spheres(&self) -> &[ClippingSphere] {
        &self.fixed
    }

    pub fn active_sphere(&self) -> &ClippingSphere {
        &self.active
    }

    pub fn label_universe(&self) -> u16 {
        self.label_universe
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Fixed spheres in placement order followed by the active sphere.
    pub fn spheres(&self) -> Vec<ClippingSphere> {
        let mut all = self.fixed.clone();
        all.push(self.active.clone());
        all
    }

    pub fn toggle_label(&mut self, label: u16) -> Result<(), SessionError> {
        self.active.mask.toggle(label).map_err(|e| match e {
            ClipError::LabelOutOfRange { label, .. } => SessionError::LabelOutOfRange { label, universe: self.label_universe },
            other => unreachable!("toggle only fails on range: {other}"),
        })
    }

    pub fn reset_mask(&mut self, target: MaskReset) {
        self.active.mask.fill(target == MaskReset::AllClippable);
    }

    pub fn set_active_sphere(&mut self, center: [f64; 3], radius: f64) {
        self.active.center = center;
        self.active.radius = radius.clamp(self.config.min_radius, self.config.max_radius);
    }

    /// Freezes the active sphere and spawns a smaller one at the same center with a
    /// copy of its mask.
    pub fn fix_active_sphere(&mut self) {
        let next = ClippingSphere {
            center: self.active.center,
            radius: (self.active.radius * self.config.shrink_factor).clamp(self.config.min_radius, self.config.max_radius),
            mask: self.active.mask.clone(),
        };
        self.spawned.push(next.clone());
        self.fixed.push(std::mem::replace(&mut self.active, next));
    }

    /// Pops the last fixed sphere. If the active sphere is still the untouched copy
    /// spawned by that fix, the popped sphere becomes active again.
    pub fn remove_last_sphere(&mut self) -> Result<ClippingSphere, SessionError> {
        let removed = self.fixed.pop().ok_or(SessionError::NothingToRemove)?;
        let spawned = self.spawned.pop();
        if spawned.as_ref() == Some(&self.active) {
            self.active = removed.clone();
        }
        Ok(removed)
    }

    /// Scene equal to `base` but with this session's spheres.
    pub fn snapshot(&self, base: &Scene) -> Scene {
        Scene { spheres: self.spheres(), ..base.clone() }
    }

    /// The segment a ray would select under the session's current clip state.
    pub fn pick_segment(
        &self,
        ray: &Ray,
        dataset: &Dataset,
        tf: &OpacityTransferFunction,
        pose: &Pose,
        params: &RenderParams,
    ) -> Result<PickResult, RenderError> {
        let prepared = PreparedVolume::new(dataset, tf, &self.spheres(), pose, &params.aa)?;
        Ok(pick(&prepared, ray, params))
    }
}

/// First sample along `ray` whose corrected opacity reaches `tau_hit`, using the
/// same march as rendering.
pub fn pick(prepared: &PreparedVolume<'_>, ray: &Ray, params: &RenderParams) -> PickResult {
    let r = prepared.march_ray(ray, params);
    match (r.first_label, r.hit_position) {
        (label, Some(p)) if label != MISS_LABEL => PickResult { label: Some(label), position: Some([p.x, p.y, p.z]) },
        _ => PickResult { label: None, position: None },
    }
}
