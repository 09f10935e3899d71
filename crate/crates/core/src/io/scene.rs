//! JSON scene documents: dataset references, transfer function, pose, clipping
//! spheres, camera and render parameters.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::{ClipMask, ClippingSphere};
use crate::filter::AaParams;
use crate::render::{Camera, RenderParams, ShadingParams};
use crate::transfer::OpacityTransferFunction;
use crate::volume::{Pose, MISS_LABEL};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid scene value: {0}")]
    Value(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub intensity: PathBuf,
    pub labels: PathBuf,
    pub color_table: PathBuf,
    pub transfer_function: OpacityTransferFunction,
    pub pose: Pose,
    /// Fixed spheres first; by convention the last entry is the active sphere.
    pub spheres: Vec<ClippingSphere>,
    pub camera: Camera,
    pub render: RenderParams,
}

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    intensity: PathBuf,
    labels: PathBuf,
    color_table: PathBuf,
    transfer_function: Vec<[f32; 2]>,
    pose: Pose,
    spheres: Vec<SphereDoc>,
    camera: Camera,
    render: RenderDoc,
}

#[derive(Serialize, Deserialize)]
struct SphereDoc {
    center: [f64; 3],
    radius: f64,
    clipped_labels: Vec<u16>,
}

#[derive(Serialize, Deserialize)]
struct RenderDoc {
    step_size_voxels: f64,
    early_term_alpha: f32,
    tau_hit: f32,
    aa_enabled: bool,
    #[serde(default = "default_aa_threshold")]
    aa_contrast_threshold: f32,
    shading: ShadingDoc,
}

fn default_aa_threshold() -> f32 {
    AaParams::default().contrast_threshold
}

fn default_background() -> [f32; 4] {
    ShadingParams::default().background
}

#[derive(Serialize, Deserialize)]
struct ShadingDoc {
    ka: f32,
    kd: f32,
    ks: f32,
    shininess: f32,
    #[serde(default = "default_background")]
    background: [f32; 4],
}

impl Scene {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let doc: SceneDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, SceneError> {
        Self::from_doc(serde_json::from_value(value)?)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("scene documents always serialize")
    }

    /// Pretty-printed JSON. Floats are written in shortest round-trip form, so
    /// parsing the output reproduces the scene exactly.
    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scene documents always serialize")
    }

    fn from_doc(doc: SceneDoc) -> Result<Self, SceneError> {
        let value = |m: String| SceneError::Value(m);
        let transfer_function = OpacityTransferFunction::new(doc.transfer_function.iter().map(|p| (p[0], p[1])).collect())
            .map_err(|e| value(format!("transfer_function: {e}")))?;
        if !doc.pose.is_valid() {
            return Err(value("pose: rotation must be a unit quaternion and scale positive".into()));
        }
        let spheres = doc
            .spheres
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                if s.clipped_labels.contains(&MISS_LABEL) {
                    return Err(value(format!("spheres[{i}]: label {MISS_LABEL} is reserved")));
                }
                ClippingSphere::new(s.center, s.radius, ClipMask::from_labels(s.clipped_labels))
                    .map_err(|e| value(format!("spheres[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        doc.camera.validate().map_err(|e| value(format!("camera: {e}")))?;
        let r = doc.render;
        let render = RenderParams {
            step_size_voxels: r.step_size_voxels,
            early_term_alpha: r.early_term_alpha,
            tau_hit: r.tau_hit,
            aa: AaParams { contrast_threshold: r.aa_contrast_threshold, enabled: r.aa_enabled },
            shading: ShadingParams {
                ka: r.shading.ka,
                kd: r.shading.kd,
                ks: r.shading.ks,
                shininess: r.shading.shininess,
                background: r.shading.background,
            },
        };
        render.validate().map_err(|e| value(format!("render: {e}")))?;
        Ok(Self {
            intensity: doc.intensity,
            labels: doc.labels,
            color_table: doc.color_table,
            transfer_function,
            pose: doc.pose,
            spheres,
            camera: doc.camera,
            render,
        })
    }

    fn to_doc(&self) -> SceneDoc {
        let r = &self.render;
        SceneDoc {
            intensity: self.intensity.clone(),
            labels: self.labels.clone(),
            color_table: self.color_table.clone(),
            transfer_function: self.transfer_function.points().iter().map(|&(x, o)| [x, o]).collect(),
            pose: self.pose,
            spheres: self
                .spheres
                .iter()
                .map(|s| SphereDoc { center: s.center, radius: s.radius, clipped_labels: s.mask.labels().collect() })
                .collect(),
            camera: self.camera.clone(),
            render: RenderDoc {
                step_size_voxels: r.step_size_voxels,
                early_term_alpha: r.early_term_alpha,
                tau_hit: r.tau_hit,
                aa_enabled: r.aa.enabled,
                aa_contrast_threshold: r.aa.contrast_threshold,
                shading: ShadingDoc {
                    ka: r.shading.ka,
                    kd: r.shading.kd,
                    ks: r.shading.ks,
                    shininess: r.shading.shininess,
                    background: r.shading.background,
                },
            },
        }
    }
}
