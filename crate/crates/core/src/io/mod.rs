//! File formats: volumes, color tables, scene documents and frame buffers.

pub mod buffers;
pub mod color_table;
pub mod nrrd;
pub mod scene;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::render::Dataset;
use crate::volume::VolumeError;

pub use buffers::{read_frameset, write_frameset, BufferError};
pub use color_table::{ColorTable, ColorTableError};
pub use nrrd::{parse_nrrd, write_nrrd, NrrdData, NrrdError, NrrdVolume};
pub use scene::{Scene, SceneError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Nrrd { path: PathBuf, source: NrrdError },
    #[error("{path}: {source}")]
    ColorTable { path: PathBuf, source: ColorTableError },
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    std::fs::read(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

pub fn read_nrrd(path: &Path) -> Result<NrrdVolume, LoadError> {
    parse_nrrd(&read(path)?).map_err(|source| LoadError::Nrrd { path: path.to_path_buf(), source })
}

pub fn read_color_table(path: &Path) -> Result<ColorTable, LoadError> {
    let text = String::from_utf8_lossy(&read(path)?).into_owned();
    ColorTable::parse(&text).map_err(|source| LoadError::ColorTable { path: path.to_path_buf(), source })
}

/// Loads the three dataset files. Relative paths are taken relative to `base`.
pub fn load_dataset(base: &Path, intensity: &Path, labels: &Path, colors: &Path) -> Result<Dataset, LoadError> {
    let intensity_path = base.join(intensity);
    let labels_path = base.join(labels);
    let intensity = read_nrrd(&intensity_path)?
        .into_intensity()
        .map_err(|source| LoadError::Nrrd { path: intensity_path.clone(), source })?;
    let labels = read_nrrd(&labels_path)?
        .into_labels()
        .map_err(|source| LoadError::Nrrd { path: labels_path.clone(), source })?;
    let colors = read_color_table(&base.join(colors))?;
    Ok(Dataset::new(intensity, labels, colors)?)
}

/// Loads the dataset a scene refers to, resolving paths against `base`.
pub fn load_scene_dataset(scene: &Scene, base: &Path) -> Result<Dataset, LoadError> {
    load_dataset(base, &scene.intensity, &scene.labels, &scene.color_table)
}
