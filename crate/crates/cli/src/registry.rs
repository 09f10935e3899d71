//! Preloaded datasets under a root directory, addressed by relative path.

use std::collections::{BTreeMap, HashMap};
use std::path::{Component, Path, PathBuf};

use carve_core::io::{self, ColorTable, NrrdData, NrrdError, NrrdVolume};
use carve_core::{Dataset, Scene};
use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot scan {path}: {message}")]
    Scan { path: PathBuf, message: String },
    #[error("path {0} is outside the dataset root")]
    OutsideRoot(PathBuf),
    #[error("unknown dataset file {0}")]
    Unknown(PathBuf),
    #[error("{0} is not a label volume")]
    NotLabels(PathBuf),
    #[error(transparent)]
    Volume(#[from] carve_core::volume::VolumeError),
}

/// One `<name>_intensity.nrrd`, `<name>_labels.nrrd`, `<name>_colors.txt` triple.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub intensity: PathBuf,
    pub labels: PathBuf,
    pub color_table: PathBuf,
    pub dims: [usize; 3],
    pub segments: Vec<SegmentInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentInfo {
    pub id: u16,
    pub name: Option<String>,
}

#[derive(Debug, Default)]
pub struct Registry {
    volumes: HashMap<PathBuf, NrrdVolume>,
    tables: HashMap<PathBuf, ColorTable>,
    datasets: Vec<DatasetInfo>,
}

/// Normalizes a scene path to a root-relative key. Absolute paths and any
/// `..` component are rejected.
pub fn relative_key(path: &Path) -> Result<PathBuf, RegistryError> {
    let mut key = PathBuf::new();
    for c in path.components() {
        match c {
            Component::Normal(p) => key.push(p),
            Component::CurDir => {}
            _ => return Err(RegistryError::OutsideRoot(path.to_path_buf())),
        }
    }
    if key.as_os_str().is_empty() {
        return Err(RegistryError::OutsideRoot(path.to_path_buf()));
    }
    Ok(key)
}

impl Registry {
    /// Loads every `.nrrd` volume and `*_colors.txt` table below `root`.
    /// Unreadable files are skipped with a warning.
    pub fn scan(root: &Path) -> Result<Self, RegistryError> {
        let mut reg = Registry::default();
        for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
            let entry = entry.map_err(|e| RegistryError::Scan { path: root.to_path_buf(), message: e.to_string() })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.path();
            let Ok(key) = path.strip_prefix(root).map(Path::to_path_buf) else { continue };
            let name = key.to_string_lossy();
            if name.ends_with(".nrrd") {
                match io::read_nrrd(path) {
                    Ok(v) => {
                        reg.volumes.insert(key, v);
                    }
                    Err(e) => log::warn!("skipping {e}"),
                }
            } else if name.ends_with("_colors.txt") {
                match io::read_color_table(path) {
                    Ok(t) => {
                        reg.tables.insert(key, t);
                    }
                    Err(e) => log::warn!("skipping {e}"),
                }
            }
        }
        reg.datasets = reg.collect_datasets();
        Ok(reg)
    }

    fn collect_datasets(&self) -> Vec<DatasetInfo> {
        let mut out = BTreeMap::new();
        for (labels_key, vol) in &self.volumes {
            let s = labels_key.to_string_lossy();
            let Some(name) = s.strip_suffix("_labels.nrrd") else { continue };
            let intensity = PathBuf::from(format!("{name}_intensity.nrrd"));
            let color_table = PathBuf::from(format!("{name}_colors.txt"));
            let (Some(iv), Some(table)) = (self.volumes.get(&intensity), self.tables.get(&color_table)) else {
                continue;
            };
            if iv.grid.dims != vol.grid.dims {
                log::warn!("{name}: intensity and label dimensions differ");
                continue;
            }
            let Ok(labels) = vol.clone().into_labels() else { continue };
            let segments = labels
                .present_labels()
                .into_iter()
                .map(|id| SegmentInfo { id, name: table.get(id).map(|e| e.name.clone()) })
                .collect();
            out.insert(
                name.to_string(),
                DatasetInfo {
                    name: name.to_string(),
                    intensity,
                    labels: labels_key.clone(),
                    color_table,
                    dims: vol.grid.dims,
                    segments,
                },
            );
        }
        out.into_values().collect()
    }

    pub fn datasets(&self) -> &[DatasetInfo] {
        &self.datasets
    }

    fn volume(&self, path: &Path) -> Result<&NrrdVolume, RegistryError> {
        let key = relative_key(path)?;
        self.volumes.get(&key).ok_or(RegistryError::Unknown(key))
    }

    /// Assembles the dataset a scene refers to.
    pub fn dataset_for(&self, scene: &Scene) -> Result<Dataset, RegistryError> {
        let intensity = self.volume(&scene.intensity)?.clone().into_intensity().map_err(|e| match e {
            NrrdError::Volume(v) => RegistryError::Volume(v),
            _ => RegistryError::Unknown(scene.intensity.clone()),
        })?;
        let labels_vol = self.volume(&scene.labels)?;
        if !matches!(labels_vol.data, NrrdData::U8(_) | NrrdData::U16(_)) {
            return Err(RegistryError::NotLabels(scene.labels.clone()));
        }
        let labels = labels_vol.clone().into_labels().map_err(|_| RegistryError::NotLabels(scene.labels.clone()))?;
        let key = relative_key(&scene.color_table)?;
        let colors = self.tables.get(&key).cloned().ok_or(RegistryError::Unknown(key))?;
        Ok(Dataset::new(intensity, labels, colors)?)
    }
}
