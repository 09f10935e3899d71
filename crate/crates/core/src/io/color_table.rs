//! Segment color tables in the 3D Slicer text layout: `id name R G B A` per line,
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ColorTableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: label {label} is defined twice")]
    DuplicateLabel { line: usize, label: u16 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorEntry {
    pub name: String,
    /// Channels in `[0, 1]`.
    pub rgb: [f32; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColorTable {
    entries: BTreeMap<u16, ColorEntry>,
}

impl ColorTable {
    pub fn parse(text: &str) -> Result<Self, ColorTableError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ColorTableError::Parse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields `id name R G B A`, found {}", fields.len())));
            }
            let label: u16 = fields[0].parse().map_err(|_| err(format!("invalid label id `{}`", fields[0])))?;
            if label == u16::MAX {
                return Err(err("label 65535 is reserved".into()));
            }
            let mut channels = [0u8; 4];
            for (c, f) in channels.iter_mut().zip(&fields[2..]) {
                *c = f.parse().map_err(|_| err(format!("channel `{f}` is not an integer in 0..=255")))?;
            }
            let entry = ColorEntry {
                name: fields[1].to_string(),
                rgb: [0, 1, 2].map(|c| f32::from(channels[c]) / 255.0),
            };
            if entries.insert(label, entry).is_some() {
                return Err(ColorTableError::DuplicateLabel { line, label });
            }
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, label: u16, name: impl Into<String>, rgb: [f32; 3]) {
        self.entries.insert(label, ColorEntry { name: name.into(), rgb });
    }

    pub fn get(&self, label: u16) -> Option<&ColorEntry> {
        self.entries.get(&label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, &ColorEntry)> {
        self.entries.iter().map(|(&l, e)| (l, e))
    }

    /// Labels in `labels` that have no entry.
    pub fn missing<'a>(&'a self, labels: &'a [u16]) -> impl Iterator<Item = u16> + 'a {
        labels.iter().copied().filter(|l| !self.entries.contains_key(l))
    }

    /// Dense lookup table indexed by label. Labels without an entry render white;
    /// label 0 is black unless the table says otherwise.
    pub fn palette(&self, max_label: u16) -> Vec<[f32; 3]> {
        let mut p = vec![[1.0; 3]; usize::from(max_label) + 1];
        p[0] = [0.0; 3];
        for (&l, e) in self.entries.range(..=max_label) {
            p[usize::from(l)] = e.rgb;
        }
        p
    }

    /// Text form with channels rounded back to 0..=255 and alpha 255 (0 for label 0).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# label name R G B A\n");
        for (&l, e) in &self.entries {
            let [r, g, b] = e.rgb.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8);
            let a = if l == 0 { 0 } else { 255 };
            let _ = writeln!(out, "{l} {} {r} {g} {b} {a}", e.name);
        }
        out
    }
}
