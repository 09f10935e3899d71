//! Reader and writer for the NRRD subset used here: three dimensions, raw
//! little-endian samples attached after the header, axis-aligned voxel spacing.

use std::fmt::Write as _;

use thiserror::Error;

use crate::volume::{Grid, IntensityVolume, LabelMap, VolumeError};

#[derive(Debug, Error, PartialEq)]
pub enum NrrdError {
    #[error("not a NRRD file (missing NRRD000x magic)")]
    BadMagic,
    #[error("unsupported NRRD field `{field}`: {value}")]
    UnsupportedField { field: String, value: String },
    #[error("missing required NRRD field `{0}`")]
    MissingField(&'static str),
    #[error("malformed NRRD field `{field}`: {value}")]
    Malformed { field: String, value: String },
    #[error("payload holds {actual} bytes but the header needs {expected}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("sample type {0} cannot hold segment labels")]
    NotLabels(&'static str),
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

/// Raw samples in their on-disk type, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub enum NrrdData {
    U8(Vec<u8>),
    I16(Vec<i16>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl NrrdData {
    fn type_name(&self) -> &'static str {
        match self {
            NrrdData::U8(_) => "uchar",
            NrrdData::I16(_) => "short",
            NrrdData::U16(_) => "ushort",
            NrrdData::F32(_) => "float",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NrrdData::U8(v) => v.len(),
            NrrdData::I16(v) => v.len(),
            NrrdData::U16(v) => v.len(),
            NrrdData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn to_le_bytes(&self) -> Vec<u8> {
        match self {
            NrrdData::U8(v) => v.clone(),
            NrrdData::I16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            NrrdData::U16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            NrrdData::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrrdVolume {
    pub grid: Grid,
    pub data: NrrdData,
}

impl NrrdVolume {
    pub fn into_intensity(self) -> Result<IntensityVolume, NrrdError> {
        let values = match self.data {
            NrrdData::U8(v) => v.into_iter().map(f32::from).collect(),
            NrrdData::I16(v) => v.into_iter().map(f32::from).collect(),
            NrrdData::U16(v) => v.into_iter().map(f32::from).collect(),
            NrrdData::F32(v) => v,
        };
        Ok(IntensityVolume::new(self.grid, values)?)
    }

    pub fn into_labels(self) -> Result<LabelMap, NrrdError> {
        let labels = match self.data {
            NrrdData::U8(v) => v.into_iter().map(u16::from).collect(),
            NrrdData::U16(v) => v,
            other => return Err(NrrdError::NotLabels(other.type_name())),
        };
        Ok(LabelMap::new(self.grid, labels)?)
    }

    pub fn from_labels(labels: &LabelMap) -> Self {
        Self { grid: labels.grid, data: NrrdData::U16(labels.labels().to_vec()) }
    }

    pub fn from_intensity(volume: &IntensityVolume) -> Self {
        Self { grid: volume.grid, data: NrrdData::F32(volume.values().to_vec()) }
    }
}

fn unsupported(field: &str, value: &str) -> NrrdError {
    NrrdError::UnsupportedField { field: field.to_string(), value: value.to_string() }
}

fn malformed(field: &str, value: &str) -> NrrdError {
    NrrdError::Malformed { field: field.to_string(), value: value.to_string() }
}

fn parse_triple<T: std::str::FromStr>(field: &str, value: &str) -> Result<[T; 3], NrrdError> {
    let parts: Vec<T> = value
        .split_whitespace()
        .map(|p| p.parse().map_err(|_| malformed(field, value)))
        .collect::<Result<_, _>>()?;
    <[T; 3]>::try_from(parts).map_err(|_| unsupported(field, value))
}

/// Parses a `(a,b,c)` vector.
fn parse_vector(field: &str, text: &str) -> Result<[f64; 3], NrrdError> {
    let inner = text.trim().strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(|| malformed(field, text))?;
    let parts: Vec<f64> = inner
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| malformed(field, text)))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| unsupported(field, text))
}

fn parse_directions(value: &str) -> Result<[f64; 3], NrrdError> {
    const FIELD: &str = "space directions";
    let vectors: Vec<&str> = value.split(')').map(str::trim).filter(|s| !s.is_empty()).collect();
    if vectors.len() != 3 {
        return Err(unsupported(FIELD, value));
    }
    let mut spacing = [0.0; 3];
    for (axis, v) in vectors.iter().enumerate() {
        let dir = parse_vector(FIELD, &format!("{v})"))?;
        for (c, &d) in dir.iter().enumerate() {
            if c != axis && d != 0.0 {
                return Err(unsupported(FIELD, value));
            }
        }
        if !(dir[axis] > 0.0) {
            return Err(unsupported(FIELD, value));
        }
        spacing[axis] = dir[axis];
    }
    Ok(spacing)
}

/// Parses a NRRD file held in memory.
pub fn parse_nrrd(bytes: &[u8]) -> Result<NrrdVolume, NrrdError> {
    let magic_ok = bytes.len() >= 8 && &bytes[..7] == b"NRRD000" && bytes[7].is_ascii_digit();
    if !magic_ok {
        return Err(NrrdError::BadMagic);
    }

    let mut pos = 0;
    let mut lines = Vec::new();
    // header ends at the first empty line
    loop {
        let Some(nl) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(NrrdError::TruncatedData { expected: 1, actual: 0 });
        };
        let line = std::str::from_utf8(&bytes[pos..pos + nl]).map_err(|_| malformed("header", "not UTF-8"))?;
        let line = line.strip_suffix('\r').unwrap_or(line);
        pos += nl + 1;
        if line.is_empty() {
            break;
        }
        lines.push(line);
    }

    let mut kind = None;
    let mut dimension = None;
    let mut sizes = None;
    let mut encoding = None;
    let mut endian = None;
    let mut spacing = None;
    let mut origin = [0.0; 3];
    for line in lines.iter().skip(1) {
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let Some((field, value)) = line.split_once(": ") else {
            return Err(malformed("header", line));
        };
        let value = value.trim();
        match field.trim() {
            "type" => kind = Some(value),
            "dimension" => dimension = Some(value),
            "sizes" => sizes = Some(value),
            "encoding" => encoding = Some(value),
            "endian" => endian = Some(value),
            "spacings" => spacing = Some(parse_triple::<f64>("spacings", value)?),
            "space directions" => spacing = Some(parse_directions(value)?),
            "space origin" => origin = parse_vector("space origin", value)?,
            f @ ("data file" | "datafile" | "line skip" | "lineskip" | "byte skip" | "byteskip") => {
                return Err(unsupported(f, value));
            }
            _ => {}
        }
    }

    match dimension {
        Some("3") => {}
        Some(d) => return Err(unsupported("dimension", d)),
        None => return Err(NrrdError::MissingField("dimension")),
    }
    match encoding {
        Some("raw") => {}
        Some(e) => return Err(unsupported("encoding", e)),
        None => return Err(NrrdError::MissingField("encoding")),
    }
    let kind = kind.ok_or(NrrdError::MissingField("type"))?;
    let elem = match kind {
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => 1,
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => 2,
        "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => 2,
        "float" => 4,
        other => return Err(unsupported("type", other)),
    };
    if elem > 1 {
        match endian {
            Some("little") => {}
            Some(e) => return Err(unsupported("endian", e)),
            None => return Err(NrrdError::MissingField("endian")),
        }
    }
    let sizes = parse_triple::<usize>("sizes", sizes.ok_or(NrrdError::MissingField("sizes"))?)?;
    let grid = Grid::new(sizes, spacing.unwrap_or([1.0; 3]), origin)?;

    let expected = grid.len() * elem;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(NrrdError::TruncatedData { expected, actual: payload.len() });
    }
    let payload = &payload[..expected];
    let data = match (elem, kind.contains("unsigned") || kind.starts_with('u')) {
        (1, _) => NrrdData::U8(payload.to_vec()),
        (4, _) => NrrdData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()),
        (_, true) => NrrdData::U16(payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
        (_, false) => NrrdData::I16(payload.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect()),
    };
    Ok(NrrdVolume { grid, data })
}

/// Serializes a volume in the same subset `parse_nrrd` accepts. Geometry is
/// written in shortest round-trip form.
pub fn write_nrrd(volume: &NrrdVolume) -> Vec<u8> {
    let g = &volume.grid;
    let mut header = String::from("NRRD0004\n# written by carve\n");
    let _ = writeln!(header, "type: {}", volume.data.type_name());
    header.push_str("dimension: 3\nspace dimension: 3\n");
    let _ = writeln!(header, "sizes: {} {} {}", g.dims[0], g.dims[1], g.dims[2]);
    let [sx, sy, sz] = g.spacing;
    let _ = writeln!(header, "space directions: ({sx},0,0) (0,{sy},0) (0,0,{sz})");
    let [ox, oy, oz] = g.origin;
    let _ = writeln!(header, "space origin: ({ox},{oy},{oz})");
    header.push_str("endian: little\nencoding: raw\n\n");
    let mut out = header.into_bytes();
    out.extend(volume.data.to_le_bytes());
    out
}
