//! Frame buffer files: color as 8-bit RGBA PNG, depth as little-endian
//! grayscale PFM, first-hit segments as 16-bit binary PGM.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::frame::{BufferSizeError, ColorBuffer, DepthBuffer, FrameSet, SegBuffer};

#[derive(Debug, Error)]
pub enum BufferError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("PNG encoding failed: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("PNG decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("unsupported PNG layout {0:?}/{1:?}, expected 8-bit RGBA")]
    PngLayout(png::ColorType, png::BitDepth),
    #[error("malformed {kind} data: {message}")]
    Format { kind: &'static str, message: String },
    #[error(transparent)]
    Size(#[from] BufferSizeError),
}

fn format_error(kind: &'static str, message: impl Into<String>) -> BufferError {
    BufferError::Format { kind, message: message.into() }
}

pub fn encode_png(color: &ColorBuffer) -> Result<Vec<u8>, BufferError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, color.width, color.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(color.data.as_flattened())?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<ColorBuffer, BufferError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let size = reader.output_buffer_size().ok_or_else(|| format_error("PNG", "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
        return Err(BufferError::PngLayout(info.color_type, info.bit_depth));
    }
    let data = buf[..info.buffer_size()].chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
    Ok(ColorBuffer::new(info.width, info.height, data)?)
}

/// Grayscale PFM with a negative scale (little-endian); rows run bottom to top.
pub fn encode_pfm(depth: &DepthBuffer) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", depth.width, depth.height).into_bytes();
    let w = depth.width as usize;
    for row in depth.data.chunks_exact(w.max(1)).rev() {
        for v in row {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

/// Reads whitespace-separated header tokens; returns them with the payload offset.
fn netpbm_header<'a>(bytes: &'a [u8], count: usize, kind: &'static str) -> Result<(Vec<&'a str>, usize), BufferError> {
    let mut tokens = Vec::with_capacity(count);
    let mut pos = 0;
    while tokens.len() < count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_error(kind, "header ended early"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| format_error(kind, "header is not ASCII"))?);
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_error(kind, "missing separator before samples"));
    }
    Ok((tokens, pos + 1))
}

fn parse_dim(token: &str, kind: &'static str) -> Result<u32, BufferError> {
    token.parse().map_err(|_| format_error(kind, format!("bad dimension `{token}`")))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<DepthBuffer, BufferError> {
    let (tokens, start) = netpbm_header(bytes, 4, "PFM")?;
    if tokens[0] != "Pf" {
        return Err(format_error("PFM", format!("expected grayscale `Pf`, found `{}`", tokens[0])));
    }
    let (w, h) = (parse_dim(tokens[1], "PFM")?, parse_dim(tokens[2], "PFM")?);
    let scale: f32 = tokens[3].parse().map_err(|_| format_error("PFM", "bad scale"))?;
    let n = w as usize * h as usize;
    let payload = &bytes[start..];
    if payload.len() < n * 4 {
        return Err(format_error("PFM", format!("expected {} sample bytes, found {}", n * 4, payload.len())));
    }
    let read = |c: &[u8]| {
        let b = [c[0], c[1], c[2], c[3]];
        if scale < 0.0 { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) }
    };
    let bottom_up: Vec<f32> = payload[..n * 4].chunks_exact(4).map(read).collect();
    let data = bottom_up.chunks_exact((w as usize).max(1)).rev().flatten().copied().collect();
    Ok(DepthBuffer::new(w, h, data)?)
}

/// Binary PGM with maxval 65535 (big-endian samples).
pub fn encode_pgm16(seg: &SegBuffer) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", seg.width, seg.height).into_bytes();
    for v in &seg.data {
        out.extend(v.to_be_bytes());
    }
    out
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<SegBuffer, BufferError> {
    let (tokens, start) = netpbm_header(bytes, 4, "PGM")?;
    if tokens[0] != "P5" {
        return Err(format_error("PGM", format!("expected binary `P5`, found `{}`", tokens[0])));
    }
    let (w, h) = (parse_dim(tokens[1], "PGM")?, parse_dim(tokens[2], "PGM")?);
    if tokens[3] != "65535" {
        return Err(format_error("PGM", format!("expected maxval 65535, found {}", tokens[3])));
    }
    let n = w as usize * h as usize;
    let payload = &bytes[start..];
    if payload.len() < n * 2 {
        return Err(format_error("PGM", format!("expected {} sample bytes, found {}", n * 2, payload.len())));
    }
    let data = payload[..n * 2].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok(SegBuffer::new(w, h, data)?)
}

/// File names written for a frame with the given prefix.
pub fn frameset_paths(prefix: &Path) -> [PathBuf; 3] {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    [with(".png"), with("_depth.pfm"), with("_seg.pgm")]
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BufferError> {
    fs::write(path, bytes).map_err(|source| BufferError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, BufferError> {
    fs::read(path).map_err(|source| BufferError::Io { path: path.to_path_buf(), source })
}

/// Writes `<prefix>.png`, `<prefix>_depth.pfm` and `<prefix>_seg.pgm`.
pub fn write_frameset(fs: &FrameSet, prefix: &Path) -> Result<[PathBuf; 3], BufferError> {
    if !fs.is_consistent() {
        return Err(format_error("frame", "buffers differ in size"));
    }
    let paths = frameset_paths(prefix);
    write_file(&paths[0], &encode_png(&fs.color)?)?;
    write_file(&paths[1], &encode_pfm(&fs.depth))?;
    write_file(&paths[2], &encode_pgm16(&fs.seg))?;
    Ok(paths)
}

pub fn read_frameset(prefix: &Path) -> Result<FrameSet, BufferError> {
    let [png, pfm, pgm] = frameset_paths(prefix);
    Ok(FrameSet {
        color: decode_png(&read_file(&png)?)?,
        depth: decode_pfm(&read_file(&pfm)?)?,
        seg: decode_pgm16(&read_file(&pgm)?)?,
    })
}

pub fn read_depth(path: &Path) -> Result<DepthBuffer, BufferError> {
    decode_pfm(&read_file(path)?)
}

pub fn read_seg(path: &Path) -> Result<SegBuffer, BufferError> {
    decode_pgm16(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn red_png_round_trip() {
        let c = ColorBuffer::new(2, 2, vec![[255, 0, 0, 255]; 4]).unwrap();
        let back = decode_png(&encode_png(&c).unwrap()).unwrap();
        assert_eq!(back.data, vec![[255, 0, 0, 255]; 4]);
    }

    #[test]
    fn unit_depth_pfm() {
        let d = DepthBuffer::filled(3, 2, 1.0);
        let bytes = encode_pfm(&d);
        assert!(bytes.starts_with(b"Pf\n3 2\n-1.0\n"));
        let payload = &bytes[bytes.len() - 24..];
        assert!(payload.chunks_exact(4).all(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) == 1.0));
        assert_eq!(decode_pfm(&bytes).unwrap(), d);
    }

    #[test]
    fn pfm_rows_are_bottom_up() {
        let d = DepthBuffer::new(1, 2, vec![0.25, 0.75]).unwrap();
        let bytes = encode_pfm(&d);
        let n = bytes.len();
        assert_eq!(f32::from_le_bytes(bytes[n - 8..n - 4].try_into().unwrap()), 0.75);
        assert_eq!(decode_pfm(&bytes).unwrap(), d);
    }

    #[test]
    fn seg_pgm_samples() {
        let s = SegBuffer::new(2, 2, vec![1, 65535, 0, 2]).unwrap();
        let bytes = encode_pgm16(&s);
        assert!(bytes.starts_with(b"P5\n2 2\n65535\n"));
        assert_eq!(decode_pgm16(&bytes).unwrap().data, vec![1, 65535, 0, 2]);
    }

    #[test]
    fn rejects_truncated_buffers() {
        let mut bytes = encode_pgm16(&SegBuffer::filled(2, 2, 3));
        bytes.pop();
        assert!(matches!(decode_pgm16(&bytes), Err(BufferError::Format { kind: "PGM", .. })));
        assert!(matches!(decode_pfm(b"PF\n1 1\n-1.0\n\0\0\0\0"), Err(BufferError::Format { kind: "PFM", .. })));
    }

    #[test]
    fn frameset_files() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("f");
        let fs = FrameSet {
            color: ColorBuffer::new(2, 1, vec![[1, 2, 3, 4], [250, 251, 252, 253]]).unwrap(),
            depth: DepthBuffer::new(2, 1, vec![0.123, 1.0]).unwrap(),
            seg: SegBuffer::new(2, 1, vec![9, 65535]).unwrap(),
        };
        let paths = write_frameset(&fs, &prefix).unwrap();
        assert!(paths[0].ends_with("f.png") && paths[1].ends_with("f_depth.pfm") && paths[2].ends_with("f_seg.pgm"));
        assert_eq!(read_frameset(&prefix).unwrap(), fs);
    }
}
