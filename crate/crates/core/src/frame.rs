//! Output buffers of a render: color, normalized depth, and first-hit segment ids.

use thiserror::Error;

use crate::volume::MISS_LABEL;

#[derive(Debug, Error, PartialEq)]
#[error("buffer size {actual} does not match {width}x{height}")]
pub struct BufferSizeError {
    pub width: u32,
    pub height: u32,
    pub actual: usize,
}

fn check(width: u32, height: u32, actual: usize) -> Result<(), BufferSizeError> {
    if width as usize * height as usize != actual {
        return Err(BufferSizeError { width, height, actual });
    }
    Ok(())
}

/// Per-pixel label of the first visible sample, row-major from the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl SegBuffer {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self, BufferSizeError> {
        check(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, label: u16) -> Self {
        Self { width, height, data: vec![label; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[(y * self.width + x) as usize]
    }
}

/// Per-pixel first-hit depth in `[0, 1]` along the ray's volume span; misses are 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthBuffer {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, BufferSizeError> {
        check(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, depth: f32) -> Self {
        Self { width, height, data: vec![depth; width as usize * height as usize] }
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }
}

/// Straight 8-bit RGBA, row-major from the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[u8; 4]>,
}

impl ColorBuffer {
    pub fn new(width: u32, height: u32, data: Vec<[u8; 4]>) -> Result<Self, BufferSizeError> {
        check(width, height, data.len())?;
        Ok(Self { width, height, data })
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        self.data[(y * self.width + x) as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub color: ColorBuffer,
    pub depth: DepthBuffer,
    pub seg: SegBuffer,
}

impl FrameSet {
    pub fn width(&self) -> u32 {
        self.color.width
    }

    pub fn height(&self) -> u32 {
        self.color.height
    }

    /// All three buffers share a size and `depth == 1.0` exactly where the
    /// segment buffer holds the miss sentinel.
    pub fn is_consistent(&self) -> bool {
        let (w, h) = (self.width(), self.height());
        self.depth.width == w
            && self.depth.height == h
            && self.seg.width == w
            && self.seg.height == h
            && self.depth.data.iter().zip(&self.seg.data).all(|(&d, &s)| (d == 1.0) == (s == MISS_LABEL))
    }
}
