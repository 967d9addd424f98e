//! HDR color + depth images and their on-disk encodings.

mod exr_file;
mod png_file;
mod tonemap;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lens::Resolution;

pub use exr_file::{quantize_to_half, read_exr, write_exr, write_exr_to};
pub use png_file::{srgb_encode, srgb_to_byte, write_png, write_png_to};
pub use tonemap::{luminance, reinhard_extended, tonemap, ToneMapParams};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("{}: unsupported channel layout: {reason}", path.display())]
    UnsupportedChannels { path: PathBuf, reason: String },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: Resolution, found: Resolution },
    #[error("{plane} plane has {found} samples, expected {expected}")]
    PlaneSize {
        plane: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{}: {source}", path.display())]
    Exr {
        path: PathBuf,
        #[source]
        source: exr::error::Error,
    },
    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether a depth plane holds camera-space Z or Euclidean ray length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthInterpretation {
    #[default]
    Z,
    Raylen,
}

/// Linear-radiance RGB with an optional depth plane and a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PlenImage {
    resolution: Resolution,
    pub rgb: Vec<[f32; 3]>,
    pub depth: Option<Vec<f32>>,
    pub valid: Vec<bool>,
}

impl PlenImage {
    /// All-black, all-valid image without depth.
    pub fn new(resolution: Resolution) -> Self {
        let n = resolution.pixel_count();
        PlenImage {
            resolution,
            rgb: vec![[0.0; 3]; n],
            depth: None,
            valid: vec![true; n],
        }
    }

    pub fn from_planes(
        resolution: Resolution,
        rgb: Vec<[f32; 3]>,
        depth: Option<Vec<f32>>,
        valid: Vec<bool>,
    ) -> Result<Self, ImageError> {
        let n = resolution.pixel_count();
        check_plane("rgb", n, rgb.len())?;
        check_plane("valid", n, valid.len())?;
        if let Some(d) = &depth {
            check_plane("depth", n, d.len())?;
        }
        Ok(PlenImage {
            resolution,
            rgb,
            depth,
            valid,
        })
    }

    pub fn with_depth(mut self, depth: Vec<f32>) -> Result<Self, ImageError> {
        check_plane("depth", self.rgb.len(), depth.len())?;
        self.depth = Some(depth);
        Ok(self)
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn width(&self) -> u32 {
        self.resolution.width
    }

    pub fn height(&self) -> u32 {
        self.resolution.height
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.resolution.width as usize + x as usize
    }

    #[inline]
    pub fn rgb_at(&self, x: u32, y: u32) -> [f32; 3] {
        self.rgb[self.index(x, y)]
    }

    #[inline]
    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn depth_at(&self, x: u32, y: u32) -> Option<f32> {
        let i = self.index(x, y);
        self.depth.as_ref().map(|d| d[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

fn check_plane(plane: &'static str, expected: usize, found: usize) -> Result<(), ImageError> {
    if expected == found {
        Ok(())
    } else {
        Err(ImageError::PlaneSize { plane, expected, found })
    }
}

pub(crate) fn check_exists(path: &Path) -> Result<(), ImageError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ImageError::NotFound(path.to_path_buf()))
    }
}
